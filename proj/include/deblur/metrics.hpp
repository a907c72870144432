#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/filtering.hpp"
#include "deblur/spectrum.hpp"
#include "deblur/types.hpp"

namespace deblur {

struct NoiseSpec {
    double rho = 0.0;       ///< relative noise level |eta| / |g|
    std::uint64_t seed = 0;
};

/// Counter-based generator: sample i is the SplitMix64 finalizer applied to
/// seed + (i + 1) * golden-gamma, so any sample is reproducible in isolation.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const {
        std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on (0, 1]: 53 high bits, offset by one ulp-step.
    double uniform_open0(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
    }
    /// Uniform on [0, 1).
    double uniform(std::uint64_t counter) const { return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53; }

    /// Standard normals by Box-Muller: pair j consumes counters 2j, 2j+1 and
    /// yields samples 2j (cosine branch) and 2j+1 (sine branch).
    std::vector<double> normals(std::size_t n) const {
        std::vector<double> out(n);
        for (std::size_t j = 0; 2 * j < n; ++j) {
            const double r = std::sqrt(-2.0 * std::log(uniform_open0(2 * j)));
            const double t = 2.0 * std::numbers::pi * uniform(2 * j + 1);
            out[2 * j] = r * std::cos(t);
            if (2 * j + 1 < n) out[2 * j + 1] = r * std::sin(t);
        }
        return out;
    }

private:
    std::uint64_t seed_;
};

/// Standard normal field, row-major fill.
inline Image normal_field(Size2 size, std::uint64_t seed) {
    const auto v = CounterRng(seed).normals(static_cast<std::size_t>(size.count()));
    return Eigen::Map<const Image>(v.data(), size.rows, size.cols);
}

template <class Img>
struct Noisy {
    Img noisy;
    double snr_db; ///< +infinity when rho = 0
};

inline double snr_db(double rho) {
    return rho == 0.0 ? std::numeric_limits<double>::infinity() : 20.0 * std::log10(1.0 / rho);
}

/// g + eta with eta = rho (|g| / |nu|) nu, nu standard normal from the seed.
inline Noisy<Image> add_noise(const Image& g, const NoiseSpec& spec) {
    detail::require(spec.rho >= 0.0 && std::isfinite(spec.rho), Errc::invalid_parameter, "noise level must be >= 0");
    if (spec.rho == 0.0) return {g, snr_db(0.0)};
    const Image nu = normal_field(size_of(g), spec.seed);
    const double scale = spec.rho * norm2(g) / norm2(nu);
    return {g + scale * nu, snr_db(spec.rho)};
}

/// Color noise: one normal vector over the RGB-stacked data.
inline Noisy<ColorImage> add_noise(const ColorImage& g, const NoiseSpec& spec) {
    detail::require(spec.rho >= 0.0 && std::isfinite(spec.rho), Errc::invalid_parameter, "noise level must be >= 0");
    g.check_consistent();
    if (spec.rho == 0.0) return {g, snr_db(0.0)};
    const Size2 s = g.size();
    const auto v = CounterRng(spec.seed).normals(static_cast<std::size_t>(3 * s.count()));
    ColorImage nu;
    for (int c = 0; c < 3; ++c) nu.channels[c] = Eigen::Map<const Image>(v.data() + c * s.count(), s.rows, s.cols);
    const double scale = spec.rho * norm2(g) / norm2(nu);
    ColorImage out;
    for (int c = 0; c < 3; ++c) out.channels[c] = g.channels[c] + scale * nu.channels[c];
    return {out, snr_db(spec.rho)};
}

/// Relative restoration error |f - f_true| / |f_true|.
inline double rre(const Image& f, const Image& f_true) {
    detail::require(size_of(f) == size_of(f_true), Errc::invalid_size, "RRE operands differ in size");
    const double d = norm2(f_true);
    detail::require(d > 0.0, Errc::division_guard, "true image has zero norm");
    return norm2(f - f_true) / d;
}

inline double rre(const ColorImage& f, const ColorImage& f_true) {
    detail::require(f.size() == f_true.size(), Errc::invalid_size, "RRE operands differ in size");
    const double d = norm2(f_true);
    detail::require(d > 0.0, Errc::division_guard, "true image has zero norm");
    ColorImage e;
    for (int c = 0; c < 3; ++c) e.channels[c] = f.channels[c] - f_true.channels[c];
    return norm2(e) / d;
}

struct PicardPoint {
    double abs_lambda;
    double abs_coef;
};

/// |lambda_k| and |coefficient_k| of g in sort_spectrum order.
inline std::vector<PicardPoint> picard_data(const SpectralDecomposition& d, const Image& g) {
    const Image coef = d.analyze(g);
    const auto order = sort_spectrum(d.grid()).order;
    std::vector<PicardPoint> out;
    out.reserve(order.size());
    for (auto idx : order) out.push_back({std::abs(d.grid().values.data()[idx]), std::abs(coef.data()[idx])});
    return out;
}

inline std::vector<PicardPoint> picard_data(const Image& g, const BlurOperator& op) {
    return picard_data(SpectralDecomposition::of(op), g);
}

/// "k,abs_lambda,abs_coef", k starting at 1, full precision.
inline void write_picard_csv(std::ostream& os, const std::vector<PicardPoint>& pts) {
    os << "k,abs_lambda,abs_coef\n";
    char buf[96];
    for (std::size_t k = 0; k < pts.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k + 1, pts[k].abs_lambda, pts[k].abs_coef);
        os << buf;
    }
}

/// "param,rre", full precision.
inline void write_curve_csv(std::ostream& os, const SweepCurve& curve) {
    os << "param,rre\n";
    char buf[80];
    for (std::size_t i = 0; i < curve.param.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.param[i], curve.rre[i]);
        os << buf;
    }
}

} // namespace deblur
