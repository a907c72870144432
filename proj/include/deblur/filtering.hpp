#pragma once

// Spectral restoration on a two-level decomposition A = V Lambda V^{-1},
// V = V1 (x) V2:
//   truncated SD/SVD   f = V (phi .* (V^{-1} g) ./ lambda), phi in {0, 1}
//   Tikhonov           f = V (lambda .* (V^{-1} g) ./ (lambda^2 + mu))
// With the Reflective (orthogonal DCT-III) basis the Tikhonov formula solves
// (A^T A + mu I) f = A^T g; with the Anti-Reflective basis it solves the
// re-blurred system (A^2 + mu I) f = A g.

#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/operators.hpp"
#include "deblur/psf.hpp"
#include "deblur/spectrum.hpp"
#include "deblur/transforms.hpp"
#include "deblur/types.hpp"

namespace deblur {

/// Eigenvalues below this magnitude are never inverted by count-based truncation.
inline constexpr double zero_eigenvalue_cutoff = 1e-14;

struct KeepCount {
    std::size_t k = 0;
};
struct KeepAbove {
    double delta = 0.0;
};
struct TikhonovParam {
    double mu = 0.0;
};

using TruncationRule = std::variant<KeepCount, KeepAbove>;
using FilterSpec = std::variant<KeepCount, KeepAbove, TikhonovParam>;

struct RestorationResult {
    Image image;
    std::size_t kept = 0;         ///< spectral components with phi != 0
    std::size_t skipped_zero = 0; ///< count-rule components dropped for |lambda| < cutoff
    double param = 0.0;           ///< k, delta or mu as requested
    std::string method;
};

/// Two-level decomposition exposing analysis (V^{-1}) and synthesis (V).
/// Built either from a fast transform pair (spectral decomposition of a
/// Reflective / Anti-Reflective operator) or from dense unilevel SVDs of a
/// separable operator A1 (x) A2 = (U1 (x) U2)(S1 (x) S2)(V1 (x) V2)^T.
class SpectralDecomposition {
public:
    static SpectralDecomposition of(const BlurOperator& op) {
        SpectralDecomposition d;
        d.grid_ = eigen_grid(op);
        if (op.bc() == BoundaryCondition::reflective) {
            d.forward_ = Transform::dct3;
            d.inverse_ = Transform::dct3_transposed;
        } else {
            d.forward_ = Transform::ar_forward;
            d.inverse_ = Transform::ar_inverse;
        }
        return d;
    }

    /// SVD route for a separable PSF h_col (x) h_row.
    static SpectralDecomposition separable_svd(const Kernel1d& col, const Kernel1d& row, BoundaryCondition bc,
                                               Size2 n) {
        detail::require(is_spectral(bc), Errc::unsupported, "separable SVD supports reflective/anti-reflective only");
        SpectralDecomposition d;
        d.svd_ = true;
        auto [u1, s1, v1] = factor_svd(assemble_dense_1d(col, bc, n.rows));
        auto [u2, s2, v2] = factor_svd(assemble_dense_1d(row, bc, n.cols));
        d.u1_ = std::move(u1);
        d.v1_ = std::move(v1);
        d.u2_ = std::move(u2);
        d.v2_ = std::move(v2);
        d.grid_ = {s1 * s2.transpose(), Algebra::svd};
        return d;
    }

    const EigenGrid& grid() const { return grid_; }
    Size2 size() const { return grid_.size(); }
    bool is_svd() const { return svd_; }

    /// Spectral coefficients V^{-1} g (U^T g for the SVD route).
    Image analyze(const Image& g) const {
        detail::require(size_of(g) == size(), Errc::invalid_size,
                        "image " + to_string(size_of(g)) + " does not match decomposition " + to_string(size()));
        if (svd_) return u1_.transpose() * g * u2_;
        return two_level_apply(g, inverse_, inverse_);
    }

    /// Image V c from spectral coefficients.
    Image synthesize(const Image& c) const {
        detail::require(size_of(c) == size(), Errc::invalid_size, "coefficient grid size mismatch");
        if (svd_) return v1_ * c * v2_.transpose();
        return two_level_apply(c, forward_, forward_);
    }

    /// Dense synthesis factor along axis 0 (V1, n1 x n1) or 1 (V2, n2 x n2);
    /// column k is the 1D basis vector paired with grid index k.
    Matrix synthesis_factor(int axis) const {
        if (svd_) return axis == 0 ? v1_ : v2_;
        return dense_transform(forward_, axis == 0 ? size().rows : size().cols);
    }

private:
    struct FactorSvd {
        Matrix u;
        Vector s;
        Matrix v;
    };

    /// SVD with each left singular vector's largest-magnitude entry made positive.
    static FactorSvd factor_svd(const Matrix& a) {
        Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
        FactorSvd f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
        for (Eigen::Index k = 0; k < f.u.cols(); ++k) {
            Eigen::Index idx = 0;
            f.u.col(k).cwiseAbs().maxCoeff(&idx);
            if (f.u(idx, k) < 0.0) {
                f.u.col(k) *= -1.0;
                f.v.col(k) *= -1.0;
            }
        }
        return f;
    }

    EigenGrid grid_;
    bool svd_ = false;
    Transform forward_ = Transform::dct3;
    Transform inverse_ = Transform::dct3_transposed;
    Matrix u1_, v1_, u2_, v2_;
};

namespace detail {

struct FilterMask {
    Image phi;
    std::size_t kept = 0;
    std::size_t skipped_zero = 0;
};

inline FilterMask truncation_mask(const EigenGrid& grid, const TruncationRule& rule) {
    const auto n = static_cast<std::size_t>(grid.values.size());
    FilterMask m{Image::Zero(grid.values.rows(), grid.values.cols())};
    const double* lam = grid.values.data();
    double* phi = m.phi.data();
    if (const auto* above = std::get_if<KeepAbove>(&rule)) {
        require(above->delta > 0.0, Errc::invalid_parameter, "truncation threshold must be positive");
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(lam[i]) >= above->delta) {
                phi[i] = 1.0;
                ++m.kept;
            }
        return m;
    }
    const auto k = std::get<KeepCount>(rule).k;
    require(k <= n, Errc::invalid_parameter,
            "truncation count " + std::to_string(k) + " exceeds " + std::to_string(n) + " components");
    const auto order = sort_spectrum(grid).order;
    for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(lam[order[i]]) < zero_eigenvalue_cutoff) {
            ++m.skipped_zero;
            continue;
        }
        phi[order[i]] = 1.0;
        ++m.kept;
    }
    return m;
}

inline double rule_param(const TruncationRule& rule) {
    if (const auto* above = std::get_if<KeepAbove>(&rule)) return above->delta;
    return static_cast<double>(std::get<KeepCount>(rule).k);
}

/// Index of the first minimum.
inline std::size_t argmin(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

} // namespace detail

/// Truncated restoration on any decomposition.
inline RestorationResult truncated_restore(const SpectralDecomposition& d, const Image& g,
                                           const TruncationRule& rule) {
    const auto mask = detail::truncation_mask(d.grid(), rule);
    const Image ghat = d.analyze(g);
    Image fhat = Image::Zero(ghat.rows(), ghat.cols());
    const auto n = ghat.size();
    for (Eigen::Index i = 0; i < n; ++i)
        if (mask.phi.data()[i] != 0.0) fhat.data()[i] = ghat.data()[i] / d.grid().values.data()[i];
    return {d.synthesize(fhat), mask.kept, mask.skipped_zero, detail::rule_param(rule), d.is_svd() ? "tsvd" : "tsd"};
}

/// Truncated spectral decomposition (fast Reflective / Anti-Reflective transforms).
inline RestorationResult truncated_sd_restore(const Image& g, const BlurOperator& op, const TruncationRule& rule) {
    return truncated_restore(SpectralDecomposition::of(op), g, rule);
}

/// Truncated SVD of A1 (x) A2 for a separable PSF h_col (x) h_row.
inline RestorationResult truncated_svd_separable(const Image& g, const Kernel1d& col, const Kernel1d& row,
                                                 BoundaryCondition bc, const TruncationRule& rule) {
    return truncated_restore(SpectralDecomposition::separable_svd(col, row, bc, size_of(g)), g, rule);
}

inline RestorationResult truncated_svd_separable(const Image& g, const PsfMask& psf, BoundaryCondition bc,
                                                 const TruncationRule& rule) {
    const auto factors = separable_factors(psf);
    detail::require(factors.has_value(), Errc::unsupported, "truncated SVD fast path needs a separable PSF");
    return truncated_svd_separable(g, factors->first, factors->second, bc, rule);
}

/// Tikhonov filter lambda / (lambda^2 + mu) on any decomposition.
inline RestorationResult tikhonov_restore(const SpectralDecomposition& d, const Image& g, double mu) {
    detail::require(mu > 0.0, Errc::invalid_parameter, "Tikhonov parameter must be positive");
    const Image ghat = d.analyze(g);
    const auto& lam = d.grid().values;
    const Image fhat = (lam.array() * ghat.array() / (lam.array().square() + mu)).matrix();
    return {d.synthesize(fhat), static_cast<std::size_t>(lam.size()), 0, mu, "tikhonov"};
}

/// Tikhonov (Reflective) or Re-blurring (Anti-Reflective) with D = I.
inline RestorationResult tikhonov_restore(const Image& g, const BlurOperator& op, double mu) {
    return tikhonov_restore(SpectralDecomposition::of(op), g, mu);
}

/// (param, RRE) samples of a parameter sweep.
struct SweepCurve {
    std::vector<double> param;
    std::vector<double> rre;
    std::size_t best = 0;

    double best_param() const { return param.at(best); }
    double best_rre() const { return rre.at(best); }
};

/// RRE after keeping the k largest-|lambda| components, k = 0..max_k. Each
/// step adds one rank-1 term (c / lambda) v1 v2^T, so a step costs O(n1 n2).
inline SweepCurve rre_sweep(const SpectralDecomposition& d, const Image& g, const Image& f_true,
                            std::size_t max_k) {
    detail::require(size_of(f_true) == size_of(g), Errc::invalid_size, "true image size differs from data");
    const auto n = static_cast<std::size_t>(g.size());
    detail::require(max_k <= n, Errc::invalid_parameter, "max_k exceeds the number of components");
    const double true_norm = norm2(f_true);
    detail::require(true_norm > 0.0, Errc::division_guard, "true image has zero norm");

    const Image ghat = d.analyze(g);
    const auto order = sort_spectrum(d.grid()).order;
    const Matrix v1 = d.synthesis_factor(0);
    const Matrix v2 = d.synthesis_factor(1);
    const Eigen::Index n2 = g.cols();

    Image err = -f_true;
    SweepCurve curve;
    curve.param.reserve(max_k + 1);
    curve.rre.reserve(max_k + 1);
    curve.param.push_back(0.0);
    curve.rre.push_back(norm2(err) / true_norm);
    for (std::size_t k = 1; k <= max_k; ++k) {
        const Eigen::Index idx = order[k - 1];
        const double lam = d.grid().values.data()[idx];
        if (std::abs(lam) >= zero_eigenvalue_cutoff) {
            const double c = ghat.data()[idx] / lam;
            err.noalias() += (c * v1.col(idx / n2)) * v2.col(idx % n2).transpose();
        }
        curve.param.push_back(static_cast<double>(k));
        curve.rre.push_back(norm2(err) / true_norm);
    }
    curve.best = detail::argmin(curve.rre);
    return curve;
}

inline SweepCurve rre_sweep(const Image& g, const BlurOperator& op, const Image& f_true, std::size_t max_k) {
    return rre_sweep(SpectralDecomposition::of(op), g, f_true, max_k);
}

/// n logarithmically spaced points in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    detail::require(lo > 0.0 && hi >= lo && n >= 1, Errc::invalid_parameter, "bad logarithmic grid bounds");
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

/// 40 points in [1e-8, 1].
inline std::vector<double> default_mu_grid() { return log_grid(1e-8, 1.0, 40); }

inline void check_mu_grid(const std::vector<double>& mu_grid) {
    detail::require(!mu_grid.empty(), Errc::invalid_parameter, "empty regularization grid");
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        detail::require(mu_grid[i] > 0.0, Errc::invalid_parameter, "regularization grid must be positive");
        detail::require(i == 0 || mu_grid[i] > mu_grid[i - 1], Errc::invalid_parameter,
                        "regularization grid must be strictly increasing");
    }
}

/// RRE of the Tikhonov / Re-blurring solution for each mu; analysis is done once.
inline SweepCurve mu_sweep(const SpectralDecomposition& d, const Image& g, const Image& f_true,
                           const std::vector<double>& mu_grid) {
    check_mu_grid(mu_grid);
    detail::require(size_of(f_true) == size_of(g), Errc::invalid_size, "true image size differs from data");
    const double true_norm = norm2(f_true);
    detail::require(true_norm > 0.0, Errc::division_guard, "true image has zero norm");
    const Image ghat = d.analyze(g);
    const auto& lam = d.grid().values;
    SweepCurve curve;
    for (double mu : mu_grid) {
        const Image fhat = (lam.array() * ghat.array() / (lam.array().square() + mu)).matrix();
        curve.param.push_back(mu);
        curve.rre.push_back(norm2(d.synthesize(fhat) - f_true) / true_norm);
    }
    curve.best = detail::argmin(curve.rre);
    return curve;
}

inline SweepCurve mu_sweep(const Image& g, const BlurOperator& op, const Image& f_true,
                           const std::vector<double>& mu_grid) {
    return mu_sweep(SpectralDecomposition::of(op), g, f_true, mu_grid);
}

} // namespace deblur
