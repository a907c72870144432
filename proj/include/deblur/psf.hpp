#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "deblur/error.hpp"
#include "deblur/types.hpp"

namespace deblur {

/// One-dimensional symmetric-index kernel h_{-q..q}, stored at offset q.
class Kernel1d {
public:
    Kernel1d() = default;

    static Kernel1d from_weights(Vector w) {
        detail::require(w.size() % 2 == 1, Errc::invalid_size, "1D kernel length must be odd");
        detail::require((w.array() >= 0.0).all() && w.allFinite(), Errc::invalid_parameter,
                        "1D kernel weights must be finite and nonnegative");
        const double s = w.sum();
        detail::require(s > 0.0, Errc::invalid_parameter, "1D kernel weights sum to zero");
        Kernel1d k;
        k.weights_ = w / s;
        return k;
    }

    static Kernel1d identity() { return from_weights(Vector::Ones(1)); }

    int half_support() const { return static_cast<int>(weights_.size() / 2); }
    const Vector& weights() const { return weights_; }

    /// h_i for signed i; zero outside the support.
    double at(int i) const {
        const int q = half_support();
        return (i < -q || i > q) ? 0.0 : weights_[i + q];
    }

    bool is_symmetric(double rel_tol = 1e-12) const {
        const int q = half_support();
        const double scale = weights_.cwiseAbs().maxCoeff();
        for (int i = 1; i <= q; ++i)
            if (std::abs(at(i) - at(-i)) > rel_tol * scale) return false;
        return true;
    }

    /// h_0 + 2 sum_s h_s cos(s x); requires a symmetric kernel.
    double generating_function(double x) const {
        detail::require(is_symmetric(), Errc::precondition, "generating function needs a symmetric kernel");
        double f = at(0);
        for (int s = 1; s <= half_support(); ++s) f += 2.0 * at(s) * std::cos(s * x);
        return f;
    }

private:
    Vector weights_ = Vector::Ones(1);
};

/// Normalized nonnegative (2q1+1)x(2q2+1) blur mask; entry (i1, i2) for
/// i1 in [-q1, q1], i2 in [-q2, q2] sits at weights()(i1+q1, i2+q2).
class PsfMask {
public:
    PsfMask() : weights_(Matrix::Ones(1, 1)) {}

    /// Validates and normalizes to unit sum. The pre-normalization sum is kept
    /// for reporting.
    static PsfMask from_weights(const Matrix& w) {
        detail::require(w.rows() % 2 == 1 && w.cols() % 2 == 1, Errc::invalid_size,
                        "mask dimensions must be odd, got " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()));
        detail::require(w.allFinite(), Errc::invalid_parameter, "mask weights must be finite");
        detail::require((w.array() >= 0.0).all(), Errc::invalid_parameter, "mask weights must be nonnegative");
        const double s = w.sum();
        detail::require(s > 0.0, Errc::invalid_parameter, "mask weights sum to zero");
        PsfMask m;
        m.weights_ = w / s;
        m.raw_sum_ = s;
        return m;
    }

    static PsfMask identity() { return from_weights(Matrix::Ones(1, 1)); }

    int q1() const { return static_cast<int>(weights_.rows() / 2); }
    int q2() const { return static_cast<int>(weights_.cols() / 2); }
    const Matrix& weights() const { return weights_; }
    double raw_sum() const { return raw_sum_; }

    double at(int i1, int i2) const {
        if (i1 < -q1() || i1 > q1() || i2 < -q2() || i2 > q2()) return 0.0;
        return weights_(i1 + q1(), i2 + q2());
    }

    /// Largest |i1| (resp. |i2|) carrying a nonzero weight.
    std::pair<int, int> effective_support() const {
        int e1 = 0, e2 = 0;
        for (int i1 = -q1(); i1 <= q1(); ++i1)
            for (int i2 = -q2(); i2 <= q2(); ++i2)
                if (at(i1, i2) != 0.0) {
                    e1 = std::max(e1, std::abs(i1));
                    e2 = std::max(e2, std::abs(i2));
                }
        return {e1, e2};
    }

    /// h_{i} = h_{|i|} componentwise, up to rel_tol times the largest weight.
    bool is_strongly_symmetric(double rel_tol = 1e-12) const {
        const double tol = rel_tol * weights_.maxCoeff();
        for (int i1 = 0; i1 <= q1(); ++i1)
            for (int i2 = 0; i2 <= q2(); ++i2) {
                const double ref = at(i1, i2);
                if (std::abs(at(-i1, i2) - ref) > tol || std::abs(at(i1, -i2) - ref) > tol ||
                    std::abs(at(-i1, -i2) - ref) > tol)
                    return false;
            }
        return true;
    }

    friend bool operator==(const PsfMask& a, const PsfMask& b) { return a.weights_ == b.weights_; }

private:
    Matrix weights_;
    double raw_sum_ = 1.0;
};

namespace detail {

/// Builds a full mask from quadrant values quad(a, b), a in [0,q1], b in
/// [0,q2]; mirrored entries share the same double.
template <class F>
Matrix mirror_quadrant(int q1, int q2, F&& quad) {
    Matrix w(2 * q1 + 1, 2 * q2 + 1);
    for (int i1 = -q1; i1 <= q1; ++i1)
        for (int i2 = -q2; i2 <= q2; ++i2) w(i1 + q1, i2 + q2) = quad(std::abs(i1), std::abs(i2));
    return w;
}

} // namespace detail

inline PsfMask gaussian_psf(int q1, int q2, double sigma1, double sigma2) {
    detail::require(q1 >= 0 && q2 >= 0, Errc::invalid_parameter, "half support must be nonnegative");
    detail::require(sigma1 > 0.0 && sigma2 > 0.0, Errc::invalid_parameter, "gaussian sigma must be positive");
    Matrix quad(q1 + 1, q2 + 1);
    for (int a = 0; a <= q1; ++a)
        for (int b = 0; b <= q2; ++b)
            quad(a, b) = std::exp(-0.5 * (a / sigma1) * (a / sigma1) - 0.5 * (b / sigma2) * (b / sigma2));
    return PsfMask::from_weights(detail::mirror_quadrant(q1, q2, [&](int a, int b) { return quad(a, b); }));
}

/// Uniform disc: lattice points with i1^2 + i2^2 <= r^2 (pixel-center test).
inline PsfMask out_of_focus_psf(int q1, int q2, double radius) {
    detail::require(q1 >= 0 && q2 >= 0, Errc::invalid_parameter, "half support must be nonnegative");
    detail::require(radius > 0.0, Errc::invalid_parameter, "out-of-focus radius must be positive");
    const double level = 1.0 / (std::numbers::pi * radius * radius);
    const double r2 = radius * radius;
    auto w = detail::mirror_quadrant(q1, q2, [&](int a, int b) {
        return static_cast<double>(a) * a + static_cast<double>(b) * b <= r2 ? level : 0.0;
    });
    return PsfMask::from_weights(w);
}

/// Averages the four sign reflections of every entry, then renormalizes.
inline PsfMask symmetrize(const PsfMask& mask) {
    auto w = detail::mirror_quadrant(mask.q1(), mask.q2(), [&](int a, int b) {
        return 0.25 * ((mask.at(a, b) + mask.at(-a, -b)) + (mask.at(-a, b) + mask.at(a, -b)));
    });
    return PsfMask::from_weights(w);
}

/// Evaluates the bivariate generating function
///   f(x1,x2) = sum_{s1,s2 >= 0} c_{s1} c_{s2} h_{s1,s2} cos(s1 x1) cos(s2 x2),
/// c_0 = 1, c_s = 2 otherwise, on every pair of nodes. Returns an
/// nodes1.size() x nodes2.size() grid.
inline Image generating_function_grid(const PsfMask& mask, std::span<const double> nodes1,
                                      std::span<const double> nodes2) {
    detail::require(mask.is_strongly_symmetric(), Errc::precondition,
                    "generating function needs a strongly symmetric mask");
    const int q1 = mask.q1(), q2 = mask.q2();
    const auto n1 = static_cast<Eigen::Index>(nodes1.size());
    const auto n2 = static_cast<Eigen::Index>(nodes2.size());
    Matrix c1(n1, q1 + 1), c2(n2, q2 + 1), h(q1 + 1, q2 + 1);
    for (Eigen::Index i = 0; i < n1; ++i)
        for (int s = 0; s <= q1; ++s) c1(i, s) = (s == 0 ? 1.0 : 2.0) * std::cos(s * nodes1[i]);
    for (Eigen::Index j = 0; j < n2; ++j)
        for (int s = 0; s <= q2; ++s) c2(j, s) = (s == 0 ? 1.0 : 2.0) * std::cos(s * nodes2[j]);
    for (int a = 0; a <= q1; ++a)
        for (int b = 0; b <= q2; ++b) h(a, b) = mask.at(a, b);
    return c1 * h * c2.transpose();
}

inline double generating_function(const PsfMask& mask, double x1, double x2) {
    const double n1[] = {x1};
    const double n2[] = {x2};
    return generating_function_grid(mask, n1, n2)(0, 0);
}

/// Marginal 1D kernels: h_row sums over i1 (length 2q2+1), h_col sums over
/// i2 (length 2q1+1).
inline std::pair<Kernel1d, Kernel1d> condensed_psfs(const PsfMask& mask) {
    const Vector row = mask.weights().colwise().sum().transpose();
    const Vector col = mask.weights().rowwise().sum();
    return {Kernel1d::from_weights(row), Kernel1d::from_weights(col)};
}

/// Mask h_col (x) h_row: entry (i1, i2) = col[i1] * row[i2].
inline PsfMask separable_psf(const Kernel1d& col, const Kernel1d& row) {
    return PsfMask::from_weights(col.weights() * row.weights().transpose());
}

/// Returns (col, row) factors when the mask is an outer product within tol.
inline std::optional<std::pair<Kernel1d, Kernel1d>> separable_factors(const PsfMask& mask, double tol = 1e-12) {
    auto [row, col] = condensed_psfs(mask);
    const Matrix outer = col.weights() * row.weights().transpose();
    if ((outer - mask.weights()).cwiseAbs().maxCoeff() > tol * mask.weights().maxCoeff()) return std::nullopt;
    return std::make_pair(col, row);
}

/// Mask text format: first line "q1 q2", then 2q1+1 rows of 2q2+1 decimals.
inline PsfMask read_mask_text(std::istream& in) {
    int q1 = -1, q2 = -1;
    std::string line;
    detail::require(static_cast<bool>(std::getline(in, line)), Errc::format, "mask file is empty");
    {
        std::istringstream head(line);
        detail::require(static_cast<bool>(head >> q1 >> q2) && q1 >= 0 && q2 >= 0, Errc::format,
                        "mask header must be 'q1 q2' with nonnegative integers");
    }
    Matrix w(2 * q1 + 1, 2 * q2 + 1);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        detail::require(static_cast<bool>(std::getline(in, line)), Errc::format,
                        "mask file truncated at row " + std::to_string(r));
        std::istringstream row(line);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            detail::require(static_cast<bool>(row >> w(r, c)), Errc::format,
                            "mask row " + std::to_string(r) + " has fewer than " + std::to_string(w.cols()) +
                                " values");
    }
    return PsfMask::from_weights(w);
}

inline PsfMask load_mask_text(const std::string& path) {
    std::ifstream in(path);
    detail::require(in.good(), Errc::io, "cannot open mask file '" + path + "'");
    return read_mask_text(in);
}

} // namespace deblur
