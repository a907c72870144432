#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/operators.hpp"
#include "deblur/psf.hpp"
#include "deblur/transforms.hpp"
#include "deblur/types.hpp"

namespace deblur {

enum class Algebra { dct3, ar, svd };

/// Eigenvalue (or singular value) array aligned with the two-level basis:
/// values(i1, i2) belongs to basis vector (column i1 of V1) (x) (column i2 of V2).
struct EigenGrid {
    Image values;
    Algebra algebra = Algebra::dct3;

    Size2 size() const { return size_of(values); }
};

/// Flat row-major grid indices ordered by non-increasing |lambda|; ties keep
/// row-major order.
struct SpectralOrdering {
    std::vector<Eigen::Index> order;
};

namespace detail {

inline std::vector<double> reflective_nodes(Eigen::Index n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (Eigen::Index s = 0; s < n; ++s) x[s] = static_cast<double>(s) * std::numbers::pi / static_cast<double>(n);
    return x;
}

inline std::vector<double> tau_nodes(Eigen::Index m) {
    std::vector<double> x(static_cast<std::size_t>(m));
    for (Eigen::Index r = 1; r <= m; ++r)
        x[r - 1] = static_cast<double>(r) * std::numbers::pi / static_cast<double>(m + 1);
    return x;
}

} // namespace detail

/// lambda(s1, s2) = f((s1-1) pi / n1, (s2-1) pi / n2).
inline EigenGrid eigen_grid_reflective(const PsfMask& psf, Size2 n) {
    detail::require(n.rows >= 1 && n.cols >= 1, Errc::invalid_size, "empty grid");
    const auto x1 = detail::reflective_nodes(n.rows);
    const auto x2 = detail::reflective_nodes(n.cols);
    return {generating_function_grid(psf, x1, x2), Algebra::dct3};
}

/// Eigenvalues of the unilevel tau matrix of a symmetric 1D kernel, on the
/// grid r pi / (m+1), r = 1..m.
inline Vector eigen_grid_tau(const Kernel1d& h, Eigen::Index m) {
    detail::require(m >= 1, Errc::invalid_size, "tau grid needs m >= 1");
    detail::require(h.is_symmetric(), Errc::precondition, "tau eigenvalues need a symmetric kernel");
    Vector out(m);
    const auto x = detail::tau_nodes(m);
    for (Eigen::Index r = 0; r < m; ++r) out[r] = h.generating_function(x[r]);
    return out;
}

/// Two-level tau eigenvalues of a strongly symmetric mask.
inline EigenGrid eigen_grid_tau(const PsfMask& psf, Size2 m) {
    detail::require(m.rows >= 1 && m.cols >= 1, Errc::invalid_size, "tau grid needs m >= 1");
    const auto x1 = detail::tau_nodes(m.rows);
    const auto x2 = detail::tau_nodes(m.cols);
    return {generating_function_grid(psf, x1, x2), Algebra::ar};
}

/// Anti-reflective eigenvalues in the block layout
///
///     1        | tau(h_row) | 1
///     tau(h_col)| tau(h)    | tau(h_col)
///     1        | tau(h_row) | 1
///
/// which equals f sampled on nodes {0, j pi/(m-1) for j = 1..m-2, 0} per axis.
inline EigenGrid eigen_grid_ar(const PsfMask& psf, Size2 n) {
    detail::require(n.rows >= 3 && n.cols >= 3, Errc::invalid_size, "anti-reflective grid needs n >= 3");
    const auto [e1, e2] = psf.effective_support();
    detail::require(e1 <= n.rows - 3 && e2 <= n.cols - 3, Errc::support_condition,
                    "PSF support too wide for anti-reflective grid " + to_string(n));
    const auto [h_row, h_col] = condensed_psfs(psf);
    const Vector row_vals = eigen_grid_tau(h_row, n.cols - 2);
    const Vector col_vals = eigen_grid_tau(h_col, n.rows - 2);
    const Image inner = eigen_grid_tau(psf, {n.rows - 2, n.cols - 2}).values;

    Image v(n.rows, n.cols);
    v.block(1, 1, n.rows - 2, n.cols - 2) = inner;
    v.block(0, 1, 1, n.cols - 2) = row_vals.transpose();
    v.block(n.rows - 1, 1, 1, n.cols - 2) = row_vals.transpose();
    v.block(1, 0, n.rows - 2, 1) = col_vals;
    v.block(1, n.cols - 1, n.rows - 2, 1) = col_vals;
    v(0, 0) = v(0, n.cols - 1) = v(n.rows - 1, 0) = v(n.rows - 1, n.cols - 1) = 1.0;
    return {v, Algebra::ar};
}

/// Eigenvalues of a Reflective operator from its first column:
/// Lambda = R^T (A e1) ./ R^T e1, both through the fast two-level transform.
inline EigenGrid eigen_from_first_column(const BlurOperator& op) {
    detail::require(op.bc() == BoundaryCondition::reflective, Errc::unsupported,
                    "first-column eigenvalues implemented for the reflective algebra only");
    const auto [n1, n2] = op.size();
    Image e1 = Image::Zero(n1, n2);
    e1(0, 0) = 1.0;
    const Image col = apply_blur(op, e1);
    const Image num = two_level_apply(col, Transform::dct3_transposed, Transform::dct3_transposed);
    const Image den = two_level_apply(e1, Transform::dct3_transposed, Transform::dct3_transposed);
    return {num.cwiseQuotient(den), Algebra::dct3};
}

/// Eigenvalue grid of an operator in its native algebra.
inline EigenGrid eigen_grid(const BlurOperator& op) {
    switch (op.bc()) {
    case BoundaryCondition::reflective: return eigen_grid_reflective(op.psf(), op.size());
    case BoundaryCondition::anti_reflective: return eigen_grid_ar(op.psf(), op.size());
    default: throw Error(Errc::unsupported, to_string(op.bc()) + " boundary has no fast spectral decomposition");
    }
}

inline SpectralOrdering sort_spectrum(const EigenGrid& grid) {
    const auto n = grid.values.size();
    SpectralOrdering s;
    s.order.resize(static_cast<std::size_t>(n));
    std::iota(s.order.begin(), s.order.end(), Eigen::Index{0});
    const double* v = grid.values.data();
    std::stable_sort(s.order.begin(), s.order.end(),
                     [v](Eigen::Index a, Eigen::Index b) { return std::abs(v[a]) > std::abs(v[b]); });
    return s;
}

/// Row-major CSV, one grid row per line, "%.17g".
inline void write_csv(std::ostream& os, const EigenGrid& grid) {
    char buf[32];
    for (Eigen::Index i = 0; i < grid.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < grid.values.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", grid.values(i, j));
            if (j > 0) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

} // namespace deblur
