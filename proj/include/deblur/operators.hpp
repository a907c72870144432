#pragma once

#include <string>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/psf.hpp"
#include "deblur/types.hpp"

namespace deblur {

/// How the scene outside the field of view is modelled. Periodic and Zero are
/// baselines only; the spectral machinery accepts Reflective and
/// AntiReflective.
enum class BoundaryCondition { reflective, anti_reflective, periodic, zero };

inline std::string to_string(BoundaryCondition bc) {
    switch (bc) {
    case BoundaryCondition::reflective: return "reflective";
    case BoundaryCondition::anti_reflective: return "antireflective";
    case BoundaryCondition::periodic: return "periodic";
    case BoundaryCondition::zero: return "zero";
    }
    return "?";
}

inline BoundaryCondition parse_boundary_condition(const std::string& s) {
    if (s == "reflective" || s == "R") return BoundaryCondition::reflective;
    if (s == "antireflective" || s == "anti-reflective" || s == "AR") return BoundaryCondition::anti_reflective;
    if (s == "periodic") return BoundaryCondition::periodic;
    if (s == "zero" || s == "dirichlet") return BoundaryCondition::zero;
    throw Error(Errc::invalid_parameter, "unknown boundary condition '" + s + "'");
}

inline bool is_spectral(BoundaryCondition bc) {
    return bc == BoundaryCondition::reflective || bc == BoundaryCondition::anti_reflective;
}

namespace detail {

/// Value at padded 0-based index i (possibly outside [0, n)) as a linear
/// combination of in-range samples.
struct Term {
    Eigen::Index index;
    double coeff;
};
using Stencil = std::vector<Term>;

inline Stencil boundary_stencil(BoundaryCondition bc, Eigen::Index i, Eigen::Index n) {
    if (i >= 0 && i < n) return {{i, 1.0}};
    switch (bc) {
    case BoundaryCondition::reflective:
        // f_{1-j} = f_j and f_{n+j} = f_{n+1-j}
        return {{i < 0 ? -i - 1 : 2 * n - 1 - i, 1.0}};
    case BoundaryCondition::anti_reflective:
        // f_{1-j} = 2 f_1 - f_{j+1} and f_{n+j} = 2 f_n - f_{n-j}
        if (i < 0) return {{0, 2.0}, {-i, -1.0}};
        return {{n - 1, 2.0}, {2 * n - 2 - i, -1.0}};
    case BoundaryCondition::periodic: return {{((i % n) + n) % n, 1.0}};
    case BoundaryCondition::zero: return {};
    }
    return {};
}

inline void check_margin(BoundaryCondition bc, Eigen::Index q, Eigen::Index n, const char* axis) {
    detail::require(q >= 0, Errc::invalid_parameter, "negative padding margin");
    switch (bc) {
    case BoundaryCondition::anti_reflective:
        detail::require(q == 0 || q <= n - 2, Errc::support_condition,
                        std::string("anti-reflective margin along ") + axis + " needs q <= n-2, got q=" +
                            std::to_string(q) + ", n=" + std::to_string(n));
        break;
    case BoundaryCondition::reflective:
    case BoundaryCondition::periodic:
        detail::require(q <= n, Errc::support_condition,
                        std::string("margin along ") + axis + " exceeds the image size");
        break;
    case BoundaryCondition::zero: break;
    }
}

/// Crops a mask to its effective (nonzero) support without renormalizing.
inline Matrix effective_weights(const PsfMask& mask) {
    const auto [e1, e2] = mask.effective_support();
    return mask.weights().block(mask.q1() - e1, mask.q2() - e2, 2 * e1 + 1, 2 * e2 + 1);
}

/// g(i) = sum_s h_s p(i + q - s) over the valid region of a padded raster p.
inline Image valid_convolution(const Image& padded, const Matrix& w) {
    const Eigen::Index q1 = w.rows() / 2, q2 = w.cols() / 2;
    const Eigen::Index n1 = padded.rows() - 2 * q1, n2 = padded.cols() - 2 * q2;
    Image out = Image::Zero(n1, n2);
    for (Eigen::Index s1 = -q1; s1 <= q1; ++s1)
        for (Eigen::Index s2 = -q2; s2 <= q2; ++s2) {
            const double h = w(s1 + q1, s2 + q2);
            if (h == 0.0) continue;
            out.noalias() += h * padded.block(q1 - s1, q2 - s2, n1, n2);
        }
    return out;
}

} // namespace detail

/// Extends an n1 x n2 image by (q1, q2) on every side. At the corners the
/// tensor product of the two 1D rules gives the double reflection (Reflective)
/// and the four-term rule 4f(1,1) - 2f(1,j+1) - 2f(i+1,1) + f(i+1,j+1)
/// (AntiReflective).
inline Image pad(const Image& img, BoundaryCondition bc, Eigen::Index q1, Eigen::Index q2) {
    const Eigen::Index n1 = img.rows(), n2 = img.cols();
    detail::require(n1 >= 1 && n2 >= 1, Errc::invalid_size, "cannot pad an empty image");
    detail::check_margin(bc, q1, n1, "rows");
    detail::check_margin(bc, q2, n2, "columns");
    Image out(n1 + 2 * q1, n2 + 2 * q2);
    std::vector<detail::Stencil> cols(static_cast<std::size_t>(n2 + 2 * q2));
    for (Eigen::Index j = 0; j < n2 + 2 * q2; ++j) cols[j] = detail::boundary_stencil(bc, j - q2, n2);
    for (Eigen::Index i = 0; i < n1 + 2 * q1; ++i) {
        const auto rs = detail::boundary_stencil(bc, i - q1, n1);
        for (Eigen::Index j = 0; j < n2 + 2 * q2; ++j) {
            double v = 0.0;
            for (const auto& r : rs)
                for (const auto& c : cols[j]) v += r.coeff * c.coeff * img(r.index, c.index);
            out(i, j) = v;
        }
    }
    return out;
}

/// Square blur operator A_n: PSF, boundary condition and FOV size.
class BlurOperator {
public:
    BlurOperator(PsfMask psf, BoundaryCondition bc, Size2 size) : psf_(std::move(psf)), bc_(bc), size_(size) {
        detail::require(size.rows >= 1 && size.cols >= 1, Errc::invalid_size, "operator size must be positive");
        if (is_spectral(bc))
            detail::require(psf_.is_strongly_symmetric(), Errc::precondition,
                            "reflective/anti-reflective operators need a strongly symmetric PSF "
                            "(use symmetrize())");
        const auto [e1, e2] = psf_.effective_support();
        if (bc == BoundaryCondition::anti_reflective) {
            detail::require(size.rows >= 3 && size.cols >= 3, Errc::invalid_size,
                            "anti-reflective operators need at least 3x3 pixels");
            // weights must vanish for |i_j| >= n_j - 2
            detail::require(e1 <= size.rows - 3 && e2 <= size.cols - 3, Errc::support_condition,
                            "PSF support too wide for anti-reflective operator of size " + to_string(size));
        } else {
            detail::check_margin(bc, e1, size.rows, "rows");
            detail::check_margin(bc, e2, size.cols, "columns");
        }
        weights_ = detail::effective_weights(psf_);
    }

    const PsfMask& psf() const { return psf_; }
    BoundaryCondition bc() const { return bc_; }
    Size2 size() const { return size_; }
    /// Mask cropped to its nonzero support; this is what the operator applies.
    const Matrix& effective_weights() const { return weights_; }

private:
    PsfMask psf_;
    BoundaryCondition bc_;
    Size2 size_;
    Matrix weights_;
};

/// g = A_n f: pad by the boundary rule, then g_i = sum_s h_s f_{i-s}.
inline Image apply_blur(const BlurOperator& op, const Image& img) {
    detail::require(size_of(img) == op.size(), Errc::invalid_size,
                    "image " + to_string(size_of(img)) + " does not match operator " + to_string(op.size()));
    const auto& w = op.effective_weights();
    return detail::valid_convolution(pad(img, op.bc(), w.rows() / 2, w.cols() / 2), w);
}

/// Ground-truth blur of a scene that extends beyond the FOV by exactly the
/// mask margins; no boundary model is involved.
inline Image blur_oversized_scene(const Image& scene, const PsfMask& psf) {
    detail::require(scene.rows() > 2 * psf.q1() && scene.cols() > 2 * psf.q2(), Errc::invalid_size,
                    "scene " + to_string(size_of(scene)) + " must exceed the mask margins");
    return detail::valid_convolution(scene, psf.weights());
}

/// Explicit N x N matrix (N = n1 n2, row-major pixel order) of the operator.
inline Matrix assemble_dense(const BlurOperator& op) {
    const auto [n1, n2] = op.size();
    const Eigen::Index n = n1 * n2;
    detail::require(n <= 20000, Errc::size_guard, "dense assembly of " + std::to_string(n) + " unknowns");
    const auto& w = op.effective_weights();
    const Eigen::Index q1 = w.rows() / 2, q2 = w.cols() / 2;
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i1 = 0; i1 < n1; ++i1)
        for (Eigen::Index i2 = 0; i2 < n2; ++i2) {
            const Eigen::Index row = i1 * n2 + i2;
            for (Eigen::Index s1 = -q1; s1 <= q1; ++s1) {
                const auto rs = detail::boundary_stencil(op.bc(), i1 - s1, n1);
                for (Eigen::Index s2 = -q2; s2 <= q2; ++s2) {
                    const double h = w(s1 + q1, s2 + q2);
                    if (h == 0.0) continue;
                    const auto cs = detail::boundary_stencil(op.bc(), i2 - s2, n2);
                    for (const auto& r : rs)
                        for (const auto& c : cs) a(row, r.index * n2 + c.index) += h * r.coeff * c.coeff;
                }
            }
        }
    return a;
}

/// Explicit n x n matrix of the unilevel operator of a symmetric 1D kernel.
/// With a separable mask h_col (x) h_row the 2D operator equals
/// assemble_dense_1d(h_col, bc, n1) (x) assemble_dense_1d(h_row, bc, n2).
inline Matrix assemble_dense_1d(const Kernel1d& h, BoundaryCondition bc, Eigen::Index n) {
    detail::require(n >= 1, Errc::invalid_size, "1D operator size must be positive");
    detail::require(n <= 4096, Errc::size_guard, "dense 1D operator of length " + std::to_string(n));
    if (is_spectral(bc))
        detail::require(h.is_symmetric(), Errc::precondition, "1D kernel must be symmetric");
    int e = 0;
    for (int i = 1; i <= h.half_support(); ++i)
        if (h.at(i) != 0.0 || h.at(-i) != 0.0) e = i;
    if (bc == BoundaryCondition::anti_reflective)
        detail::require(n >= 3 && e <= n - 3, Errc::support_condition,
                        "1D kernel too wide for anti-reflective operator of length " + std::to_string(n));
    else
        detail::check_margin(bc, e, n, "axis");
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int s = -e; s <= e; ++s) {
            const double w = h.at(s);
            if (w == 0.0) continue;
            for (const auto& t : detail::boundary_stencil(bc, i - s, n)) a(i, t.index) += w * t.coeff;
        }
    return a;
}

} // namespace deblur
