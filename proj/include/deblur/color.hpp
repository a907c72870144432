#pragma once

// Cross-channel blur (A_color (x) A_n) acting on RGB-stacked images. The
// filters reuse the gray-scale decomposition of A_n: every spectral index k
// couples only the three channel coefficients at k, so truncation inverts
// A_color on kept indices and Tikhonov solves one 3x3 system per index.

#include <cmath>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/filtering.hpp"
#include "deblur/operators.hpp"
#include "deblur/types.hpp"

namespace deblur {

/// Row-stochastic 3x3 mixing matrix (A_color e = e).
class ColorMixing {
public:
    explicit ColorMixing(const Eigen::Matrix3d& m) : m_(m) {
        detail::require(m.allFinite(), Errc::invalid_parameter, "mixing matrix must be finite");
        for (int r = 0; r < 3; ++r)
            detail::require(std::abs(m.row(r).sum() - 1.0) <= 1e-12, Errc::invalid_parameter,
                            "mixing matrix row " + std::to_string(r) + " does not sum to 1");
    }

    static ColorMixing identity() { return ColorMixing(Eigen::Matrix3d::Identity()); }

    const Eigen::Matrix3d& matrix() const { return m_; }

private:
    Eigen::Matrix3d m_;
};

/// Within-channel blur by A_n, then pixelwise mixing by A_color.
inline ColorImage cross_channel_blur(const ColorImage& img, const ColorMixing& mix, const BlurOperator& op) {
    img.check_consistent();
    std::array<Image, 3> blurred;
    for (int c = 0; c < 3; ++c) blurred[c] = apply_blur(op, img.channels[c]);
    ColorImage out;
    const auto& a = mix.matrix();
    for (int c = 0; c < 3; ++c) out.channels[c] = a(c, 0) * blurred[0] + a(c, 1) * blurred[1] + a(c, 2) * blurred[2];
    return out;
}

/// Ground truth for color experiments: every channel of the oversized scene
/// blurred without a boundary model, then mixed.
inline ColorImage cross_channel_blur_oversized(const ColorImage& scene, const ColorMixing& mix, const PsfMask& psf) {
    scene.check_consistent();
    std::array<Image, 3> blurred;
    for (int c = 0; c < 3; ++c) blurred[c] = blur_oversized_scene(scene.channels[c], psf);
    ColorImage out;
    const auto& a = mix.matrix();
    for (int c = 0; c < 3; ++c) out.channels[c] = a(c, 0) * blurred[0] + a(c, 1) * blurred[1] + a(c, 2) * blurred[2];
    return out;
}

namespace detail {

/// A_color^{-1} through its SVD, V S^{-1} U^T.
inline Eigen::Matrix3d mixing_inverse(const ColorMixing& mix) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(mix.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    require(s[2] > 1e-12 * s[0], Errc::singular_mixing, "mixing matrix is numerically singular");
    return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

inline std::array<Image, 3> analyze_all(const SpectralDecomposition& d, const ColorImage& g) {
    g.check_consistent();
    return {d.analyze(g.channels[0]), d.analyze(g.channels[1]), d.analyze(g.channels[2])};
}

inline ColorImage synthesize_all(const SpectralDecomposition& d, const std::array<Image, 3>& c) {
    return {{d.synthesize(c[0]), d.synthesize(c[1]), d.synthesize(c[2])}};
}

} // namespace detail

/// Truncation driven only by |lambda_k(A_n)|: a kept index restores all three
/// channels through A_color^{-1}, a discarded one contributes zero to all.
inline ColorImage color_truncated_restore(const SpectralDecomposition& d, const ColorImage& g,
                                          const ColorMixing& mix, const TruncationRule& rule) {
    const Eigen::Matrix3d inv = detail::mixing_inverse(mix);
    const auto mask = detail::truncation_mask(d.grid(), rule);
    const auto ghat = detail::analyze_all(d, g);
    std::array<Image, 3> fhat;
    for (auto& f : fhat) f = Image::Zero(ghat[0].rows(), ghat[0].cols());
    const double* lam = d.grid().values.data();
    for (Eigen::Index i = 0; i < ghat[0].size(); ++i) {
        if (mask.phi.data()[i] == 0.0) continue;
        const Eigen::Vector3d v(ghat[0].data()[i], ghat[1].data()[i], ghat[2].data()[i]);
        const Eigen::Vector3d f = inv * v / lam[i];
        for (int c = 0; c < 3; ++c) fhat[c].data()[i] = f[c];
    }
    return detail::synthesize_all(d, fhat);
}

inline ColorImage color_truncated_sd(const ColorImage& g, const ColorMixing& mix, const BlurOperator& op,
                                     const TruncationRule& rule) {
    return color_truncated_restore(SpectralDecomposition::of(op), g, mix, rule);
}

namespace detail {

/// Per-index solve of (lambda^2 A_c^T A_c + mu I) f = lambda A_c^T g.
inline std::array<Image, 3> color_tikhonov_coefficients(const std::array<Image, 3>& ghat, const Image& lam,
                                                        const ColorMixing& mix, double mu) {
    const Eigen::Matrix3d& a = mix.matrix();
    const Eigen::Matrix3d ata = a.transpose() * a;
    std::array<Image, 3> fhat;
    for (auto& f : fhat) f.resize(ghat[0].rows(), ghat[0].cols());
    for (Eigen::Index i = 0; i < ghat[0].size(); ++i) {
        const double l = lam.data()[i];
        const Eigen::Vector3d v(ghat[0].data()[i], ghat[1].data()[i], ghat[2].data()[i]);
        const Eigen::Matrix3d lhs = (l * l) * ata + mu * Eigen::Matrix3d::Identity();
        const Eigen::Vector3d f = lhs.partialPivLu().solve(l * (a.transpose() * v));
        for (int c = 0; c < 3; ++c) fhat[c].data()[i] = f[c];
    }
    return fhat;
}

} // namespace detail

/// Tikhonov (Reflective) / Re-blurring (Anti-Reflective) for cross-channel blur.
inline ColorImage color_tikhonov(const SpectralDecomposition& d, const ColorImage& g, const ColorMixing& mix,
                                 double mu) {
    detail::require(mu > 0.0, Errc::invalid_parameter, "Tikhonov parameter must be positive");
    const auto ghat = detail::analyze_all(d, g);
    return detail::synthesize_all(d, detail::color_tikhonov_coefficients(ghat, d.grid().values, mix, mu));
}

inline ColorImage color_tikhonov(const ColorImage& g, const ColorMixing& mix, const BlurOperator& op, double mu) {
    return color_tikhonov(SpectralDecomposition::of(op), g, mix, mu);
}

/// Color counterpart of rre_sweep; RRE over all channels concatenated.
inline SweepCurve color_rre_sweep(const SpectralDecomposition& d, const ColorImage& g, const ColorMixing& mix,
                                  const ColorImage& f_true, std::size_t max_k) {
    detail::require(f_true.size() == g.size(), Errc::invalid_size, "true image size differs from data");
    const auto n = static_cast<std::size_t>(g.size().count());
    detail::require(max_k <= n, Errc::invalid_parameter, "max_k exceeds the number of components");
    const double true_norm = norm2(f_true);
    detail::require(true_norm > 0.0, Errc::division_guard, "true image has zero norm");
    const Eigen::Matrix3d inv = detail::mixing_inverse(mix);
    const auto ghat = detail::analyze_all(d, g);
    const auto order = sort_spectrum(d.grid()).order;
    const Matrix v1 = d.synthesis_factor(0);
    const Matrix v2 = d.synthesis_factor(1);
    const Eigen::Index n2 = g.size().cols;

    std::array<Image, 3> err;
    for (int c = 0; c < 3; ++c) err[c] = -f_true.channels[c];
    auto total = [&] {
        ColorImage e;
        e.channels = err;
        return norm2(e) / true_norm;
    };
    SweepCurve curve;
    curve.param.push_back(0.0);
    curve.rre.push_back(total());
    for (std::size_t k = 1; k <= max_k; ++k) {
        const Eigen::Index idx = order[k - 1];
        const double lam = d.grid().values.data()[idx];
        if (std::abs(lam) >= zero_eigenvalue_cutoff) {
            const Eigen::Vector3d v(ghat[0].data()[idx], ghat[1].data()[idx], ghat[2].data()[idx]);
            const Eigen::Vector3d f = inv * v / lam;
            const Matrix outer = v1.col(idx / n2) * v2.col(idx % n2).transpose();
            for (int c = 0; c < 3; ++c) err[c].noalias() += f[c] * outer;
        }
        curve.param.push_back(static_cast<double>(k));
        curve.rre.push_back(total());
    }
    curve.best = detail::argmin(curve.rre);
    return curve;
}

inline SweepCurve color_mu_sweep(const SpectralDecomposition& d, const ColorImage& g, const ColorMixing& mix,
                                 const ColorImage& f_true, const std::vector<double>& mu_grid) {
    check_mu_grid(mu_grid);
    detail::require(f_true.size() == g.size(), Errc::invalid_size, "true image size differs from data");
    const double true_norm = norm2(f_true);
    detail::require(true_norm > 0.0, Errc::division_guard, "true image has zero norm");
    const auto ghat = detail::analyze_all(d, g);
    SweepCurve curve;
    for (double mu : mu_grid) {
        const ColorImage f =
            detail::synthesize_all(d, detail::color_tikhonov_coefficients(ghat, d.grid().values, mix, mu));
        ColorImage e;
        for (int c = 0; c < 3; ++c) e.channels[c] = f.channels[c] - f_true.channels[c];
        curve.param.push_back(mu);
        curve.rre.push_back(norm2(e) / true_norm);
    }
    curve.best = detail::argmin(curve.rre);
    return curve;
}

} // namespace deblur
