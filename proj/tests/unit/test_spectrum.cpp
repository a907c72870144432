#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "deblur/spectrum.hpp"
#include "oracle/dense_oracles.hpp"

using namespace deblur;
using Index = Eigen::Index;
using BC = BoundaryCondition;

namespace {

Matrix diag_of(const EigenGrid& g) { return oracle::vec(g.values).asDiagonal(); }

double count_near(const Image& v, double x, double tol) {
    return static_cast<double>(((v.array() - x).abs() < tol).count());
}

} // namespace

TEST(Spectrum, ReflectiveIdentityAndOrigin) {
    EXPECT_LT((eigen_grid_reflective(PsfMask::identity(), {4, 5}).values.array() - 1.0).abs().maxCoeff(), 1e-15);
    for (const auto& [name, mask] : oracle::test_masks())
        EXPECT_NEAR(eigen_grid_reflective(mask, {6, 7}).values(0, 0), 1.0, 1e-14) << name;
}

TEST(Spectrum, ReflectiveCrossStencilLastNode) {
    // node (n-1) pi / n is not pi; the zero sits at f(pi, pi), reached only as n grows
    const auto g = eigen_grid_reflective(oracle::cross_stencil(), {4, 4});
    const double x = 3.0 * std::numbers::pi / 4.0;
    EXPECT_NEAR(g.values(3, 3), 0.5 + 0.5 * std::cos(x), 1e-15);
    EXPECT_NEAR(generating_function(oracle::cross_stencil(), std::numbers::pi, std::numbers::pi), 0.0, 1e-15);
}

TEST(Spectrum, ReflectiveRejectsAsymmetric) {
    Matrix w = Matrix::Ones(3, 3);
    w(2, 2) = 5;
    EXPECT_THROW(eigen_grid_reflective(PsfMask::from_weights(w), {4, 4}), Error);
}

TEST(Spectrum, TauOneDimensional) {
    const auto h = Kernel1d::from_weights((Vector(3) << 0.25, 0.5, 0.25).finished());
    const Vector l = eigen_grid_tau(h, 3);
    EXPECT_NEAR(l[0], 0.5 + 0.5 * std::cos(std::numbers::pi / 4), 1e-15);
    EXPECT_NEAR(l[0], 0.8536, 5e-5);
    EXPECT_NEAR(l[1], 0.5, 1e-15);
    EXPECT_NEAR(l[2], 0.1464, 5e-5);
    EXPECT_LT((eigen_grid_tau(Kernel1d::identity(), 4).array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(Spectrum, TauMatchesDenseDstDiagonalization) {
    // h = [1/2, 0, 1/2] with zero center
    const auto h = Kernel1d::from_weights((Vector(3) << 0.5, 0.0, 0.5).finished());
    for (Index m : {3, 6, 9}) {
        Matrix tau = Matrix::Zero(m, m);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                tau(i, j) = h.at(static_cast<int>(i - j)) - h.at(static_cast<int>(i + j + 2));
        const Matrix q = oracle::dst1(m);
        const Matrix d = q * tau * q;
        const Vector l = eigen_grid_tau(h, m);
        EXPECT_LT((d - Matrix(l.asDiagonal())).cwiseAbs().maxCoeff(), 1e-14) << m;
    }
}

TEST(Spectrum, ArGridLayout) {
    const auto mask = oracle::cross_stencil();
    const auto g = eigen_grid_ar(mask, {5, 5});
    EXPECT_EQ(g.values(0, 0), 1.0);
    EXPECT_EQ(g.values(0, 4), 1.0);
    EXPECT_EQ(g.values(4, 0), 1.0);
    EXPECT_EQ(g.values(4, 4), 1.0);
    const Image inner = eigen_grid_tau(mask, {3, 3}).values;
    EXPECT_LT((g.values.block(1, 1, 3, 3) - inner).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(g.values.row(0), g.values.row(4));
    EXPECT_EQ(g.values.col(0), g.values.col(4));
    EXPECT_LT((eigen_grid_ar(PsfMask::identity(), {4, 6}).values.array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(Spectrum, ArGridEqualsNodeFormula) {
    const auto mask = gaussian_psf(2, 1, 1.0, 0.8);
    const Size2 n{9, 7};
    const auto g = eigen_grid_ar(mask, n);
    auto node = [](Index j, Index m) {
        return (j == 0 || j == m - 1) ? 0.0 : static_cast<double>(j) * std::numbers::pi / static_cast<double>(m - 1);
    };
    for (Index i = 0; i < n.rows; ++i)
        for (Index j = 0; j < n.cols; ++j)
            EXPECT_NEAR(g.values(i, j), generating_function(mask, node(i, n.rows), node(j, n.cols)), 1e-14);
}

TEST(Spectrum, ArSupportViolation) {
    EXPECT_THROW(eigen_grid_ar(gaussian_psf(2, 2, 1, 1), {4, 9}), Error);
}

TEST(Spectrum, DiagonalizationReflectiveAndAntiReflective) {
    const Size2 n{8, 8};
    const Matrix r = oracle::kron(oracle::dct3(8), oracle::dct3(8));
    const Matrix t = oracle::kron(oracle::ar_forward(8), oracle::ar_forward(8));
    const Matrix ti = oracle::kron(oracle::ar_inverse(8), oracle::ar_inverse(8));
    for (const auto& [name, mask] : oracle::test_masks()) {
        const Matrix lr = diag_of(eigen_grid(BlurOperator(mask, BC::reflective, n)));
        const Matrix la = diag_of(eigen_grid(BlurOperator(mask, BC::anti_reflective, n)));
        EXPECT_LT((r * lr * r.transpose() - oracle::reflective_2d(mask, 8, 8)).cwiseAbs().maxCoeff(), 1e-10) << name;
        EXPECT_LT((t * la * ti - oracle::ar_2d(mask, 8, 8)).cwiseAbs().maxCoeff(), 1e-10) << name;
    }
}

TEST(Spectrum, DiagonalizationRectangular) {
    const auto mask = gaussian_psf(2, 1, 0.9, 1.4);
    const Matrix t = oracle::kron(oracle::ar_forward(7), oracle::ar_forward(6));
    const Matrix ti = oracle::kron(oracle::ar_inverse(7), oracle::ar_inverse(6));
    const Matrix la = diag_of(eigen_grid_ar(mask, {7, 6}));
    EXPECT_LT((t * la * ti - oracle::ar_2d(mask, 7, 6)).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix r = oracle::kron(oracle::dct3(7), oracle::dct3(6));
    const Matrix lr = diag_of(eigen_grid_reflective(mask, {7, 6}));
    EXPECT_LT((r * lr * r.transpose() - oracle::reflective_2d(mask, 7, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectrum, MultiplicityCensus) {
    const Size2 n{10, 12};
    for (const auto& [name, mask] : oracle::test_masks()) {
        const Image v = eigen_grid_ar(mask, n).values;
        EXPECT_EQ(count_near(v, 1.0, 1e-12), 4.0) << name;
        const auto [h_row, h_col] = condensed_psfs(mask);
        for (double l : eigen_grid_tau(h_row, n.cols - 2)) EXPECT_GE(count_near(v, l, 1e-12), 2.0) << name;
        for (double l : eigen_grid_tau(h_col, n.rows - 2)) EXPECT_GE(count_near(v, l, 1e-12), 2.0) << name;
    }
}

TEST(Spectrum, FirstColumnCrossCheck) {
    EXPECT_LT((eigen_from_first_column(BlurOperator(PsfMask::identity(), BC::reflective, {5, 4})).values.array() -
               1.0)
                  .abs()
                  .maxCoeff(),
              1e-14);
    const std::pair<PsfMask, Size2> cases[] = {{oracle::cross_stencil(), {6, 6}},
                                               {gaussian_psf(1, 1, 1.0, 1.0), {8, 8}}};
    for (const auto& [mask, n] : cases) {
        const BlurOperator op(mask, BC::reflective, n);
        EXPECT_LT((eigen_from_first_column(op).values - eigen_grid_reflective(mask, n).values).cwiseAbs().maxCoeff(),
                  1e-12);
    }
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix w(5, 7);
        for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(gen);
        const auto mask = symmetrize(PsfMask::from_weights(w));
        const BlurOperator op(mask, BC::reflective, {9, 11});
        EXPECT_LT((eigen_from_first_column(op).values - eigen_grid(op).values).cwiseAbs().maxCoeff(), 1e-11);
    }
    EXPECT_THROW(eigen_from_first_column(BlurOperator(oracle::cross_stencil(), BC::anti_reflective, {5, 5})), Error);
}

TEST(Spectrum, BoundedByOne) {
    for (const auto& [name, mask] : oracle::test_masks()) {
        EXPECT_LE(eigen_grid_reflective(mask, {9, 9}).values.cwiseAbs().maxCoeff(), 1.0 + 1e-15);
        EXPECT_LE(eigen_grid_ar(mask, {9, 9}).values.cwiseAbs().maxCoeff(), 1.0 + 1e-15);
    }
}

TEST(Spectrum, NonSpectralBoundaryUnsupported) {
    EXPECT_THROW(eigen_grid(BlurOperator(PsfMask::identity(), BC::periodic, {3, 3})), Error);
}

TEST(Spectrum, SortExample) {
    EigenGrid g;
    g.values.resize(2, 2);
    g.values << 1, 0.5, -0.8, 0.1;
    const auto o = sort_spectrum(g).order;
    EXPECT_EQ(o, (std::vector<Index>{0, 2, 1, 3}));
}

TEST(Spectrum, SortTiesRowMajor) {
    EigenGrid g;
    g.values = Image::Ones(3, 4);
    const auto o = sort_spectrum(g).order;
    for (Index i = 0; i < 12; ++i) EXPECT_EQ(o[i], i);
    g.values(1, 1) = -1.0;
    EXPECT_EQ(sort_spectrum(g).order, o);
}

TEST(Spectrum, ArCornersLeadTheOrdering) {
    const auto g = eigen_grid_ar(gaussian_psf(2, 2, 1.0, 1.0), {8, 9});
    const auto o = sort_spectrum(g).order;
    EXPECT_EQ(o[0], 0);
    EXPECT_EQ(o[1], 8);
    EXPECT_EQ(o[2], 7 * 9);
    EXPECT_EQ(o[3], 7 * 9 + 8);
}

TEST(Spectrum, CsvExport) {
    EigenGrid g;
    g.values.resize(1, 2);
    g.values << 0.1, -2.0;
    std::ostringstream os;
    write_csv(os, g);
    EXPECT_EQ(os.str(), "0.10000000000000001,-2\n");
}
