// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. argv[1] is a scratch directory for experiment outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "deblur/deblur.hpp"
#include "oracle/dense_oracles.hpp"

using namespace deblur;
using BC = BoundaryCondition;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Induced infinity norm (max absolute row sum).
double inf_norm(const Matrix& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

Vector flat(const Image& x) { return oracle::vec(x); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Eigen::Matrix3d color_mix() {
    Eigen::Matrix3d m;
    m << 0.7, 0.2, 0.1, 0.25, 0.5, 0.25, 0.15, 0.1, 0.75;
    return m;
}

Vector stack(const ColorImage& c) {
    const auto n = c.size().count();
    Vector v(3 * n);
    for (int k = 0; k < 3; ++k) v.segment(k * n, n) = oracle::vec(c.channels[k]);
    return v;
}

ColorImage random_color(Size2 s, unsigned seed) {
    return {{oracle::random_image(s.rows, s.cols, seed), oracle::random_image(s.rows, s.cols, seed + 1),
             oracle::random_image(s.rows, s.cols, seed + 2)}};
}

/// 1D tau eigenvalue h0 + 2 sum_t h_t cos(t x), condensed directly from the mask.
double condensed_tau(const PsfMask& mask, int axis, double x) {
    const Matrix w = mask.weights() / mask.weights().sum();
    const Vector h = axis == 0 ? Vector(w.rowwise().sum()) : Vector(w.colwise().sum().transpose());
    const Eigen::Index q = (h.size() - 1) / 2;
    double v = h[q];
    for (Eigen::Index t = 1; t <= q; ++t) v += 2.0 * h[q + t] * std::cos(static_cast<double>(t) * x);
    return v;
}

// --- criteria ----------------------------------------------------------------

Outcome diagonalization() {
    Outcome o;
    const auto t0 = Clock::now();
    const Eigen::Index n = 8;
    const Matrix r = oracle::kron(oracle::dct3(n), oracle::dct3(n));
    const Matrix t = oracle::kron(oracle::ar_forward(n), oracle::ar_forward(n));
    const Matrix ti = oracle::kron(oracle::ar_inverse(n), oracle::ar_inverse(n));
    double worst = 0.0;
    for (const auto& [name, mask] : oracle::test_masks()) {
        const Vector lr = flat(eigen_grid(BlurOperator(mask, BC::reflective, {n, n})).values);
        const Vector la = flat(eigen_grid(BlurOperator(mask, BC::anti_reflective, {n, n})).values);
        const double er = inf_norm(r * lr.asDiagonal() * r.transpose() - oracle::reflective_2d(mask, n, n));
        const double ea = inf_norm(t * la.asDiagonal() * ti - oracle::ar_2d(mask, n, n));
        worst = std::max({worst, er, ea});
        o.check(er < 1e-10, std::string(name) + " reflective " + num(er));
        o.check(ea < 1e-10, std::string(name) + " anti-reflective " + num(ea));
    }
    const double secs = seconds_since(t0);
    o.check(secs < 5.0, "runtime " + num(secs) + " s");
    if (o.pass) o.detail = "max error " + num(worst) + ", " + num(secs) + " s";
    return o;
}

Outcome census() {
    Outcome o;
    const Size2 n{10, 12};
    for (const auto& [name, mask] : oracle::test_masks()) {
        const Image v = eigen_grid_ar(mask, n).values;
        auto count = [&](double x) {
            return std::count_if(v.data(), v.data() + v.size(), [x](double y) { return std::abs(y - x) < 1e-12; });
        };
        o.check(count(1.0) == 4, std::string(name) + ": value 1 appears " + std::to_string(count(1.0)) + " times");
        for (int axis = 0; axis < 2; ++axis) {
            const Eigen::Index m = (axis == 0 ? n.rows : n.cols) - 2;
            for (Eigen::Index j = 1; j <= m; ++j) {
                const double x = static_cast<double>(j) * std::numbers::pi / static_cast<double>(m + 1);
                const double tau = condensed_tau(mask, axis, x);
                const auto c = count(tau);
                o.check(c == 2, std::string(name) + " axis " + std::to_string(axis) + " node " + std::to_string(j) +
                                    " value " + num(tau) + " appears " + std::to_string(c) + " times");
            }
        }
    }
    return o;
}

Outcome transform_contracts() {
    Outcome o;
    for (Eigen::Index m : {8, 33, 256}) {
        const Matrix id = Matrix::Identity(m, m);
        const Matrix r = dense_transform(Transform::dct3, m);
        const Matrix q = dense_transform(Transform::dst1, m);
        const Matrix t = dense_transform(Transform::ar_forward, m);
        const Matrix ti = dense_transform(Transform::ar_inverse, m);
        const double er = oracle::max_abs(r.transpose() * r - id);
        const double eq = oracle::max_abs(q * q - id);
        const double et = oracle::max_abs(ti * t - id);
        o.check(er < 1e-12, "R^T R at m=" + std::to_string(m) + " " + num(er));
        o.check(eq < 1e-12, "Q^2 at m=" + std::to_string(m) + " " + num(eq));
        o.check(et < 1e-12, "T~T at m=" + std::to_string(m) + " " + num(et));

        Vector e1 = Vector::Zero(m);
        e1[0] = 1.0;
        const double pn2 = oracle::ramp(m).p.squaredNorm();
        const double ee = std::abs(ar_inverse_apply(e1).squaredNorm() - (1.0 + 2.0 * pn2));
        o.check(ee < 1e-12, "|T~ e1|^2 at m=" + std::to_string(m) + " off by " + num(ee));
    }
    for (Eigen::Index m : {8, 16, 64}) {
        const double smax = Eigen::JacobiSVD<Matrix>(dense_transform(Transform::ar_inverse, m)).singularValues()[0];
        const double bound = 1.0 + 2.0 * oracle::ramp(m).p.norm();
        o.check(smax <= bound, "sigma_max(T~) at m=" + std::to_string(m) + " " + num(smax) + " > " + num(bound));
    }
    return o;
}

Outcome solver_equivalence() {
    Outcome o;
    double worst = 0.0;
    for (Eigen::Index n : {6, 8}) {
        const Image g = oracle::random_image(n, n, static_cast<unsigned>(100 + n));
        for (const auto& [name, mask] : oracle::test_masks()) {
            const Matrix ar = oracle::reflective_2d(mask, n, n);
            const Matrix aa = oracle::ar_2d(mask, n, n);
            for (double mu : {1e-4, 1e-1}) {
                const double er = oracle::rel_err(flat(tikhonov_restore(g, BlurOperator(mask, BC::reflective, {n, n}), mu).image),
                                                  oracle::tikhonov(ar, flat(g), mu));
                const double ea =
                    oracle::rel_err(flat(tikhonov_restore(g, BlurOperator(mask, BC::anti_reflective, {n, n}), mu).image),
                                    oracle::reblurring(aa, flat(g), mu));
                worst = std::max({worst, er, ea});
                const std::string tag = std::string(name) + " n=" + std::to_string(n) + " mu=" + num(mu);
                o.check(er < 1e-9, "tikhonov " + tag + " " + num(er));
                o.check(ea < 1e-9, "re-blurring " + tag + " " + num(ea));
            }
        }
    }

    // Separable truncated SVD against the dense SVD of the full operator. With
    // equal factors the products of singular values form degenerate clusters,
    // inside which the dense basis is arbitrary, so the isotropic PSF is
    // compared at every prefix that does not split a cluster and an
    // anisotropic PSF (simple spectrum) at every prefix.
    const Eigen::Index n = 6;
    const Image g = oracle::random_image(n, n, 77);
    struct Case {
        const char* name;
        PsfMask psf;
        bool all_prefixes;
    };
    for (const auto& c : {Case{"gaussian3x3", gaussian_psf(1, 1, 1.0, 1.0), false},
                          Case{"anisotropic3x3", gaussian_psf(1, 1, 1.0, 0.6), true}}) {
        for (BC bc : {BC::reflective, BC::anti_reflective}) {
            const Matrix a = bc == BC::reflective ? oracle::reflective_2d(c.psf, n, n) : oracle::ar_2d(c.psf, n, n);
            const auto dense = oracle::truncated_svd_prefixes(a, flat(g));
            const auto nn = static_cast<std::size_t>(n * n);
            std::size_t compared = 0;
            for (std::size_t k = 1; k <= nn; ++k) {
                if (!c.all_prefixes && k < nn) {
                    const double s0 = dense.sigma[static_cast<Eigen::Index>(k - 1)];
                    const double s1 = dense.sigma[static_cast<Eigen::Index>(k)];
                    if (std::abs(s0 - s1) <= 1e-8 * s0) continue;
                }
                ++compared;
                const auto res = truncated_svd_separable(g, c.psf, bc, KeepCount{k});
                const double e = oracle::rel_err(flat(res.image), dense.prefix[k]);
                worst = std::max(worst, e);
                o.check(e < 1e-9, std::string("tsvd ") + c.name + " " + to_string(bc) + " k=" + std::to_string(k) +
                                      " " + num(e));
            }
            o.check(compared >= (c.all_prefixes ? nn : 10), std::string("too few prefixes compared for ") + c.name);
        }
    }
    if (o.pass) o.detail = "max relative error " + num(worst);
    return o;
}

Outcome color_decoupling() {
    Outcome o;
    const Eigen::Matrix3d ac = color_mix();
    const ColorMixing mix(ac);
    double worst_solve = 0.0, worst_blur = 0.0;
    for (const auto& [name, mask] : oracle::test_masks()) {
        {
            const Size2 n{6, 6};
            const ColorImage g = random_color(n, 21);
            const Matrix ar = oracle::reflective_2d(mask, 6, 6);
            const Matrix aa = oracle::ar_2d(mask, 6, 6);
            for (double mu : {1e-2, 1e-4}) {
                const Vector want_r = oracle::tikhonov(oracle::kron(ac, ar), stack(g), mu);
                const Matrix lhs = oracle::kron(ac.transpose() * ac, aa * aa) + mu * Matrix::Identity(108, 108);
                const Vector want_a = lhs.partialPivLu().solve(oracle::kron(ac.transpose(), aa) * stack(g));
                const double er =
                    oracle::rel_err(stack(color_tikhonov(g, mix, BlurOperator(mask, BC::reflective, n), mu)), want_r);
                const double ea =
                    oracle::rel_err(stack(color_tikhonov(g, mix, BlurOperator(mask, BC::anti_reflective, n), mu)), want_a);
                worst_solve = std::max({worst_solve, er, ea});
                o.check(er < 1e-9, std::string(name) + " reflective mu=" + num(mu) + " " + num(er));
                o.check(ea < 1e-9, std::string(name) + " anti-reflective mu=" + num(mu) + " " + num(ea));
            }
        }
        {
            const Size2 n{5, 5};
            const ColorImage f = random_color(n, 31);
            for (BC bc : {BC::reflective, BC::anti_reflective}) {
                const Matrix a = bc == BC::reflective ? oracle::reflective_2d(mask, 5, 5) : oracle::ar_2d(mask, 5, 5);
                const Vector want = oracle::kron(ac, a) * stack(f);
                const double e = (stack(cross_channel_blur(f, mix, BlurOperator(mask, bc, n))) - want).cwiseAbs().maxCoeff();
                worst_blur = std::max(worst_blur, e);
                o.check(e < 1e-12, std::string(name) + " matvec " + to_string(bc) + " " + num(e));
            }
        }
    }
    if (o.pass) o.detail = "solve " + num(worst_solve) + ", matvec " + num(worst_blur);
    return o;
}

ExperimentConfig trend_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.scene = "synthetic:smooth:64";
    cfg.psf = "gaussian:7,2";
    cfg.bcs = {BC::reflective, BC::anti_reflective};
    cfg.methods = {Method::tsd};
    cfg.rhos = {0.001, 0.01, 0.1};
    cfg.seed = 42;
    cfg.output = out.string();
    return cfg;
}

double optimum(const ExperimentReport& rep, BC bc, double rho) {
    for (const auto& r : rep.rows)
        if (r.bc == bc && r.method == Method::tsd && r.rho == rho) return r.rre;
    return std::nan("");
}

Outcome trend(const fs::path& work) {
    Outcome o;
    const auto t0 = Clock::now();
    const auto rep = run_experiment(trend_config(work / "trend_a"));
    const double secs = seconds_since(t0);
    std::string values;
    for (double rho : {0.001, 0.01, 0.1}) {
        const double r = optimum(rep, BC::reflective, rho), a = optimum(rep, BC::anti_reflective, rho);
        values += " rho=" + num(rho) + ": R " + num(r) + " AR " + num(a) + ";";
        if (rho < 0.05) {
            o.check(a < r, "AR not better at rho=" + num(rho) + " (R " + num(r) + ", AR " + num(a) + ")");
        } else {
            const double gap = std::abs(a - r) / std::min(a, r);
            o.check(gap < 0.1, "relative gap at rho=0.1 is " + num(gap));
        }
    }
    o.check(secs < 60.0, "runtime " + num(secs) + " s");
    if (o.pass) o.detail = values.substr(1) + " " + num(secs) + " s";
    return o;
}

/// Median |coef| over the smallest-|lambda| decile of a Picard CSV.
double tail_median(const fs::path& csv) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<double> coef;
    while (std::getline(in, line)) {
        const auto c = line.rfind(',');
        if (c != std::string::npos) coef.push_back(std::stod(line.substr(c + 1)));
    }
    if (coef.size() < 10) return std::nan("");
    std::vector<double> tail(coef.end() - static_cast<std::ptrdiff_t>(coef.size() / 10), coef.end());
    std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
    return tail[tail.size() / 2];
}

Outcome picard(const fs::path& work) {
    Outcome o;
    auto cfg = trend_config(work / "picard");
    cfg.rhos = {0.0, 0.05};
    cfg.write_images = false;
    run_experiment(cfg);
    std::string values;
    for (BC bc : {BC::reflective, BC::anti_reflective}) {
        const std::string stem = "picard_" + to_string(bc) + "_tsd_rho";
        const double clean = tail_median(work / "picard" / (stem + "0.csv"));
        const double noisy = tail_median(work / "picard" / (stem + "0.05.csv"));
        const double ratio = noisy / clean;
        values += " " + to_string(bc) + " ratio " + num(ratio) + ";";
        o.check(ratio >= 10.0, to_string(bc) + " decile-median ratio " + num(ratio));
    }
    if (o.pass) o.detail = values.substr(1);
    return o;
}

double time_once(const Image& x) {
    const auto t0 = Clock::now();
    const Image y = two_level_apply(x, Transform::ar_forward, Transform::ar_forward);
    const double t = seconds_since(t0);
    return std::isfinite(y(0, 0)) ? t : std::nan("");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

Outcome scaling() {
    Outcome o;
    const Image small = oracle::random_image(1024, 1024, 5);
    const Image large = oracle::random_image(2048, 2048, 6);
    time_once(small);
    time_once(large);
    // interleaved so both sizes see the same machine load
    std::vector<double> ts, tl;
    for (int i = 0; i < 5; ++i) {
        ts.push_back(time_once(small));
        tl.push_back(time_once(large));
    }
    const double ms = median(ts), ml = median(tl);
    const double ratio = ml / ms;
    o.check(ratio < 5.0, "ratio " + num(ratio));
    o.detail = (o.pass ? "" : o.detail + "; ") + "1024^2 " + num(ms) + " s, 2048^2 " + num(ml) + " s, ratio " + num(ratio);
    return o;
}

Outcome determinism(const fs::path& work) {
    Outcome o;
    run_experiment(trend_config(work / "trend_b"));
    const std::string a = slurp(work / "trend_a" / "summary.csv");
    const std::string b = slurp(work / "trend_b" / "summary.csv");
    o.check(!a.empty(), "summary.csv missing");
    o.check(a == b, "summary.csv differs between runs");
    return o;
}

} // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "deblur_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    struct Criterion {
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"diagonalization oracle, n=(8,8)", diagonalization},
        {"anti-reflective multiplicity census, n=(10,12)", census},
        {"transform contracts", transform_contracts},
        {"filter/solver oracle equivalence", solver_equivalence},
        {"color decoupling", color_decoupling},
        {"trend reproduction", [&] { return trend(work); }},
        {"Picard plateau", [&] { return picard(work); }},
        {"performance scaling", scaling},
        {"determinism", [&] { return determinism(work); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] criterion %zu: %s%s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].title,
                    o.detail.empty() ? "" : " | ", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
