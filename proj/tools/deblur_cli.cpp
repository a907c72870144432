// deblur: command-line front end.
//
//   deblur blur       --input scene --psf SPEC [--bc BC | --oversized] [--rho R --seed S] [--mix 9xV] --output F
//   deblur restore    --input g --psf SPEC --bc BC --method M (--k K | --delta D | --mu MU) [--mix 9xV] --output F
//   deblur sweep      --input g --truth f --psf SPEC --bc BC --method M [--max-k K | --mu-grid ...] --curve F [--picard F]
//   deblur experiment --config FILE [--set key=value ...]
//
// Exit status: 0 success, 2 configuration / input error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deblur/deblur.hpp"

namespace {

using namespace deblur;

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

int exit_code_for(Errc c) {
    switch (c) {
    case Errc::config:
    case Errc::invalid_parameter:
    case Errc::invalid_size:
    case Errc::precondition:
    case Errc::support_condition:
    case Errc::unsupported:
    case Errc::format:
    case Errc::io:
        return exit_config;
    case Errc::size_guard:
    case Errc::singular_mixing:
    case Errc::division_guard:
        return exit_numeric;
    }
    return exit_numeric;
}

ColorMixing parse_mix(const std::vector<double>& v) {
    if (v.empty()) return ColorMixing::identity();
    detail::require(v.size() == 9, Errc::invalid_parameter, "--mix needs 9 row-major entries");
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[i];
    return ColorMixing(m);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    detail::require(out.good(), Errc::io, "cannot write '" + path + "'");
    out << content;
}

struct Common {
    std::string input;
    std::string psf = "gaussian:2,1";
    std::string bc = "antireflective";
    std::vector<double> mix;
    std::string output;
};

void add_common(CLI::App* app, Common& c, bool with_bc) {
    app->add_option("-i,--input", c.input, "input image (.pgm, .ppm, or text matrix)")->required();
    app->add_option("-p,--psf", c.psf, "PSF: identity | gaussian:q,s | gaussian:q1,q2,s1,s2 | disk:q,r | file:path")
        ->capture_default_str();
    if (with_bc)
        app->add_option("-b,--bc", c.bc, "boundary condition: reflective | antireflective | periodic | zero")
            ->capture_default_str();
    app->add_option("--mix", c.mix, "row-stochastic 3x3 color mixing, 9 row-major values (color images)")
        ->expected(9);
}

struct Restoration {
    std::string method = "tsd";
    std::optional<std::size_t> k;
    std::optional<double> delta;
    std::optional<double> mu;
};

/// Decomposition matching the method; tsvd needs a separable PSF.
SpectralDecomposition decomposition_for(Method m, const BlurOperator& op) {
    if (m != Method::tsvd) return SpectralDecomposition::of(op);
    const auto f = separable_factors(op.psf());
    detail::require(f.has_value(), Errc::unsupported, "tsvd needs a separable PSF");
    return SpectralDecomposition::separable_svd(f->first, f->second, op.bc(), op.size());
}

int run_blur(const Common& c, bool oversized, double rho, std::uint64_t seed) {
    const PsfMask psf = parse_psf(c.psf);
    const NoiseSpec noise{rho, seed};
    if (is_color_path(c.input)) {
        const ColorImage img = load_color_image(c.input);
        const ColorMixing mix = parse_mix(c.mix);
        ColorImage g = oversized ? cross_channel_blur_oversized(img, mix, psf)
                                 : cross_channel_blur(img, mix, BlurOperator(psf, parse_boundary_condition(c.bc),
                                                                              img.size()));
        save_color_image(c.output, add_noise(g, noise).noisy);
    } else {
        const Image img = load_image(c.input);
        Image g = oversized ? blur_oversized_scene(img, psf)
                            : apply_blur(BlurOperator(psf, parse_boundary_condition(c.bc), size_of(img)), img);
        save_image(c.output, add_noise(g, noise).noisy);
    }
    return 0;
}

int run_restore(const Common& c, const Restoration& r) {
    const Method method = parse_method(r.method);
    const int given = int(r.k.has_value()) + int(r.delta.has_value()) + int(r.mu.has_value());
    detail::require(given == 1, Errc::config, "give exactly one of --k, --delta, --mu");
    detail::require(!r.mu || method == Method::tikhonov, Errc::config, "--mu goes with --method tikhonov");
    detail::require(r.mu || method != Method::tikhonov, Errc::config, "--method tikhonov needs --mu");
    const PsfMask psf = parse_psf(c.psf);
    const BoundaryCondition bc = parse_boundary_condition(c.bc);
    const TruncationRule rule = r.k ? TruncationRule{KeepCount{*r.k}} : TruncationRule{KeepAbove{r.delta.value_or(0)}};

    if (is_color_path(c.input)) {
        const ColorImage g = load_color_image(c.input);
        const ColorMixing mix = parse_mix(c.mix);
        const auto d = decomposition_for(method, BlurOperator(psf, bc, g.size()));
        const ColorImage f =
            method == Method::tikhonov ? color_tikhonov(d, g, mix, *r.mu) : color_truncated_restore(d, g, mix, rule);
        save_color_image(c.output, f);
    } else {
        const Image g = load_image(c.input);
        const auto d = decomposition_for(method, BlurOperator(psf, bc, size_of(g)));
        const auto res = method == Method::tikhonov ? tikhonov_restore(d, g, *r.mu) : truncated_restore(d, g, rule);
        save_image(c.output, res.image);
    }
    return 0;
}

int run_sweep(const Common& c, const std::string& method_name, const std::string& truth,
              std::optional<std::size_t> max_k, std::vector<double> mu_grid, const std::string& picard) {
    const Method method = parse_method(method_name);
    const PsfMask psf = parse_psf(c.psf);
    const BoundaryCondition bc = parse_boundary_condition(c.bc);
    if (mu_grid.empty()) mu_grid = default_mu_grid();
    SweepCurve curve;
    std::vector<std::vector<PicardPoint>> picards;

    if (is_color_path(c.input)) {
        const ColorImage g = load_color_image(c.input);
        const ColorImage f = load_color_image(truth);
        const ColorMixing mix = parse_mix(c.mix);
        const auto d = decomposition_for(method, BlurOperator(psf, bc, g.size()));
        curve = method == Method::tikhonov
                    ? color_mu_sweep(d, g, mix, f, mu_grid)
                    : color_rre_sweep(d, g, mix, f, max_k.value_or(static_cast<std::size_t>(g.size().count())));
        for (const auto& ch : g.channels) picards.push_back(picard_data(d, ch));
    } else {
        const Image g = load_image(c.input);
        const Image f = load_image(truth);
        const auto d = decomposition_for(method, BlurOperator(psf, bc, size_of(g)));
        curve = method == Method::tikhonov ? mu_sweep(d, g, f, mu_grid)
                                           : rre_sweep(d, g, f, max_k.value_or(static_cast<std::size_t>(g.size())));
        picards.push_back(picard_data(d, g));
    }

    std::ostringstream os;
    write_curve_csv(os, curve);
    write_text(c.output, os.str());
    if (!picard.empty()) {
        for (std::size_t i = 0; i < picards.size(); ++i) {
            std::ostringstream ps;
            write_picard_csv(ps, picards[i]);
            const char* suffix[] = {"_r", "_g", "_b"};
            write_text(picards.size() == 1 ? picard : picard + suffix[i], ps.str());
        }
    }
    std::printf("best %s = %.6e, rre = %.6e\n", method == Method::tikhonov ? "mu" : "k", curve.best_param(),
                curve.best_rre());
    return 0;
}

int run_experiment_verb(const std::string& config, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    for (const auto& o : overrides) {
        try {
            cfg.apply(o);
        } catch (const Error& e) {
            throw Error(Errc::config, std::string("--set ") + o + ": " + e.what());
        }
    }
    const auto report = run_experiment(cfg);
    for (const auto& r : report.rows)
        std::printf("%-15s %-9s rho=%.3e  optimum=%.6e  rre=%.6e\n", to_string(r.bc).c_str(),
                    to_string(r.method).c_str(), r.rho, r.optimum_param, r.rre);
    std::printf("wrote %s\n", (report.directory / "summary.csv").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image deblurring with Reflective and Anti-Reflective boundary conditions"};
    app.require_subcommand(1);

    Common blur_opts;
    bool oversized = false;
    double rho = 0.0;
    std::uint64_t seed = 42;
    auto* blur = app.add_subcommand("blur", "blur an image (optionally add seeded noise)");
    add_common(blur, blur_opts, true);
    blur->add_option("-o,--output", blur_opts.output, "output image")->required();
    blur->add_flag("--oversized", oversized, "treat input as the full scene; output is the inset FOV");
    blur->add_option("--rho", rho, "relative noise level")->capture_default_str();
    blur->add_option("--seed", seed, "noise seed")->capture_default_str();

    Common restore_opts;
    Restoration rest;
    auto* restore = app.add_subcommand("restore", "restore a blurred image with a spectral filter");
    add_common(restore, restore_opts, true);
    restore->add_option("-o,--output", restore_opts.output, "output image")->required();
    restore->add_option("-m,--method", rest.method, "tsd | tsvd | tikhonov")->capture_default_str();
    restore->add_option("--k", rest.k, "keep the k largest-|lambda| components");
    restore->add_option("--delta", rest.delta, "keep components with |lambda| >= delta");
    restore->add_option("--mu", rest.mu, "Tikhonov / re-blurring parameter");

    Common sweep_opts;
    std::string sweep_method = "tsd", truth, picard;
    std::optional<std::size_t> max_k;
    std::vector<double> mu_grid;
    auto* sweep = app.add_subcommand("sweep", "RRE curve over the filter parameter against a known image");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("-t,--truth", truth, "true image of the same size")->required();
    sweep->add_option("-m,--method", sweep_method, "tsd | tsvd | tikhonov")->capture_default_str();
    sweep->add_option("--max-k", max_k, "largest truncation count (default: all)");
    sweep->add_option("--mu-grid", mu_grid, "strictly increasing mu values (default: 40 log points in [1e-8, 1])");
    sweep->add_option("-o,--curve", sweep_opts.output, "curve CSV (param,rre)")->required();
    sweep->add_option("--picard", picard, "Picard CSV (color: _r/_g/_b suffixes)");

    std::string config;
    std::vector<std::string> overrides;
    auto* experiment = app.add_subcommand("experiment", "run a bc x method x rho experiment from a config file");
    experiment->add_option("-c,--config", config, "key=value config file")->check(CLI::ExistingFile);
    experiment->add_option("-s,--set", overrides, "override, key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (*blur) return run_blur(blur_opts, oversized, rho, seed);
        if (*restore) return run_restore(restore_opts, rest);
        if (*sweep) return run_sweep(sweep_opts, sweep_method, truth, max_k, mu_grid, picard);
        if (*experiment) return run_experiment_verb(config, overrides);
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_numeric;
    }
    return exit_config;
}
