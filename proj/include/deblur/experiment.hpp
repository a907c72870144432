#pragma once

// Experiment runner: true scene larger than the field of view, ground-truth
// blur with the real boundary data, seeded noise, then every
// (boundary condition, method, noise level) cell with its optimal parameter.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "deblur/color.hpp"
#include "deblur/error.hpp"
#include "deblur/filtering.hpp"
#include "deblur/io.hpp"
#include "deblur/metrics.hpp"
#include "deblur/operators.hpp"
#include "deblur/psf.hpp"
#include "deblur/types.hpp"

namespace deblur {

enum class Method { tsd, tsvd, tikhonov };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::tsd: return "tsd";
    case Method::tsvd: return "tsvd";
    case Method::tikhonov: return "tikhonov";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "tsd") return Method::tsd;
    if (s == "tsvd") return Method::tsvd;
    if (s == "tikhonov" || s == "reblurring") return Method::tikhonov;
    throw Error(Errc::invalid_parameter, "unknown method '" + s + "' (expected tsd, tsvd, tikhonov)");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(Errc::invalid_parameter, "not a number: '" + s + "'");
}

inline long parse_long(const std::string& s) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(Errc::invalid_parameter, "not an integer: '" + s + "'");
}

inline std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& t : split(s, ',')) out.push_back(parse_double(t));
    return out;
}

} // namespace detail

/// PSF from a spec string:
///   identity
///   gaussian:q,sigma | gaussian:q1,q2,sigma1,sigma2
///   disk:q,r         | disk:q1,q2,r          (out-of-focus; alias "oof")
///   file:path                                 (text mask, see read_mask_text)
inline PsfMask parse_psf(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "identity") return PsfMask::identity();
    if (kind == "file") return load_mask_text(args);
    const auto v = detail::parse_doubles(args);
    auto as_int = [](double x) {
        detail::require(x >= 0.0 && x == std::floor(x), Errc::invalid_parameter, "half support must be an integer");
        return static_cast<int>(x);
    };
    if (kind == "gaussian") {
        if (v.size() == 2) return gaussian_psf(as_int(v[0]), as_int(v[0]), v[1], v[1]);
        if (v.size() == 4) return gaussian_psf(as_int(v[0]), as_int(v[1]), v[2], v[3]);
    } else if (kind == "disk" || kind == "oof") {
        if (v.size() == 2) return out_of_focus_psf(as_int(v[0]), as_int(v[0]), v[1]);
        if (v.size() == 3) return out_of_focus_psf(as_int(v[0]), as_int(v[1]), v[2]);
    }
    throw Error(Errc::invalid_parameter, "bad PSF spec '" + spec + "'");
}

/// Smooth, non-periodic gray scene: a bilinear ramp plus two low-frequency
/// sinusoids whose periods do not divide the frame, so intensity and normal
/// derivative are nonzero at the borders. `variant` shifts the phases.
inline Image smooth_scene(Size2 s, int variant = 0) {
    Image f(s.rows, s.cols);
    const double ph = 0.7 * variant;
    constexpr double tau = 2.0 * std::numbers::pi;
    for (Eigen::Index i = 0; i < s.rows; ++i)
        for (Eigen::Index j = 0; j < s.cols; ++j) {
            const double u = static_cast<double>(i) / static_cast<double>(std::max<Eigen::Index>(s.rows - 1, 1));
            const double v = static_cast<double>(j) / static_cast<double>(std::max<Eigen::Index>(s.cols - 1, 1));
            f(i, j) = 0.4 + 0.3 * u * v + 0.15 * std::sin(tau * 0.9 * u + 0.5 + ph) +
                      0.1 * std::cos(tau * 0.75 * v + 0.3 + ph);
        }
    return f;
}

inline ColorImage smooth_color_scene(Size2 s) {
    return {{smooth_scene(s, 0), smooth_scene(s, 1), smooth_scene(s, 2)}};
}

struct ExperimentConfig {
    std::string scene = "synthetic:smooth:64";
    std::string psf = "gaussian:7,2";
    std::vector<BoundaryCondition> bcs{BoundaryCondition::reflective, BoundaryCondition::anti_reflective};
    std::vector<Method> methods{Method::tsd};
    std::vector<double> rhos{0.01};
    std::uint64_t seed = 42;
    std::string output = "deblur_out";
    std::optional<Eigen::Matrix3d> mix;
    std::vector<double> mu_grid = default_mu_grid();
    std::optional<std::size_t> max_k;
    bool write_images = true;

    /// Applies one "key = value" assignment.
    void set(const std::string& key, const std::string& value) {
        if (key == "scene" || key == "image") {
            scene = value;
        } else if (key == "psf") {
            psf = value;
        } else if (key == "bcs" || key == "bc") {
            bcs.clear();
            for (const auto& t : detail::split(value, ',')) bcs.push_back(parse_boundary_condition(t));
        } else if (key == "methods" || key == "method") {
            methods.clear();
            for (const auto& t : detail::split(value, ',')) methods.push_back(parse_method(t));
        } else if (key == "rhos" || key == "rho") {
            rhos = detail::parse_doubles(value);
        } else if (key == "seed") {
            const long s = detail::parse_long(value);
            detail::require(s >= 0, Errc::invalid_parameter, "seed must be nonnegative");
            seed = static_cast<std::uint64_t>(s);
        } else if (key == "output") {
            output = value;
        } else if (key == "mix") {
            if (value == "none") {
                mix.reset();
                return;
            }
            const auto v = detail::parse_doubles(value);
            detail::require(v.size() == 9, Errc::invalid_parameter, "mix needs 9 row-major entries");
            Eigen::Matrix3d m;
            for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[i];
            mix = m;
        } else if (key == "mu_grid") {
            if (value.rfind("log:", 0) == 0) {
                const auto v = detail::parse_doubles(value.substr(4));
                detail::require(v.size() == 3, Errc::invalid_parameter, "mu_grid log:lo,hi,count");
                mu_grid = log_grid(v[0], v[1], static_cast<std::size_t>(v[2]));
            } else {
                mu_grid = detail::parse_doubles(value);
            }
        } else if (key == "max_k") {
            if (value == "all") {
                max_k.reset();
                return;
            }
            const long k = detail::parse_long(value);
            detail::require(k >= 0, Errc::invalid_parameter, "max_k must be nonnegative");
            max_k = static_cast<std::size_t>(k);
        } else if (key == "write_images") {
            write_images = value == "1" || value == "true" || value == "yes";
        } else {
            throw Error(Errc::invalid_parameter, "unknown config key '" + key + "'");
        }
    }

    /// "key=value" override.
    void apply(const std::string& assignment) {
        const auto eq = assignment.find('=');
        detail::require(eq != std::string::npos, Errc::config, "expected key=value, got '" + assignment + "'");
        set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
    }

    bool is_color() const { return mix.has_value() || (!is_synthetic() && is_color_path(scene)); }
    bool is_synthetic() const { return scene.rfind("synthetic:", 0) == 0; }
};

/// Flat key=value file; blank lines and '#' comments ignored.
inline ExperimentConfig read_config(std::istream& in, ExperimentConfig cfg = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        try {
            cfg.apply(line);
        } catch (const Error& e) {
            throw Error(Errc::config, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    detail::require(in.good(), Errc::config, "cannot open config '" + path + "'");
    return read_config(in);
}

struct SummaryRow {
    BoundaryCondition bc;
    Method method;
    double rho;
    double optimum_param;
    double rre;
};

struct ExperimentReport {
    std::vector<SummaryRow> rows;
    std::filesystem::path directory;
};

namespace detail {

/// Parses "synthetic:<name>:<n>" or "...:<n1>x<n2>" into (name, FOV size).
inline std::pair<std::string, Size2> parse_synthetic(const std::string& spec) {
    const auto parts = split(spec, ':');
    require(parts.size() == 3, Errc::config, "synthetic scene must be synthetic:<name>:<size>");
    const auto dims = split(parts[2], 'x');
    require(dims.size() == 1 || dims.size() == 2, Errc::config, "bad synthetic size '" + parts[2] + "'");
    const long n1 = parse_long(dims[0]);
    const long n2 = dims.size() == 2 ? parse_long(dims[1]) : n1;
    require(n1 >= 3 && n2 >= 3, Errc::config, "synthetic FOV must be at least 3x3");
    require(parts[1] == "smooth" || parts[1] == "smooth-color", Errc::config,
            "unknown synthetic scene '" + parts[1] + "'");
    return {parts[1], {n1, n2}};
}

struct Scene {
    std::optional<Image> gray;
    std::optional<ColorImage> color;

    Size2 size() const { return gray ? size_of(*gray) : color->size(); }
};

inline Scene build_scene(const ExperimentConfig& cfg, const PsfMask& psf) {
    Scene s;
    if (cfg.is_synthetic()) {
        const auto [name, fov] = parse_synthetic(cfg.scene);
        const Size2 full{fov.rows + 2 * psf.q1(), fov.cols + 2 * psf.q2()};
        if (cfg.is_color() || name == "smooth-color")
            s.color = smooth_color_scene(full);
        else
            s.gray = smooth_scene(full);
        return s;
    }
    require(std::filesystem::exists(cfg.scene), Errc::config, "scene file '" + cfg.scene + "' does not exist");
    if (is_color_path(cfg.scene))
        s.color = load_color_image(cfg.scene);
    else
        s.gray = load_image(cfg.scene);
    return s;
}

inline Image crop_fov(const Image& scene, const PsfMask& psf) {
    return scene.block(psf.q1(), psf.q2(), scene.rows() - 2 * psf.q1(), scene.cols() - 2 * psf.q2());
}

inline ColorImage crop_fov(const ColorImage& scene, const PsfMask& psf) {
    return {{crop_fov(scene.channels[0], psf), crop_fov(scene.channels[1], psf), crop_fov(scene.channels[2], psf)}};
}

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    require(out.good(), Errc::io, "cannot write '" + p.string() + "'");
    out << content;
}

} // namespace detail

/// Checks everything that can be checked before computing. Throws Errc::config.
inline void validate(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& what) { throw Error(Errc::config, what); };
    if (cfg.bcs.empty()) fail("bcs list is empty");
    if (cfg.methods.empty()) fail("methods list is empty");
    if (cfg.rhos.empty()) fail("rhos list is empty");
    if (cfg.output.empty()) fail("output directory not set");
    for (auto bc : cfg.bcs)
        if (!is_spectral(bc)) fail("boundary condition '" + to_string(bc) + "' has no spectral filtering path");
    for (double r : cfg.rhos)
        if (!(r >= 0.0) || !std::isfinite(r)) fail("noise levels must be finite and >= 0");
    try {
        check_mu_grid(cfg.mu_grid);
        const PsfMask psf = parse_psf(cfg.psf);
        if (cfg.mix) ColorMixing{*cfg.mix};
        for (auto m : cfg.methods)
            if (m == Method::tsvd && !separable_factors(psf)) fail("method tsvd needs a separable PSF");
        const auto scene = detail::build_scene(cfg, psf);
        const Size2 full = scene.size();
        if (full.rows <= 2 * psf.q1() || full.cols <= 2 * psf.q2()) fail("scene smaller than the PSF margins");
        const Size2 fov{full.rows - 2 * psf.q1(), full.cols - 2 * psf.q2()};
        for (auto bc : cfg.bcs) BlurOperator(psf, bc, fov);
        if (cfg.max_k && *cfg.max_k > static_cast<std::size_t>(fov.count())) fail("max_k exceeds the FOV pixel count");
    } catch (const Error& e) {
        if (e.code() == Errc::config) throw;
        throw Error(Errc::config, e.what());
    }
}

/// Runs every configured cell and writes, under cfg.output:
///   summary.csv                      bc,method,rho,optimum_param,rre ("%.6e")
///   curve_<cell>.csv                 param,rre
///   picard_<cell>.csv                k,abs_lambda,abs_coef (color: _r/_g/_b)
///   restored_<cell>.pgm|ppm, true_fov, observed_<rho>
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    namespace fs = std::filesystem;
    const PsfMask psf = parse_psf(cfg.psf);
    const auto scene = detail::build_scene(cfg, psf);
    const bool color = scene.color.has_value();
    const ColorMixing mix = cfg.mix ? ColorMixing(*cfg.mix) : ColorMixing::identity();
    const fs::path dir(cfg.output);
    fs::create_directories(dir);

    ExperimentReport report;
    report.directory = dir;
    const auto ext = color ? ".ppm" : ".pgm";

    std::optional<Image> truth_gray, clean_gray;
    std::optional<ColorImage> truth_color, clean_color;
    if (color) {
        truth_color = detail::crop_fov(*scene.color, psf);
        clean_color = cross_channel_blur_oversized(*scene.color, mix, psf);
        if (cfg.write_images) save_color_image((dir / (std::string("true_fov") + ext)).string(), *truth_color);
    } else {
        truth_gray = detail::crop_fov(*scene.gray, psf);
        clean_gray = blur_oversized_scene(*scene.gray, psf);
        if (cfg.write_images) save_image((dir / (std::string("true_fov") + ext)).string(), *truth_gray);
    }
    const Size2 fov = color ? truth_color->size() : size_of(*truth_gray);
    const std::size_t max_k = cfg.max_k.value_or(static_cast<std::size_t>(fov.count()));

    for (double rho : cfg.rhos) {
        const NoiseSpec noise{rho, cfg.seed};
        std::optional<Image> g_gray;
        std::optional<ColorImage> g_color;
        const std::string rho_tag = "rho" + detail::fmt("%g", rho);
        if (color) {
            g_color = add_noise(*clean_color, noise).noisy;
            if (cfg.write_images) save_color_image((dir / ("observed_" + rho_tag + ext)).string(), *g_color);
        } else {
            g_gray = add_noise(*clean_gray, noise).noisy;
            if (cfg.write_images) save_image((dir / ("observed_" + rho_tag + ext)).string(), *g_gray);
        }

        for (auto bc : cfg.bcs) {
            const BlurOperator op(psf, bc, fov);
            const auto sd = SpectralDecomposition::of(op);
            std::optional<SpectralDecomposition> svd;
            for (auto method : cfg.methods) {
                if (method == Method::tsvd && !svd) {
                    const auto f = *separable_factors(psf);
                    svd = SpectralDecomposition::separable_svd(f.first, f.second, bc, fov);
                }
                const SpectralDecomposition& d = method == Method::tsvd ? *svd : sd;
                const std::string cell = to_string(bc) + "_" + to_string(method) + "_" + rho_tag;
                SweepCurve curve;
                if (color) {
                    curve = method == Method::tikhonov ? color_mu_sweep(d, *g_color, mix, *truth_color, cfg.mu_grid)
                                                       : color_rre_sweep(d, *g_color, mix, *truth_color, max_k);
                } else {
                    curve = method == Method::tikhonov ? mu_sweep(d, *g_gray, *truth_gray, cfg.mu_grid)
                                                       : rre_sweep(d, *g_gray, *truth_gray, max_k);
                }
                {
                    std::ostringstream os;
                    write_curve_csv(os, curve);
                    detail::write_file(dir / ("curve_" + cell + ".csv"), os.str());
                }
                if (color) {
                    const char* names[] = {"r", "g", "b"};
                    for (int c = 0; c < 3; ++c) {
                        std::ostringstream os;
                        write_picard_csv(os, picard_data(d, g_color->channels[c]));
                        detail::write_file(dir / ("picard_" + cell + "_" + names[c] + ".csv"), os.str());
                    }
                } else {
                    std::ostringstream os;
                    write_picard_csv(os, picard_data(d, *g_gray));
                    detail::write_file(dir / ("picard_" + cell + ".csv"), os.str());
                }
                if (cfg.write_images) {
                    const auto path = (dir / ("restored_" + cell + ext)).string();
                    if (color) {
                        const auto restored =
                            method == Method::tikhonov
                                ? color_tikhonov(d, *g_color, mix, curve.best_param())
                                : color_truncated_restore(d, *g_color, mix,
                                                          KeepCount{static_cast<std::size_t>(curve.best_param())});
                        save_color_image(path, restored);
                    } else {
                        const auto restored =
                            method == Method::tikhonov
                                ? tikhonov_restore(d, *g_gray, curve.best_param())
                                : truncated_restore(d, *g_gray, KeepCount{static_cast<std::size_t>(curve.best_param())});
                        save_image(path, restored.image);
                    }
                }
                report.rows.push_back({bc, method, rho, curve.best_param(), curve.best_rre()});
            }
        }
    }

    std::ostringstream summary;
    summary << "bc,method,rho,optimum_param,rre\n";
    for (const auto& r : report.rows)
        summary << to_string(r.bc) << ',' << to_string(r.method) << ',' << detail::fmt("%.6e", r.rho) << ','
                << detail::fmt("%.6e", r.optimum_param) << ',' << detail::fmt("%.6e", r.rre) << '\n';
    detail::write_file(dir / "summary.csv", summary.str());
    return report;
}

} // namespace deblur
