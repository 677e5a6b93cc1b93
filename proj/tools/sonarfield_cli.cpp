// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

// sonarfield render|fit|gen|eval|plot
//
// Exit codes: 0 success, 1 other, 2 format, 3 dimension, 4 divergence.

#include "sonarfield/sonarfield.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Carries a C API status out of a subcommand.
struct Failure {
    sf_status status;
    std::string message;
};

void check(sf_status s, const std::string& context) {
    if (s != SF_OK) {
        std::string msg = context + ": " + sf_last_error();
        throw Failure{s, msg};
    }
}

int exit_code(sf_status s) {
    switch (s) {
        case SF_OK: return 0;
        case SF_ERR_FORMAT: return 2;
        case SF_ERR_DIMENSION: return 3;
        case SF_ERR_DIVERGENCE: return 4;
        default: return 1;
    }
}

struct ConfigDeleter {
    void operator()(sf_config* c) const { sf_config_free(c); }
};
struct GridDeleter {
    void operator()(sf_grid* g) const { sf_grid_free(g); }
};
struct FitDeleter {
    void operator()(sf_fit_result* r) const { sf_fit_result_free(r); }
};
using ConfigPtr = std::unique_ptr<sf_config, ConfigDeleter>;
using GridPtr = std::unique_ptr<sf_grid, GridDeleter>;
using FitPtr = std::unique_ptr<sf_fit_result, FitDeleter>;

ConfigPtr load_config(const std::string& path) {
    sf_config* c = nullptr;
    check(sf_config_load(path.c_str(), &c), "config");
    return ConfigPtr(c);
}

GridPtr load_grid(const std::string& path) {
    sf_grid* g = nullptr;
    check(sf_grid_read(path.c_str(), &g), "grid");
    return GridPtr(g);
}

sf_plane load_plane(const std::string& path) {
    sf_plane p{};
    check(sf_plane_load(path.c_str(), &p), "plane");
    return p;
}

json config_snapshot(const sf_config* cfg) {
    char* text = nullptr;
    check(sf_config_to_json(cfg, &text), "config");
    json j = json::parse(text);
    sf_string_free(text);
    return j;
}

std::string metrics_json(const sf_metrics& m) {
    char* text = nullptr;
    check(sf_metrics_to_json(&m, &text), "metrics");
    std::string out(text);
    sf_string_free(text);
    return out;
}

struct RunManifest {
    std::string command;
    json config = nullptr;
    std::optional<std::uint64_t> seed;
    json inputs = json::object();
    json outputs = json::object();
    json parameters = json::object();

    void write(const std::string& path, double seconds) const {
        json j = json::object();
        j["command"] = command;
        j["toolkit_version"] = sf_version();
        j["config"] = config;
        j["seed"] = seed ? json(*seed) : json(nullptr);
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["parameters"] = parameters;
        j["threads"] = sf_threads();
        j["duration_s"] = seconds;
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Failure{SF_ERR_IO, "cannot write run manifest '" + tmp + "'"};
            out << j.dump(2) << "\n";
            if (!out) throw Failure{SF_ERR_IO, "cannot write run manifest '" + tmp + "'"};
        }
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec) throw Failure{SF_ERR_IO, "cannot rename run manifest to '" + path + "': " + ec.message()};
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string config, heightfield, plane, out, gains, pgm, run_manifest;
};

void cmd_render(const RenderArgs& a) {
    const auto t0 = Clock::now();
    ConfigPtr cfg = load_config(a.config);
    GridPtr hf = load_grid(a.heightfield);
    const sf_plane plane = load_plane(a.plane);

    std::vector<double> gains;
    if (!a.gains.empty()) {
        size_t n = 0;
        check(sf_gains_load(a.gains.c_str(), nullptr, 0, &n), "gains");
        gains.resize(n);
        check(sf_gains_load(a.gains.c_str(), gains.data(), gains.size(), &n), "gains");
    }

    sf_grid* raw = nullptr;
    double ms = 0.0;
    check(sf_render(cfg.get(), hf.get(), &plane, gains.empty() ? nullptr : gains.data(), gains.size(), &raw, &ms),
          "render");
    GridPtr img(raw);
    check(sf_grid_write(a.out.c_str(), img.get()), "write");
    if (!a.pgm.empty()) check(sf_grid_write_pgm(a.pgm.c_str(), img.get(), 0), "pgm");
    std::printf("render_ms=%.3f\n", ms);

    if (!a.run_manifest.empty()) {
        RunManifest m;
        m.command = "render";
        m.config = config_snapshot(cfg.get());
        m.inputs = {{"config", a.config}, {"heightfield", a.heightfield}, {"plane", a.plane}, {"gains", a.gains}};
        m.outputs = {{"image", a.out}, {"pgm", a.pgm}};
        m.write(a.run_manifest, seconds_since(t0));
    }
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string target, config, plane, out_dir, mode = "kp", gt;
    sf_fit_settings s = sf_fit_settings_default();
};

void cmd_fit(FitArgs a) {
    const auto t0 = Clock::now();
    ConfigPtr cfg = load_config(a.config);
    GridPtr target = load_grid(a.target);
    const sf_plane plane = load_plane(a.plane);
    if (a.mode == "kp") a.s.mode = SF_MODE_KP;
    else if (a.mode == "ht") a.s.mode = SF_MODE_HT;
    else a.s.mode = SF_MODE_GV;

    sf_fit_result* raw = nullptr;
    check(sf_fit(cfg.get(), target.get(), &plane, &a.s, &raw), "fit");
    FitPtr result(raw);
    const double fit_s = seconds_since(t0);
    check(sf_fit_result_write(result.get(), a.out_dir.c_str()), "write");

    const size_t steps = sf_fit_result_steps(result.get());
    if (steps > 0) {
        std::printf("initial_recon=%.9g\n", sf_fit_result_recon(result.get(), 0));
        std::printf("final_recon=%.9g\n", sf_fit_result_recon(result.get(), steps - 1));
        std::printf("final_loss=%.9g\n", sf_fit_result_loss(result.get(), steps - 1));
    }
    std::printf("fit_s=%.3f\n", fit_s);

    if (!a.gt.empty()) {
        GridPtr gt = load_grid(a.gt);
        sf_metrics m{};
        check(sf_evaluate(cfg.get(), sf_fit_result_heightfield(result.get()), gt.get(), &plane, &m), "eval");
        std::printf("%s\n", metrics_json(m).c_str());
    }

    RunManifest m;
    m.command = "fit";
    m.config = config_snapshot(cfg.get());
    m.seed = a.s.seed;
    m.inputs = {{"target", a.target}, {"config", a.config}, {"plane", a.plane}, {"gt", a.gt}};
    m.outputs = {{"dir", a.out_dir},
                 {"heightfield", "heightfield.sfg"},
                 {"gains", "gains.json"},
                 {"loss", "loss.csv"},
                 {"final_image", "final_image.sfg"}};
    m.parameters = {{"mode", a.mode},
                    {"steps", a.s.steps},
                    {"lr", a.s.lr_geometry},
                    {"lr_gains", a.s.lr_gains},
                    {"warmup", a.s.warmup},
                    {"tv", a.s.lambda_tv},
                    {"weight_decay", a.s.weight_decay},
                    {"gv_min_coverage", a.s.gv_min_coverage},
                    {"gv_max_coverage", a.s.gv_max_coverage},
                    {"ht_coverage", a.s.ht_coverage},
                    {"optimize_tvg", a.s.optimize_tvg != 0}};
    m.write((fs::path(a.out_dir) / "run_manifest.json").string(), seconds_since(t0));
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::string preset, out_dir;
    int n = 0;
    std::uint64_t seed = 0;
    int octaves = 1;
};

void cmd_gen(const GenArgs& a) {
    const auto t0 = Clock::now();
    check(sf_gen_dataset(a.preset.c_str(), a.n, a.seed, a.octaves, a.out_dir.c_str()), "gen");
    std::printf("samples=%d\n", a.n);
    RunManifest m;
    m.command = "gen";
    m.seed = a.seed;
    m.outputs = {{"dir", a.out_dir}, {"manifest", "manifest.json"}};
    m.parameters = {{"preset", a.preset}, {"n", a.n}, {"octaves", a.octaves}};
    m.write((fs::path(a.out_dir) / "run_manifest.json").string(), seconds_since(t0));
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred, gt, plane, config, manifest, pred_root, run_manifest;
};

void cmd_eval(const EvalArgs& a) {
    const auto t0 = Clock::now();
    sf_metrics m{};
    RunManifest rm;
    rm.command = "eval";
    if (!a.manifest.empty()) {
        if (a.pred_root.empty()) throw Failure{SF_ERR_INVALID, "eval: --manifest requires --pred-root"};
        size_t n = 0;
        check(sf_eval_manifest(a.manifest.c_str(), a.pred_root.c_str(), &m, &n), "eval");
        rm.inputs = {{"manifest", a.manifest}, {"pred_root", a.pred_root}};
        rm.parameters = {{"samples", n}};
    } else {
        if (a.pred.empty() || a.gt.empty() || a.plane.empty() || a.config.empty())
            throw Failure{SF_ERR_INVALID, "eval: expected PRED GT PLANE CONFIG or --manifest"};
        ConfigPtr cfg = load_config(a.config);
        GridPtr pred = load_grid(a.pred);
        GridPtr gt = load_grid(a.gt);
        const sf_plane plane = load_plane(a.plane);
        check(sf_evaluate(cfg.get(), pred.get(), gt.get(), &plane, &m), "eval");
        rm.config = config_snapshot(cfg.get());
        rm.inputs = {{"pred", a.pred}, {"gt", a.gt}, {"plane", a.plane}, {"config", a.config}};
    }
    std::printf("%s\n", metrics_json(m).c_str());
    if (!a.run_manifest.empty()) rm.write(a.run_manifest, seconds_since(t0));
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
    std::string grid, out, colormap = "gray", run_manifest;
    bool normalize = false;
};

void cmd_plot(const PlotArgs& a) {
    const auto t0 = Clock::now();
    GridPtr g = load_grid(a.grid);
    // Height fields are radians, so they are always stretched to the full gray range.
    const bool normalize = a.normalize || sf_grid_kind_of(g.get()) == SF_GRID_HEIGHTFIELD;
    check(sf_grid_write_pgm(a.out.c_str(), g.get(), normalize ? 1 : 0), "plot");
    if (!a.run_manifest.empty()) {
        RunManifest m;
        m.command = "plot";
        m.inputs = {{"grid", a.grid}};
        m.outputs = {{"pgm", a.out}};
        m.parameters = {{"colormap", a.colormap}, {"normalize", normalize}};
        m.write(a.run_manifest, seconds_since(t0));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sonarfield: differentiable forward-looking sonar rendering and height-field inversion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sf_version()));

    int threads = 0;
    app.add_option("--threads", threads, "Worker cap (default: SONARFIELD_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);

    RenderArgs ra;
    auto* render = app.add_subcommand("render", "Render a height field to a sonar image");
    render->add_option("config", ra.config, "Sonar config JSON")->required();
    render->add_option("heightfield", ra.heightfield, "Height field (SFG1)")->required();
    render->add_option("plane", ra.plane, "Base plane JSON")->required();
    render->add_option("out", ra.out, "Output image (SFG1)")->required();
    render->add_option("--gains", ra.gains, "Per-beam gains JSON array");
    render->add_option("--pgm", ra.pgm, "Also write an 8-bit PGM preview");
    render->add_option("--run-manifest", ra.run_manifest, "Write a run manifest here on success");

    FitArgs fa;
    auto* fitc = app.add_subcommand("fit", "Fit a height field to a target image");
    fitc->add_option("target", fa.target, "Target image (SFG1)")->required();
    fitc->add_option("config", fa.config, "Sonar config JSON")->required();
    fitc->add_option("plane", fa.plane, "Known base plane JSON")->required();
    fitc->add_option("out_dir", fa.out_dir, "Output directory")->required();
    fitc->add_option("--mode", fa.mode, "Plane mode during optimization")
        ->check(CLI::IsMember({"kp", "ht", "gv"}))
        ->capture_default_str();
    fitc->add_option("--steps", fa.s.steps)->capture_default_str();
    fitc->add_option("--lr", fa.s.lr_geometry, "Height-field learning rate")->capture_default_str();
    fitc->add_option("--lr-gains", fa.s.lr_gains)->capture_default_str();
    fitc->add_option("--warmup", fa.s.warmup, "Steps with frozen gains")->capture_default_str();
    fitc->add_option("--tv", fa.s.lambda_tv, "TV weight")->capture_default_str();
    fitc->add_option("--weight-decay", fa.s.weight_decay)->capture_default_str();
    fitc->add_option("--seed", fa.s.seed)->capture_default_str();
    fitc->add_option("--gv-min", fa.s.gv_min_coverage)->capture_default_str();
    fitc->add_option("--gv-max", fa.s.gv_max_coverage)->capture_default_str();
    fitc->add_option("--ht-coverage", fa.s.ht_coverage)->capture_default_str();
    bool optimize_tvg = false;
    fitc->add_flag("--optimize-tvg", optimize_tvg, "Also fit the TVG exponent");
    fitc->add_option("--lr-tvg", fa.s.lr_tvg)->capture_default_str();
    fitc->add_option("--gt", fa.gt, "Ground-truth height field; prints metrics");

    GenArgs ga;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen->add_option("preset", ga.preset)
        ->required()
        ->check(CLI::IsMember({"in_dist", "holo_standard_like", "holo_rough_like"}));
    gen->add_option("n", ga.n)->required()->check(CLI::NonNegativeNumber);
    gen->add_option("seed", ga.seed)->required();
    gen->add_option("out_dir", ga.out_dir)->required();
    gen->add_option("--octaves", ga.octaves, "1, or 2 to stack a double-frequency layer")
        ->check(CLI::Range(1, 2))
        ->capture_default_str();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Compare a predicted height field with ground truth");
    eval->add_option("pred", ea.pred);
    eval->add_option("gt", ea.gt);
    eval->add_option("plane", ea.plane);
    eval->add_option("config", ea.config);
    eval->add_option("--manifest", ea.manifest, "Dataset manifest for batch mode");
    eval->add_option("--pred-root", ea.pred_root, "Directory holding <id>/heightfield.sfg");
    eval->add_option("--run-manifest", ea.run_manifest, "Write a run manifest here on success");

    PlotArgs pa;
    auto* plot = app.add_subcommand("plot", "Write a grid as a PGM preview");
    plot->add_option("grid", pa.grid)->required();
    plot->add_option("out", pa.out)->required();
    plot->add_option("--colormap", pa.colormap)->check(CLI::IsMember({"gray"}))->capture_default_str();
    plot->add_flag("--normalize", pa.normalize, "Min-max scale before quantizing");
    plot->add_option("--run-manifest", pa.run_manifest, "Write a run manifest here on success");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    sf_set_threads(threads);
    try {
        if (*render) cmd_render(ra);
        else if (*fitc) {
            fa.s.optimize_tvg = optimize_tvg ? 1 : 0;
            cmd_fit(fa);
        } else if (*gen) cmd_gen(ga);
        else if (*eval) cmd_eval(ea);
        else if (*plot) cmd_plot(pa);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return exit_code(f.status);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
