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

#include "sonarfield/sonarfield.h"

#include "sonarfield/evalmetrics.hpp"
#include "sonarfield/invert.hpp"
#include "sonarfield/io.hpp"
#include "sonarfield/parallel.hpp"
#include "sonarfield/render.hpp"
#include "sonarfield/terrain.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

struct sf_config {
    sonarfield::SonarConfig cfg;
};

struct sf_grid {
    sonarfield::Grid grid;
    sf_grid_kind kind = SF_GRID_IMAGE;
};

struct sf_fit_result {
    sonarfield::FitResult result;
    sf_grid heightfield;
    sf_grid image;
};

namespace {

using namespace sonarfield;

thread_local std::string t_error;
thread_local long long t_offset = -1;

sf_status fail(sf_status status, const std::string& message, long long offset = -1) {
    t_error = message;
    t_offset = offset;
    return status;
}

template <class F>
sf_status guarded(F&& body) {
    try {
        t_error.clear();
        t_offset = -1;
        body();
        return SF_OK;
    } catch (const FormatError& e) {
        return fail(SF_ERR_FORMAT, e.what(), e.offset());
    } catch (const Error& e) {
        return fail(static_cast<sf_status>(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(SF_ERR_FORMAT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(SF_ERR_OTHER, "out of memory");
    } catch (const std::exception& e) {
        return fail(SF_ERR_OTHER, e.what());
    } catch (...) {
        return fail(SF_ERR_OTHER, "unknown error");
    }
}

void require(const void* p, const char* name) {
    if (p == nullptr) throw Error(ErrorCode::Invalid, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

BasePlane to_plane(const sf_plane* p) { return BasePlane{p->phi_near, p->phi_far}; }

HeightField as_heightfield(const sf_grid* g, const SonarConfig& cfg) {
    if (g->kind != SF_GRID_HEIGHTFIELD) throw FormatError("expected a height-field grid", 12);
    if (g->grid.rows() != static_cast<std::size_t>(cfg.padded_rows()) ||
        g->grid.cols() != static_cast<std::size_t>(cfg.n_az))
        throw DimensionError("height field is " + std::to_string(g->grid.rows()) + "x" +
                             std::to_string(g->grid.cols()) + ", config expects " +
                             std::to_string(cfg.padded_rows()) + "x" + std::to_string(cfg.n_az));
    return HeightField{g->grid};
}

SonarImage as_image(const sf_grid* g, const SonarConfig& cfg) {
    if (g->kind != SF_GRID_IMAGE) throw FormatError("expected an image grid", 12);
    if (g->grid.rows() != static_cast<std::size_t>(cfg.n_bins) || g->grid.cols() != static_cast<std::size_t>(cfg.n_az))
        throw DimensionError("image is " + std::to_string(g->grid.rows()) + "x" + std::to_string(g->grid.cols()) +
                             ", config expects " + std::to_string(cfg.n_bins) + "x" + std::to_string(cfg.n_az));
    return SonarImage{g->grid, cfg};
}

sf_metrics to_c(const MetricsReport& r) {
    return sf_metrics{100.0 * r.mcd, 100.0 * r.rmse, 100.0 * r.mae, 1e4 * r.mse, static_cast<uint64_t>(r.n_points)};
}

OptimSettings to_settings(const sf_fit_settings& s) {
    OptimSettings o;
    o.steps = s.steps;
    o.lr_geometry = s.lr_geometry;
    o.lr_gains = s.lr_gains;
    o.warmup = s.warmup;
    o.lambda_tv = s.lambda_tv;
    o.weight_decay = s.weight_decay;
    switch (s.mode) {
        case SF_MODE_KP: o.mode = PlaneMode::KnownPlane; break;
        case SF_MODE_HT: o.mode = PlaneMode::HighTilt; break;
        case SF_MODE_GV: o.mode = PlaneMode::GenericView; break;
        default: throw Error(ErrorCode::Invalid, "unknown plane mode " + std::to_string(static_cast<int>(s.mode)));
    }
    o.gv_min_coverage = s.gv_min_coverage;
    o.gv_max_coverage = s.gv_max_coverage;
    o.ht_coverage = s.ht_coverage;
    o.optimize_tvg = s.optimize_tvg != 0;
    o.lr_tvg = s.lr_tvg;
    o.seed = s.seed;
    return o;
}

} // namespace

extern "C" {

const char* sf_version(void) { return SONARFIELD_VERSION; }

const char* sf_last_error(void) { return t_error.c_str(); }

long long sf_last_error_offset(void) { return t_offset; }

const char* sf_status_name(sf_status status) {
    switch (status) {
        case SF_OK: return "ok";
        case SF_ERR_OTHER: return "error";
        case SF_ERR_FORMAT: return "format error";
        case SF_ERR_DIMENSION: return "dimension mismatch";
        case SF_ERR_DIVERGENCE: return "divergence";
        case SF_ERR_INVALID: return "invalid argument";
        case SF_ERR_IO: return "i/o error";
    }
    return "unknown status";
}

void sf_set_threads(int n) { set_num_threads(n); }

int sf_threads(void) { return num_threads(); }

void sf_string_free(char* s) { std::free(s); }

sf_status sf_config_load(const char* path, sf_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new sf_config{load_config(path)};
    });
}

sf_status sf_config_from_json(const char* text, sf_config** out) {
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = new sf_config{config_from_json(text)};
    });
}

sf_status sf_config_to_json(const sf_config* cfg, char** out) {
    return guarded([&] {
        require(cfg, "cfg");
        require(out, "out");
        *out = dup_string(config_to_json(cfg->cfg));
    });
}

int sf_config_n_bins(const sf_config* cfg) { return cfg ? cfg->cfg.n_bins : 0; }
int sf_config_n_az(const sf_config* cfg) { return cfg ? cfg->cfg.n_az : 0; }
int sf_config_padded_rows(const sf_config* cfg) { return cfg ? cfg->cfg.padded_rows() : 0; }

void sf_config_free(sf_config* cfg) { delete cfg; }

sf_status sf_plane_load(const char* path, sf_plane* out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        const BasePlane p = load_plane(path);
        *out = sf_plane{p.phi_near, p.phi_far};
    });
}

sf_status sf_plane_save(const char* path, const sf_plane* plane) {
    return guarded([&] {
        require(path, "path");
        require(plane, "plane");
        save_plane(path, to_plane(plane));
    });
}

sf_status sf_grid_create(size_t rows, size_t cols, sf_grid_kind kind, sf_grid** out) {
    return guarded([&] {
        require(out, "out");
        if (kind != SF_GRID_IMAGE && kind != SF_GRID_HEIGHTFIELD) throw Error(ErrorCode::Invalid, "unknown grid kind");
        *out = new sf_grid{Grid(rows, cols), kind};
    });
}

sf_status sf_grid_read(const char* path, sf_grid** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        SfgGrid g = read_sfg(path);
        *out = new sf_grid{std::move(g.grid), static_cast<sf_grid_kind>(g.kind)};
    });
}

sf_status sf_grid_write(const char* path, const sf_grid* grid) {
    return guarded([&] {
        require(path, "path");
        require(grid, "grid");
        write_sfg(path, grid->grid, static_cast<SfgKind>(grid->kind));
    });
}

sf_status sf_grid_write_pgm(const char* path, const sf_grid* grid, int normalize) {
    return guarded([&] {
        require(path, "path");
        require(grid, "grid");
        write_pgm(path, grid->grid, normalize != 0);
    });
}

size_t sf_grid_rows(const sf_grid* grid) { return grid ? grid->grid.rows() : 0; }
size_t sf_grid_cols(const sf_grid* grid) { return grid ? grid->grid.cols() : 0; }
sf_grid_kind sf_grid_kind_of(const sf_grid* grid) { return grid ? grid->kind : SF_GRID_IMAGE; }
double* sf_grid_data(sf_grid* grid) { return grid ? grid->grid.values().data() : nullptr; }
const double* sf_grid_cdata(const sf_grid* grid) { return grid ? grid->grid.values().data() : nullptr; }
void sf_grid_free(sf_grid* grid) { delete grid; }

sf_status sf_gains_load(const char* path, double* out, size_t capacity, size_t* count) {
    return guarded([&] {
        require(path, "path");
        require(count, "count");
        const BeamGains g = load_gains(path);
        *count = g.gains.size();
        if (out != nullptr)
            for (std::size_t i = 0; i < g.gains.size() && i < capacity; ++i) out[i] = g.gains[i];
    });
}

sf_status sf_render(const sf_config* cfg, const sf_grid* heightfield, const sf_plane* plane, const double* gains,
                    size_t n_gains, sf_grid** out_image, double* render_ms) {
    return guarded([&] {
        require(cfg, "cfg");
        require(heightfield, "heightfield");
        require(plane, "plane");
        require(out_image, "out_image");
        const HeightField hf = as_heightfield(heightfield, cfg->cfg);
        const BasePlane p = to_plane(plane);
        check_plane(p, cfg->cfg);
        BeamGains g = unit_gains(cfg->cfg);
        if (gains != nullptr) g.gains.assign(gains, gains + n_gains);
        const auto t0 = std::chrono::steady_clock::now();
        SonarImage img = render(hf, p, g, cfg->cfg);
        const auto t1 = std::chrono::steady_clock::now();
        if (render_ms) *render_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        *out_image = new sf_grid{std::move(img.intensity), SF_GRID_IMAGE};
    });
}

sf_fit_settings sf_fit_settings_default(void) {
    const OptimSettings o;
    sf_fit_settings s;
    s.steps = o.steps;
    s.lr_geometry = o.lr_geometry;
    s.lr_gains = o.lr_gains;
    s.warmup = o.warmup;
    s.lambda_tv = o.lambda_tv;
    s.weight_decay = o.weight_decay;
    s.mode = SF_MODE_KP;
    s.gv_min_coverage = o.gv_min_coverage;
    s.gv_max_coverage = o.gv_max_coverage;
    s.ht_coverage = o.ht_coverage;
    s.optimize_tvg = o.optimize_tvg ? 1 : 0;
    s.lr_tvg = o.lr_tvg;
    s.seed = o.seed;
    return s;
}

sf_status sf_fit(const sf_config* cfg, const sf_grid* target, const sf_plane* plane, const sf_fit_settings* settings,
                 sf_fit_result** out) {
    return guarded([&] {
        require(cfg, "cfg");
        require(target, "target");
        require(plane, "plane");
        require(out, "out");
        const sf_fit_settings s = settings ? *settings : sf_fit_settings_default();
        const SonarImage img = as_image(target, cfg->cfg);
        auto* r = new sf_fit_result;
        try {
            r->result = fit(img, cfg->cfg, to_plane(plane), to_settings(s));
        } catch (...) {
            delete r;
            throw;
        }
        r->heightfield = sf_grid{r->result.heightfield.psi, SF_GRID_HEIGHTFIELD};
        r->image = sf_grid{r->result.final_image.intensity, SF_GRID_IMAGE};
        *out = r;
    });
}

sf_status sf_fit_result_write(const sf_fit_result* result, const char* out_dir) {
    return guarded([&] {
        require(result, "result");
        require(out_dir, "out_dir");
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw Error(ErrorCode::Io, std::string("cannot create '") + out_dir + "': " + ec.message());
        const fs::path root(out_dir);
        write_sfg((root / "heightfield.sfg").string(), result->result.heightfield.psi, SfgKind::HeightField);
        save_gains((root / "gains.json").string(), result->result.gains);
        write_file((root / "loss.csv").string(), loss_csv(result->result.loss_history));
        write_sfg((root / "final_image.sfg").string(), result->result.final_image.intensity, SfgKind::Image);
    });
}

size_t sf_fit_result_steps(const sf_fit_result* result) { return result ? result->result.loss_history.size() : 0; }

double sf_fit_result_loss(const sf_fit_result* result, size_t i) {
    return result && i < result->result.loss_history.size() ? result->result.loss_history[i] : std::nan("");
}

double sf_fit_result_recon(const sf_fit_result* result, size_t i) {
    return result && i < result->result.recon_history.size() ? result->result.recon_history[i] : std::nan("");
}

const sf_grid* sf_fit_result_heightfield(const sf_fit_result* result) { return result ? &result->heightfield : nullptr; }

const sf_grid* sf_fit_result_image(const sf_fit_result* result) { return result ? &result->image : nullptr; }

size_t sf_fit_result_gains(const sf_fit_result* result, double* out, size_t capacity) {
    if (!result) return 0;
    const auto& g = result->result.gains.gains;
    if (out != nullptr)
        for (std::size_t i = 0; i < g.size() && i < capacity; ++i) out[i] = g[i];
    return g.size();
}

void sf_fit_result_free(sf_fit_result* result) { delete result; }

sf_status sf_evaluate(const sf_config* cfg, const sf_grid* pred, const sf_grid* gt, const sf_plane* plane,
                      sf_metrics* out) {
    return guarded([&] {
        require(cfg, "cfg");
        require(pred, "pred");
        require(gt, "gt");
        require(plane, "plane");
        require(out, "out");
        const HeightField a = as_heightfield(pred, cfg->cfg);
        const HeightField b = as_heightfield(gt, cfg->cfg);
        *out = to_c(evaluate(a, b, to_plane(plane), cfg->cfg));
    });
}

sf_status sf_metrics_to_json(const sf_metrics* m, char** out) {
    return guarded([&] {
        require(m, "metrics");
        require(out, "out");
        nlohmann::json j = nlohmann::json::object();
        j["mcd_cm"] = m->mcd_cm;
        j["rmse_cm"] = m->rmse_cm;
        j["mae_cm"] = m->mae_cm;
        j["mse_cm2"] = m->mse_cm2;
        j["n_points"] = m->n_points;
        *out = dup_string(j.dump(2));
    });
}

sf_status sf_eval_manifest(const char* manifest_path, const char* pred_root, sf_metrics* mean, size_t* n_samples) {
    return guarded([&] {
        require(manifest_path, "manifest_path");
        require(pred_root, "pred_root");
        require(mean, "mean");
        namespace fs = std::filesystem;
        const fs::path base = fs::path(manifest_path).parent_path();
        const auto entries = load_manifest(manifest_path);
        std::vector<MetricsReport> reports;
        reports.reserve(entries.size());
        for (const auto& e : entries) {
            const SonarConfig cfg = load_config((base / e.cfg_path).string());
            const BasePlane plane = load_plane((base / e.plane_path).string());
            const std::size_t rows = static_cast<std::size_t>(cfg.padded_rows());
            const std::size_t cols = static_cast<std::size_t>(cfg.n_az);
            const HeightField gt{read_sfg_as((base / e.gt_path).string(), SfgKind::HeightField, rows, cols)};
            const HeightField pred{read_sfg_as((fs::path(pred_root) / e.id / "heightfield.sfg").string(),
                                               SfgKind::HeightField, rows, cols)};
            reports.push_back(evaluate(pred, gt, plane, cfg));
        }
        *mean = to_c(average_reports(reports));
        if (n_samples) *n_samples = reports.size();
    });
}

sf_status sf_gen_dataset(const char* preset, int n, uint64_t seed, int octaves, const char* out_dir) {
    return guarded([&] {
        require(preset, "preset");
        require(out_dir, "out_dir");
        gen_dataset(preset_by_name(preset), n, seed, out_dir, octaves);
    });
}

} // extern "C"
