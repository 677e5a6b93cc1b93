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

#include "sonarfield/graddiff.hpp"

#include "sonarfield/losses.hpp"
#include "sonarfield/parallel.hpp"
#include "sonarfield/render.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sonarfield {

DiffParams initial_params(const SonarConfig& cfg) {
    return DiffParams{zero_heightfield(cfg), unit_gains(cfg), cfg.tvg_exponent};
}

namespace {

SonarConfig with_tvg(const SonarConfig& cfg, double tvg) {
    SonarConfig out = cfg;
    out.tvg_exponent = tvg;
    return out;
}

void check_target(const SonarImage& target, const SonarConfig& cfg) {
    if (target.intensity.rows() != static_cast<std::size_t>(cfg.n_bins) ||
        target.intensity.cols() != static_cast<std::size_t>(cfg.n_az))
        throw DimensionError("target image is " + std::to_string(target.intensity.rows()) + "x" +
                             std::to_string(target.intensity.cols()) + ", config expects " +
                             std::to_string(cfg.n_bins) + "x" + std::to_string(cfg.n_az));
}

void require_finite(double v, const char* stage) {
    if (!std::isfinite(v)) throw NonFiniteError(stage);
}

void require_finite(const Grid& g, const char* stage) {
    if (!g.all_finite()) throw NonFiniteError(stage);
}

// Pulls normal adjoints back onto the total-height grid.
void normals_adjoint(const Grid& totals, const NormalField& normals, const std::vector<Vec3>& adj_n,
                     const SonarConfig& cfg, Grid& adj_totals) {
    const std::size_t rows = totals.rows();
    const std::size_t cols = totals.cols();
    std::vector<double> ranges(rows);
    for (std::size_t p = 0; p < rows; ++p) ranges[p] = cfg.cell_range(static_cast<int>(p));
    std::vector<double> az(cols);
    for (std::size_t j = 0; j < cols; ++j) az[j] = cfg.beam_azimuth(static_cast<int>(j));
    auto point = [&](std::size_t p, std::size_t j) { return surface_point(ranges[p], az[j], totals(p, j)); };

    std::vector<Vec3> adj_points(rows * cols);
    for (std::size_t p = 0; p < rows; ++p) {
        const std::size_t p0 = p == 0 ? 0 : p - 1;
        const std::size_t p1 = p + 1 == rows ? p : p + 1;
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t idx = p * cols + j;
            const signed char s = normals.orientation[idx];
            if (s == 0) continue;  // base-plane fallback carries no gradient
            const Vec3 a = adj_n[idx];
            if (a.x == 0.0 && a.y == 0.0 && a.z == 0.0) continue;

            const Vec3 t_r = rows > 1 ? point(p1, j) - point(p0, j) : Vec3{};
            Vec3 t_az;
            std::size_t j0 = j, j1 = j;
            if (cols > 1) {
                j0 = j == 0 ? 0 : j - 1;
                j1 = j + 1 == cols ? j : j + 1;
                t_az = point(p, j1) - point(p, j0);
            } else {
                const double rc = ranges[p] * std::cos(totals(p, j));
                t_az = {rc * std::sin(az[j]), rc * std::cos(az[j]), 0.0};
            }
            const Vec3 w = cross(t_az, t_r);
            const double len = norm(w);
            const Vec3 n = normals.n[idx];
            const Vec3 adj_w = (static_cast<double>(s) / len) * (a - dot(n, a) * n);
            const Vec3 adj_taz = cross(t_r, adj_w);
            const Vec3 adj_tr = cross(adj_w, t_az);

            if (rows > 1) {
                adj_points[p1 * cols + j] = adj_points[p1 * cols + j] + adj_tr;
                adj_points[p0 * cols + j] = adj_points[p0 * cols + j] - adj_tr;
            }
            if (cols > 1) {
                adj_points[p * cols + j1] = adj_points[p * cols + j1] + adj_taz;
                adj_points[p * cols + j0] = adj_points[p * cols + j0] - adj_taz;
            } else {
                const double h = totals(p, j);
                const Vec3 dtaz = (-ranges[p] * std::sin(h)) * Vec3{std::sin(az[j]), std::cos(az[j]), 0.0};
                adj_totals(p, j) += dot(adj_taz, dtaz);
            }
        }
    }
    for (std::size_t p = 0; p < rows; ++p)
        for (std::size_t j = 0; j < cols; ++j)
            adj_totals(p, j) += dot(adj_points[p * cols + j], surface_point_dphi(ranges[p], az[j], totals(p, j)));
}

} // namespace

double forward_loss(const DiffParams& params, const BasePlane& plane, const SonarImage& target,
                    double lambda_tv, const SonarConfig& cfg) {
    check_target(target, cfg);
    const SonarImage img = render(params.psi, plane, params.gains, with_tvg(cfg, params.tvg_exponent));
    return recon_loss(img, target) + lambda_tv * tv_penalty(params.psi.psi);
}

GradBundle value_and_grad(const DiffParams& params, const BasePlane& plane, const SonarImage& target,
                          double lambda_tv, const SonarConfig& base_cfg, bool differentiate_tvg) {
    check_target(target, base_cfg);
    const SonarConfig cfg = with_tvg(base_cfg, params.tvg_exponent);
    check_render_inputs(params.psi, params.gains, cfg);
    check_plane(plane, cfg);

    const std::size_t n_bins = static_cast<std::size_t>(cfg.n_bins);
    const std::size_t n_az = static_cast<std::size_t>(cfg.n_az);
    const std::size_t rows = static_cast<std::size_t>(cfg.padded_rows());
    const double inv_hw = 1.0 / static_cast<double>(n_bins * n_az);

    const Grid totals = total_heights(params.psi, plane, cfg);
    const NormalField normals = surface_normals(totals, cfg, plane);
    const RayFan fan = build_ray_fan(cfg);
    const auto deps = bin_deposits(cfg);
    std::vector<double> ranges(rows);
    for (std::size_t p = 0; p < rows; ++p) ranges[p] = cfg.cell_range(static_cast<int>(p));
    std::vector<double> factors(n_bins), log_r(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double r = cfg.bin_range(static_cast<int>(k));
        factors[k] = spreading_factor(r, cfg.tvg_exponent);
        log_r[k] = std::log(r);
    }
    const double floor_lin = std::pow(10.0, cfg.db_floor / 10.0);
    const double span = cfg.db_ceiling() - cfg.db_floor;
    const double db_scale = 10.0 / (std::log(10.0) * span);

    // Each image column depends only on its own height column, so the forward
    // render, the residual and the reverse sweep run column by column.
    Grid image(n_bins, n_az);
    Grid adj_totals(rows, n_az);
    std::vector<Vec3> adj_normals(rows * n_az);
    std::vector<double> d_gains(n_az, 0.0), d_tvg_col(n_az, 0.0);
    std::vector<char> finite_col(n_az, 1);
    parallel_for(n_az, [&](std::size_t j) {
        std::vector<double> heights(rows), cells(rows), bins(n_bins), adj_cells(rows, 0.0), adj_h(rows, 0.0);
        std::vector<Vec3> col_normals(rows), adj_n(rows);
        for (std::size_t p = 0; p < rows; ++p) {
            heights[p] = totals(p, j);
            col_normals[p] = normals(p, j);
        }
        const ColumnView col{heights, col_normals, ranges, fan.azimuths[j]};
        // reused across columns and calls; fresh tapes cost page faults
        thread_local ColumnTape tape;
        column_returns(col, fan.elevations, cfg, cells, &tape);
        bin_cells(deps, cells, bins);

        const double gain = params.gains.gains[j];
        std::vector<double> adj_raw(n_bins, 0.0);
        bool any = false;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double lin = (bins[k] * gain) * factors[k];
            if (!std::isfinite(lin)) finite_col[j] = 0;
            const double value = compress_db_value(lin, cfg);
            image(k, j) = value;
            if (!(lin > floor_lin)) continue;
            const double level = (10.0 * std::log10(lin) - cfg.db_floor) / span;
            if (!(level > 0.0 && level < 1.0)) continue;
            const double adj_lin = 2.0 * (value - target.intensity(k, j)) * inv_hw * db_scale / lin;
            adj_raw[k] = adj_lin * gain * factors[k];
            d_gains[j] += adj_lin * bins[k] * factors[k];
            d_tvg_col[j] += adj_lin * lin * log_r[k];
            any = any || adj_lin != 0.0;
        }
        if (!any) return;

        for (std::size_t p = 0; p < rows; ++p) {
            const BinDeposit& d = deps[p];
            double acc = 0.0;
            for (std::size_t m = 0; m < d.weights.size(); ++m) acc += d.weights[m] * adj_raw[d.first_bin + m];
            adj_cells[p] = acc;
        }
        column_tape_adjoint(tape, col, fan.elevations, cfg, adj_cells, adj_h, adj_n);
        for (std::size_t p = 0; p < rows; ++p) {
            adj_totals(p, j) = adj_h[p];
            adj_normals[p * n_az + j] = adj_n[p];
        }
    });
    for (char ok : finite_col)
        if (!ok) throw NonFiniteError("render");

    GradBundle out;
    out.recon = recon_loss(image, target.intensity);
    require_finite(out.recon, "recon_loss");
    out.tv = tv_penalty(params.psi.psi);
    require_finite(out.tv, "tv_penalty");
    out.value = out.recon + lambda_tv * out.tv;
    out.d_gains = std::move(d_gains);
    if (differentiate_tvg) {
        double total = 0.0;
        for (double v : d_tvg_col) total += v;
        out.d_tvg = total;
    }

    normals_adjoint(totals, normals, adj_normals, cfg, adj_totals);

    // totals = clamp(profile + psi)
    const auto profile = plane_elevation_profile(plane, cfg);
    const double lo = cfg.elev_min - kHeightClampMargin;
    const double hi = cfg.elev_max + kHeightClampMargin;
    out.d_psi = Grid(rows, n_az);
    const Grid tv_grad = lambda_tv != 0.0 ? tv_gradient(params.psi.psi) : Grid(rows, n_az);
    for (std::size_t p = 0; p < rows; ++p) {
        for (std::size_t j = 0; j < n_az; ++j) {
            const double total = profile[p] + params.psi.psi(p, j);
            const double through = (total >= lo && total <= hi) ? adj_totals(p, j) : 0.0;
            out.d_psi(p, j) = through + lambda_tv * tv_grad(p, j);
        }
    }

    require_finite(out.d_psi, "gradient");
    for (double g : out.d_gains) require_finite(g, "gradient");
    if (out.d_tvg) require_finite(*out.d_tvg, "gradient");
    return out;
}

double fd_derivative(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

GradBundle fd_gradient(const ScalarObjective& f, const DiffParams& params, double h, const FdSelection& which) {
    GradBundle out;
    DiffParams work = params;
    out.value = f(params);
    out.d_psi = Grid(params.psi.psi.rows(), params.psi.psi.cols());
    out.d_gains.assign(params.gains.gains.size(), 0.0);

    auto central = [&](double& coord) {
        const double saved = coord;
        coord = saved + h;
        const double up = f(work);
        coord = saved - h;
        const double down = f(work);
        coord = saved;
        return (up - down) / (2.0 * h);
    };

    if (which.psi) {
        auto flat = work.psi.psi.values();
        auto grad = out.d_psi.values();
        if (which.psi_indices.empty()) {
            for (std::size_t i = 0; i < flat.size(); ++i) grad[i] = central(flat[i]);
        } else {
            for (std::size_t i : which.psi_indices) grad[i] = central(flat[i]);
        }
    }
    if (which.gains) {
        for (std::size_t j = 0; j < work.gains.gains.size(); ++j) out.d_gains[j] = central(work.gains.gains[j]);
    }
    if (which.tvg) out.d_tvg = central(work.tvg_exponent);
    return out;
}

} // namespace sonarfield
