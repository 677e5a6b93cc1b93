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

#include "sonarfield/render.hpp"

#include "sonarfield/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sonarfield {

RayFan build_ray_fan(const SonarConfig& cfg) {
    RayFan fan;
    fan.elevations.resize(static_cast<std::size_t>(cfg.n_el));
    const double step = cfg.elevation_span() / cfg.n_el;
    for (int k = 0; k < cfg.n_el; ++k) fan.elevations[k] = cfg.elev_min + (k + 0.5) * step;
    fan.azimuths.resize(static_cast<std::size_t>(cfg.n_az));
    for (int j = 0; j < cfg.n_az; ++j) fan.azimuths[j] = cfg.beam_azimuth(j);
    return fan;
}

std::vector<double> collision_density(std::span<const double> total_heights, double ray_elev,
                                      double alpha) {
    std::vector<double> out(total_heights.size());
    for (std::size_t i = 0; i < total_heights.size(); ++i)
        out[i] = soft_collision(alpha * (total_heights[i] - ray_elev)).sigma;
    return out;
}

std::vector<double> transmittance(std::span<const double> sigma) {
    std::vector<double> out(sigma.size());
    double t = 1.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        out[i] = t;
        t *= 1.0 - sigma[i];
    }
    return out;
}

Vec3 surface_point(double r, double azimuth, double elevation) {
    const double ce = std::cos(elevation);
    return {-r * ce * std::cos(azimuth), r * ce * std::sin(azimuth), r * std::sin(elevation)};
}

Vec3 direction_to_sensor(double azimuth, double elevation) {
    const double ce = std::cos(elevation);
    return {ce * std::cos(azimuth), -ce * std::sin(azimuth), -std::sin(elevation)};
}

Vec3 surface_point_dphi(double r, double azimuth, double elevation) {
    const double se = std::sin(elevation);
    return {r * se * std::cos(azimuth), -r * se * std::sin(azimuth), r * std::cos(elevation)};
}

namespace {

Vec3 plane_normal(const BasePlane& plane, const SonarConfig& cfg, double azimuth) {
    const double dx = cfg.r_max * std::cos(plane.phi_far) - cfg.r_min * std::cos(plane.phi_near);
    const double dz = cfg.r_max * std::sin(plane.phi_far) - cfg.r_min * std::sin(plane.phi_near);
    const Vec3 radial{-std::cos(azimuth), std::sin(azimuth), 0.0};
    Vec3 n = (-dz) * radial + Vec3{0.0, 0.0, dx};
    const double len = norm(n);
    if (!(len > 0.0)) return {0.0, 0.0, 1.0};
    n = (1.0 / len) * n;
    return n.z < 0.0 ? (-1.0) * n : n;
}

} // namespace

NormalField surface_normals(const Grid& totals, const SonarConfig& cfg, const BasePlane& plane) {
    const std::size_t rows = totals.rows();
    const std::size_t cols = totals.cols();
    NormalField field;
    field.rows = rows;
    field.cols = cols;
    field.n.resize(rows * cols);
    field.orientation.assign(rows * cols, 0);

    std::vector<double> ranges(rows);
    for (std::size_t p = 0; p < rows; ++p) ranges[p] = cfg.cell_range(static_cast<int>(p));
    std::vector<double> az(cols);
    for (std::size_t j = 0; j < cols; ++j) az[j] = cfg.beam_azimuth(static_cast<int>(j));

    auto point = [&](std::size_t p, std::size_t j) { return surface_point(ranges[p], az[j], totals(p, j)); };

    for (std::size_t p = 0; p < rows; ++p) {
        const std::size_t p0 = p == 0 ? 0 : p - 1;
        const std::size_t p1 = p + 1 == rows ? p : p + 1;
        for (std::size_t j = 0; j < cols; ++j) {
            const Vec3 t_r = rows > 1 ? point(p1, j) - point(p0, j) : Vec3{};
            Vec3 t_az;
            if (cols > 1) {
                const std::size_t j0 = j == 0 ? 0 : j - 1;
                const std::size_t j1 = j + 1 == cols ? j : j + 1;
                t_az = point(p, j1) - point(p, j0);
            } else {
                const double h = totals(p, j);
                const double rc = ranges[p] * std::cos(h);
                t_az = {rc * std::sin(az[j]), rc * std::cos(az[j]), 0.0};
            }
            const Vec3 w = cross(t_az, t_r);
            const double len = norm(w);
            const std::size_t idx = p * cols + j;
            if (!(len > 1e-300) || !std::isfinite(len)) {
                field.n[idx] = plane_normal(plane, cfg, az[j]);
                field.orientation[idx] = 0;
                continue;
            }
            const signed char s = w.z < 0.0 ? -1 : 1;
            field.n[idx] = (s / len) * w;
            field.orientation[idx] = s;
        }
    }
    return field;
}

ShadeTerms shade_terms(Vec3 n, Vec3 omega, double r, const SonarConfig& cfg) {
    const double d = dot(n, omega);
    const Vec3 refl = (2.0 * d) * n - omega;
    ShadeTerms terms;
    terms.mu = std::max(0.0, d);
    terms.refl_dot = dot(refl, omega);
    terms.jacobian = r * r / std::max(terms.mu, cfg.epsilon);
    return terms;
}

double reflectivity(Vec3 n, Vec3 omega, double r, const SonarConfig& cfg) {
    const ShadeTerms t = shade_terms(n, omega, r, cfg);
    const double s2 = cfg.sigma_spec * cfg.sigma_spec;
    const double diffuse = std::pow(t.mu, cfg.gamma);
    const double specular = std::exp(-(1.0 - t.refl_dot) / s2);
    return (diffuse + specular) * t.jacobian;
}

namespace {

// Below this the specular lobe is lost against any nonzero diffuse term.
constexpr double kSpecularCutoff = -40.0;

inline double reflect(double d, double r, const SonarConfig& cfg, double* dfdd) {
    const double mu = d > 0.0 ? d : 0.0;
    const double s2 = cfg.sigma_spec * cfg.sigma_spec;
    // 1 - refl.omega = 2 (1 - d^2) for unit n and omega.
    const double arg = -2.0 * (1.0 - d * d) / s2;
    const double specular = (arg > kSpecularCutoff || mu == 0.0) ? std::exp(arg) : 0.0;
    const bool lambert = cfg.gamma == 1.0;
    const double diffuse = lambert ? mu : std::pow(mu, cfg.gamma);
    const double denom = mu > cfg.epsilon ? mu : cfg.epsilon;
    const double jac = r * r / denom;
    const double f = (diffuse + specular) * jac;
    if (dfdd) {
        double ddiffuse = 0.0;
        if (mu > 0.0) ddiffuse = lambert ? 1.0 : cfg.gamma * std::pow(mu, cfg.gamma - 1.0);
        const double dspecular = specular * 4.0 * d / s2;
        const double djac = mu > cfg.epsilon ? -jac / mu : 0.0;
        *dfdd = (ddiffuse + dspecular) * jac + (diffuse + specular) * djac;
    }
    return f;
}

} // namespace

double reflectivity_from_cosine(double d, double r, const SonarConfig& cfg, double* dfdd) {
    return reflect(d, r, cfg, dfdd);
}

double fractional_bin(double r, const SonarConfig& cfg) {
    return (r - cfg.r_min) / cfg.bin_width() - 0.5;
}

BinDeposit bin_deposit(double r, const SonarConfig& cfg) {
    const double u = fractional_bin(r, cfg);
    const double reach = 4.0 * cfg.sigma_bins;
    int lo = static_cast<int>(std::ceil(u - reach));
    int hi = static_cast<int>(std::floor(u + reach));
    if (hi < lo) lo = hi = static_cast<int>(std::lround(u));  // kernel narrower than the gap to any bin
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(std::max(0, hi - lo + 1)));
    double total = 0.0;
    for (int k = lo; k <= hi; ++k) {
        const double z = (u - k) / cfg.sigma_bins;
        const double v = std::exp(-0.5 * z * z);
        w.push_back(v);
        total += v;
    }
    BinDeposit dep;
    const int first = std::max(lo, 0);
    const int last = std::min(hi, cfg.n_bins - 1);
    dep.first_bin = first;
    for (int k = first; k <= last; ++k) dep.weights.push_back(w[k - lo] / total);
    return dep;
}

std::vector<BinDeposit> bin_deposits(const SonarConfig& cfg) {
    std::vector<BinDeposit> deps(static_cast<std::size_t>(cfg.padded_rows()));
    for (int p = 0; p < cfg.padded_rows(); ++p) deps[p] = bin_deposit(cfg.cell_range(p), cfg);
    return deps;
}

void bin_cells(const std::vector<BinDeposit>& deps, std::span<const double> cells, std::span<double> bins) {
    std::fill(bins.begin(), bins.end(), 0.0);
    for (std::size_t p = 0; p < deps.size(); ++p) {
        const BinDeposit& d = deps[p];
        for (std::size_t m = 0; m < d.weights.size(); ++m) bins[d.first_bin + m] += d.weights[m] * cells[p];
    }
}

void column_returns(const ColumnView& col, std::span<const double> rays, const SonarConfig& cfg,
                    std::span<double> out, ColumnTape* tape) {
    const std::size_t n_cells = col.heights.size();
    std::fill(out.begin(), out.end(), 0.0);
    const double alpha = cfg.alpha;
    const double ca = std::cos(col.azimuth);
    const double sa = std::sin(col.azimuth);
    if (tape) {
        tape->clear();
        tape->ray_end.reserve(rays.size());
    }

    std::size_t first = 0;
    for (const double phi : rays) {
        // Cells whose logit is below the clamp contribute exactly nothing; the
        // fan is ascending, so that prefix only grows.
        while (first < n_cells && alpha * (col.heights[first] - phi) < -kLogitClamp) ++first;
        const double ce = std::cos(phi);
        const Vec3 omega{ce * ca, -ce * sa, -std::sin(phi)};

        double t = 1.0;
        for (std::size_t p = first; p < n_cells; ++p) {
            const Collision c = soft_collision(alpha * (col.heights[p] - phi));
            if (c.sigma == 0.0) continue;
            double dfdd = 0.0;
            const double f = reflect(dot(col.normals[p], omega), col.ranges[p], cfg, tape ? &dfdd : nullptr);
            out[p] += c.sigma * t * f;
            if (tape) tape->visits.push_back({static_cast<std::uint32_t>(p), c.saturated, c.sigma, c.miss, t, f, dfdd});
            t *= c.miss;
            if (t < kTransmittanceFloor) break;
        }
        if (tape) tape->ray_end.push_back(tape->visits.size());
    }
    const double inv = 1.0 / static_cast<double>(rays.size());
    for (double& v : out) v *= inv;
}

void column_tape_adjoint(const ColumnTape& tape, const ColumnView& col, std::span<const double> rays,
                         const SonarConfig& cfg, std::span<const double> adj_out, std::span<double> adj_heights,
                         std::span<Vec3> adj_normals) {
    const double inv = 1.0 / static_cast<double>(rays.size());
    const double ca = std::cos(col.azimuth);
    const double sa = std::sin(col.azimuth);
    const double alpha = cfg.alpha;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < rays.size(); ++k) {
        const std::size_t end = tape.ray_end[k];
        if (end == begin) continue;
        const double phi = rays[k];
        const double ce = std::cos(phi);
        const Vec3 omega{ce * ca, -ce * sa, -std::sin(phi)};

        // tail = sum over later visits of g * sigma * f * (transmittance from the next cell on)
        double tail = 0.0;
        for (std::size_t v = end; v-- > begin;) {
            const ColumnTape::Visit& it = tape.visits[v];
            const double g = adj_out[it.cell] * inv;
            if (!it.saturated) {
                const double adj_sigma = it.t * (g * it.f - tail);
                adj_heights[it.cell] += adj_sigma * (it.sigma * it.miss) * alpha;
            }
            const double adj_d = g * it.sigma * it.t * it.dfdd;
            adj_normals[it.cell] = adj_normals[it.cell] + adj_d * omega;
            tail = g * it.sigma * it.f + it.miss * tail;
        }
        begin = end;
    }
}

void column_returns_adjoint(const ColumnView& col, std::span<const double> rays, const SonarConfig& cfg,
                            std::span<const double> adj_out, std::span<double> adj_heights,
                            std::span<Vec3> adj_normals) {
    ColumnTape tape;
    std::vector<double> scratch(col.heights.size());
    column_returns(col, rays, cfg, scratch, &tape);
    column_tape_adjoint(tape, col, rays, cfg, adj_out, adj_heights, adj_normals);
}

std::vector<double> accumulate_beam(const ColumnView& col, std::span<const double> rays, const SonarConfig& cfg) {
    std::vector<double> cells(col.heights.size());
    column_returns(col, rays, cfg, cells);
    std::vector<double> bins(static_cast<std::size_t>(cfg.n_bins));
    const auto deps = bin_deposits(cfg);
    bin_cells(deps, cells, bins);
    return bins;
}

Grid apply_beam_gains(const Grid& raw, const BeamGains& gains) {
    Grid out = raw;
    for (std::size_t k = 0; k < raw.rows(); ++k)
        for (std::size_t j = 0; j < raw.cols(); ++j) out(k, j) = raw(k, j) * gains.gains[j];
    return out;
}

double spreading_factor(double r, double tvg_exponent) {
    // 1/r^4 two-way spreading times r^g time-varying gain.
    return std::pow(r, tvg_exponent - 4.0);
}

Grid apply_spreading_and_gain(const Grid& raw, const SonarConfig& cfg) {
    Grid out = raw;
    for (std::size_t k = 0; k < raw.rows(); ++k) {
        const double factor = spreading_factor(cfg.bin_range(static_cast<int>(k)), cfg.tvg_exponent);
        for (std::size_t j = 0; j < raw.cols(); ++j) out(k, j) = raw(k, j) * factor;
    }
    return out;
}

SonarImage compress_db(const Grid& linear, const SonarConfig& cfg) {
    SonarImage img{Grid(linear.rows(), linear.cols()), cfg};
    auto in = linear.values();
    auto out = img.intensity.values();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = compress_db_value(in[i], cfg);
    return img;
}

double compress_db_value(double linear, const SonarConfig& cfg) {
    const double floor_lin = std::pow(10.0, cfg.db_floor / 10.0);
    const double span = cfg.db_ceiling() - cfg.db_floor;
    const double db = 10.0 * std::log10(std::max(linear, floor_lin));
    return std::clamp((db - cfg.db_floor) / span, 0.0, 1.0);
}

Grid total_heights(const HeightField& hf, const BasePlane& plane, const SonarConfig& cfg) {
    const auto profile = plane_elevation_profile(plane, cfg);
    const double lo = cfg.elev_min - kHeightClampMargin;
    const double hi = cfg.elev_max + kHeightClampMargin;
    Grid out(hf.psi.rows(), hf.psi.cols());
    for (std::size_t p = 0; p < out.rows(); ++p)
        for (std::size_t j = 0; j < out.cols(); ++j) out(p, j) = std::clamp(profile[p] + hf.psi(p, j), lo, hi);
    return out;
}

void check_render_inputs(const HeightField& hf, const BeamGains& gains, const SonarConfig& cfg) {
    if (hf.psi.rows() != static_cast<std::size_t>(cfg.padded_rows()) ||
        hf.psi.cols() != static_cast<std::size_t>(cfg.n_az))
        throw DimensionError("height field is " + std::to_string(hf.psi.rows()) + "x" +
                             std::to_string(hf.psi.cols()) + ", config expects " +
                             std::to_string(cfg.padded_rows()) + "x" + std::to_string(cfg.n_az));
    if (gains.gains.size() != static_cast<std::size_t>(cfg.n_az))
        throw DimensionError("beam gains have " + std::to_string(gains.gains.size()) +
                             " entries, config expects " + std::to_string(cfg.n_az));
    if (!hf.psi.all_finite()) throw Error(ErrorCode::Invalid, "height field contains non-finite values");
    for (double g : gains.gains)
        if (!(g > 0.0) || !std::isfinite(g)) throw Error(ErrorCode::Invalid, "beam gains must be positive");
}

ForwardPass render_forward(const HeightField& hf, const BasePlane& plane, const BeamGains& gains,
                           const SonarConfig& cfg) {
    check_render_inputs(hf, gains, cfg);
    check_plane(plane, cfg);

    ForwardPass fp;
    fp.totals = total_heights(hf, plane, cfg);
    fp.normals = surface_normals(fp.totals, cfg, plane);

    const std::size_t rows = fp.totals.rows();
    const std::size_t cols = fp.totals.cols();
    const RayFan fan = build_ray_fan(cfg);
    std::vector<double> ranges(rows);
    for (std::size_t p = 0; p < rows; ++p) ranges[p] = cfg.cell_range(static_cast<int>(p));
    const auto deps = bin_deposits(cfg);

    fp.cell_returns = Grid(rows, cols);
    fp.raw = Grid(static_cast<std::size_t>(cfg.n_bins), cols);
    parallel_for(cols, [&](std::size_t j) {
        std::vector<double> heights(rows), cells(rows), bins(static_cast<std::size_t>(cfg.n_bins));
        std::vector<Vec3> normals(rows);
        for (std::size_t p = 0; p < rows; ++p) {
            heights[p] = fp.totals(p, j);
            normals[p] = fp.normals(p, j);
        }
        const ColumnView col{heights, normals, ranges, fan.azimuths[j]};
        column_returns(col, fan.elevations, cfg, cells);
        bin_cells(deps, cells, bins);
        for (std::size_t p = 0; p < rows; ++p) fp.cell_returns(p, j) = cells[p];
        for (std::size_t k = 0; k < bins.size(); ++k) fp.raw(k, j) = bins[k];
    });

    fp.linear = apply_spreading_and_gain(apply_beam_gains(fp.raw, gains), cfg);
    fp.image = compress_db(fp.linear, cfg);
    return fp;
}

SonarImage render(const HeightField& hf, const BasePlane& plane, const BeamGains& gains, const SonarConfig& cfg) {
    return render_forward(hf, plane, gains, cfg).image;
}

} // namespace sonarfield
