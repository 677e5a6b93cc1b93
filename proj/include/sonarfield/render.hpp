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

// Forward sonar model over a polar height field.
//
// Each azimuth beam is a fan of n_el rays. A ray collides softly with every
// cell of its column (sigmoid of the angular-height logit), survives with the
// running transmittance, and returns diffuse + specular backscatter scaled by
// the range/foreshortening factor. Per-cell returns are averaged over the fan,
// spread into range bins with a truncated Gaussian, attenuated by 1/r^4 and
// time-varying gain, then compressed to normalized dB.

#pragma once

#include "sonarfield/config.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace sonarfield {

struct RayFan {
    std::vector<double> elevations;  // ascending, midpoint-uniform over the fan
    std::vector<double> azimuths;    // ascending, centered on -X
};

RayFan build_ray_fan(const SonarConfig& cfg);

// Logits beyond +-40 saturate to exactly 0 or 1 collision probability.
// sigmoid(40) already rounds to 1.0 in double precision.
inline constexpr double kLogitClamp = 40.0;
// A ray stops once its transmittance falls below this; anything behind it
// is far under double precision relative to what the ray already returned.
inline constexpr double kTransmittanceFloor = 1e-20;

struct Collision {
    double sigma = 0.0;      // collision probability
    double miss = 1.0;       // 1 - sigma, evaluated without cancellation
    bool saturated = false;  // outside the clamp; zero derivative
};

inline Collision soft_collision(double logit) {
    if (logit < -kLogitClamp) return {0.0, 1.0, true};
    if (logit > kLogitClamp) return {1.0, 0.0, true};
    const double e = std::exp(-logit);
    const double sigma = 1.0 / (1.0 + e);
    return {sigma, e * sigma, false};
}

std::vector<double> collision_density(std::span<const double> total_heights, double ray_elev,
                                      double alpha);
std::vector<double> transmittance(std::span<const double> sigma);

Vec3 surface_point(double r, double azimuth, double elevation);
Vec3 surface_point_dphi(double r, double azimuth, double elevation);
// Unit direction from a surface point at (azimuth, elevation) back to the sensor.
Vec3 direction_to_sensor(double azimuth, double elevation);

/// Per-cell unit normals of a [rows] x [cols] grid, stored row-major.
struct NormalField {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Vec3> n;
    std::vector<signed char> orientation;  // +1/-1 applied to the raw cross product, 0 = fallback

    Vec3 operator()(std::size_t r, std::size_t c) const { return n[r * cols + c]; }
};

// Central differences of the embedded surface along range and azimuth
// (one-sided at the edges), oriented into the +Z hemisphere. Degenerate cells
// fall back to the base-plane normal.
NormalField surface_normals(const Grid& total_heights, const SonarConfig& cfg, const BasePlane& plane);

struct ShadeTerms {
    double mu = 0.0;
    double refl_dot = 0.0;
    double jacobian = 0.0;
};

ShadeTerms shade_terms(Vec3 n, Vec3 omega, double r, const SonarConfig& cfg);
double reflectivity(Vec3 n, Vec3 omega, double r, const SonarConfig& cfg);

// Reflectivity as a function of d = n . omega; optionally returns df/dd.
double reflectivity_from_cosine(double d, double r, const SonarConfig& cfg, double* dfdd = nullptr);

/// Gaussian deposit of one cell into the visible range bins. Weights are
/// normalized over the whole truncated support, then clipped to the image.
struct BinDeposit {
    int first_bin = 0;
    std::vector<double> weights;
};

double fractional_bin(double r, const SonarConfig& cfg);
BinDeposit bin_deposit(double r, const SonarConfig& cfg);
// One deposit per padded row, in row order.
std::vector<BinDeposit> bin_deposits(const SonarConfig& cfg);

/// One azimuth column of the padded grid.
struct ColumnView {
    std::span<const double> heights;  // total angular heights, padded rows
    std::span<const Vec3> normals;
    std::span<const double> ranges;
    double azimuth = 0.0;
};

/// Per-ray record of every cell a column's rays touched, kept for the reverse pass.
struct ColumnTape {
    struct Visit {
        std::uint32_t cell;
        bool saturated;
        double sigma, miss, t, f, dfdd;
    };
    std::vector<Visit> visits;
    std::vector<std::size_t> ray_end;  // one past each ray's last visit

    void clear() {
        visits.clear();
        ray_end.clear();
    }
};

// Fan-averaged return of each padded cell: (1/n_el) sum_e sigma T f.
// With a tape, also records what the reverse pass needs.
void column_returns(const ColumnView& col, std::span<const double> ray_elevations,
                    const SonarConfig& cfg, std::span<double> out, ColumnTape* tape = nullptr);

// Reverse pass of column_returns. Accumulates into adj_heights / adj_normals.
void column_returns_adjoint(const ColumnView& col, std::span<const double> ray_elevations,
                            const SonarConfig& cfg, std::span<const double> adj_out,
                            std::span<double> adj_heights, std::span<Vec3> adj_normals);
void column_tape_adjoint(const ColumnTape& tape, const ColumnView& col, std::span<const double> ray_elevations,
                         const SonarConfig& cfg, std::span<const double> adj_out, std::span<double> adj_heights,
                         std::span<Vec3> adj_normals);

// bins[k] = sum_p deps[p].weights[k - first] * cells[p], accumulated in row order.
void bin_cells(const std::vector<BinDeposit>& deps, std::span<const double> cells, std::span<double> bins);

// Per-bin raw contributions of one column (column_returns, then binning).
std::vector<double> accumulate_beam(const ColumnView& col, std::span<const double> ray_elevations,
                                    const SonarConfig& cfg);

Grid apply_beam_gains(const Grid& raw, const BeamGains& gains);
Grid apply_spreading_and_gain(const Grid& raw, const SonarConfig& cfg);
double spreading_factor(double r, double tvg_exponent);
SonarImage compress_db(const Grid& linear, const SonarConfig& cfg);
double compress_db_value(double linear, const SonarConfig& cfg);

// phi_plane + psi, clamped to the fan plus kHeightClampMargin.
Grid total_heights(const HeightField& hf, const BasePlane& plane, const SonarConfig& cfg);

/// Every intermediate of one render.
struct ForwardPass {
    Grid totals;        // padded x n_az
    NormalField normals;
    Grid cell_returns;  // padded x n_az
    Grid raw;           // n_bins x n_az, before gains
    Grid linear;        // after gains and spreading/TVG
    SonarImage image;
};

void check_render_inputs(const HeightField& hf, const BeamGains& gains, const SonarConfig& cfg);
ForwardPass render_forward(const HeightField& hf, const BasePlane& plane, const BeamGains& gains,
                           const SonarConfig& cfg);
SonarImage render(const HeightField& hf, const BasePlane& plane, const BeamGains& gains,
                  const SonarConfig& cfg);

} // namespace sonarfield
