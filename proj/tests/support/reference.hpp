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

// Slow, direct evaluations of the forward model used as test oracles. Every
// sum is taken in long double with no early exits, no saturation and no
// precomputed tables, so agreement with the library checks the shortcuts.

#pragma once

#include "sonarfield/config.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sftest::ref {

using sonarfield::BasePlane;
using sonarfield::BeamGains;
using sonarfield::Grid;
using sonarfield::HeightField;
using sonarfield::SonarConfig;

using real = long double;

struct V3 {
    real x = 0, y = 0, z = 0;
};
inline V3 sub(V3 a, V3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline real dot(V3 a, V3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline V3 cross(V3 a, V3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
inline V3 scale(real s, V3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline V3 unit(V3 a) { return scale(1 / std::sqrt(dot(a, a)), a); }

inline real sigmoid(real x) { return 1 / (1 + std::exp(-x)); }

inline V3 embed(real r, real az, real el) {
    return {-r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az), r * std::sin(el)};
}

// Unit vector from the surface point back to the sensor.
inline V3 toward_sensor(real az, real el) { return scale(-1, unit(embed(1, az, el))); }

inline real reflectivity(V3 n, V3 w, real r, const SonarConfig& cfg) {
    const real d = dot(n, w);
    const real mu = std::max<real>(0, d);
    const V3 refl = sub(scale(2 * d, n), w);
    const real s = cfg.sigma_spec;
    const real spec = std::exp(-(1 - dot(refl, w)) / (s * s));
    const real diffuse = std::pow(mu, static_cast<real>(cfg.gamma));
    const real jac = r * r / std::max<real>(mu, cfg.epsilon);
    return (diffuse + spec) * jac;
}

// Gaussian weight of range r into every visible bin; zero outside 4 sigma.
// Normalized over the truncated support including bins off the image.
inline std::vector<real> bin_weights(real r, const SonarConfig& cfg) {
    const real width = (static_cast<real>(cfg.r_max) - cfg.r_min) / cfg.n_bins;
    const real u = (r - cfg.r_min) / width - 0.5L;
    const real reach = 4 * static_cast<real>(cfg.sigma_bins);
    real total = 0;
    const int lo = static_cast<int>(std::floor(u - reach)) - 1;
    const int hi = static_cast<int>(std::ceil(u + reach)) + 1;
    std::vector<real> w(static_cast<std::size_t>(cfg.n_bins), 0);
    for (int k = lo; k <= hi; ++k) {
        if (std::abs(u - k) > reach) continue;
        const real z = (u - k) / static_cast<real>(cfg.sigma_bins);
        const real v = std::exp(-z * z / 2);
        total += v;
        if (k >= 0 && k < cfg.n_bins) w[static_cast<std::size_t>(k)] = v;
    }
    for (real& v : w) v /= total;
    return w;
}

// Per-bin raw return of one column: every (ray, cell, bin) triple, with the
// transmittance recomputed as a full product for each cell.
inline std::vector<real> column_bins(const std::vector<real>& heights, const std::vector<V3>& normals,
                                     const std::vector<real>& ranges, real azimuth,
                                     const std::vector<real>& rays, const SonarConfig& cfg) {
    const std::size_t n = heights.size();
    std::vector<real> out(static_cast<std::size_t>(cfg.n_bins), 0);
    for (real phi : rays) {
        const V3 w = toward_sensor(azimuth, phi);
        for (std::size_t i = 0; i < n; ++i) {
            real t = 1;
            for (std::size_t m = 0; m < i; ++m) t *= 1 - sigmoid(cfg.alpha * (heights[m] - phi));
            const real sigma = sigmoid(cfg.alpha * (heights[i] - phi));
            const real c = sigma * t * reflectivity(normals[i], w, ranges[i], cfg);
            const auto wk = bin_weights(ranges[i], cfg);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * wk[k];
        }
    }
    for (real& v : out) v /= static_cast<real>(rays.size());
    return out;
}

inline std::vector<real> fan(const SonarConfig& cfg) {
    std::vector<real> rays(static_cast<std::size_t>(cfg.n_el));
    const real step = (static_cast<real>(cfg.elev_max) - cfg.elev_min) / cfg.n_el;
    for (int k = 0; k < cfg.n_el; ++k) rays[static_cast<std::size_t>(k)] = cfg.elev_min + (k + 0.5L) * step;
    return rays;
}

inline real cell_range(const SonarConfig& cfg, int p) {
    const real width = (static_cast<real>(cfg.r_max) - cfg.r_min) / cfg.n_bins;
    return cfg.r_min + (p - cfg.near_pad + 0.5L) * width;
}

inline real beam_azimuth(const SonarConfig& cfg, int j) {
    return -static_cast<real>(cfg.azimuth_spread) / 2 + (j + 0.5L) * cfg.azimuth_spread / cfg.n_az;
}

// Elevation where the anchor line meets the arc of radius r: scan the line
// densely for sign changes of |q|^2 - r^2, bisect each, keep the crossing
// whose parameter is closest to the linear-in-range guess.
inline real plane_elevation(const BasePlane& plane, const SonarConfig& cfg, real r) {
    const real ax = cfg.r_min * std::cos(static_cast<real>(plane.phi_near));
    const real az = cfg.r_min * std::sin(static_cast<real>(plane.phi_near));
    const real bx = cfg.r_max * std::cos(static_cast<real>(plane.phi_far));
    const real bz = cfg.r_max * std::sin(static_cast<real>(plane.phi_far));
    auto g = [&](real t) {
        const real x = ax + t * (bx - ax), z = az + t * (bz - az);
        return x * x + z * z - r * r;
    };
    const real guess = (r - cfg.r_min) / (static_cast<real>(cfg.r_max) - cfg.r_min);
    real best = guess, best_gap = -1;
    const int steps = 20000;
    const real t0 = -2, t1 = 3;
    for (int s = 0; s < steps; ++s) {
        real lo = t0 + (t1 - t0) * s / steps, hi = t0 + (t1 - t0) * (s + 1) / steps;
        if ((g(lo) < 0) == (g(hi) < 0)) continue;
        for (int it = 0; it < 200; ++it) {
            const real mid = (lo + hi) / 2;
            ((g(lo) < 0) == (g(mid) < 0) ? lo : hi) = mid;
        }
        const real t = (lo + hi) / 2;
        if (best_gap < 0 || std::abs(t - guess) < best_gap) {
            best = t;
            best_gap = std::abs(t - guess);
        }
    }
    const real x = ax + best * (bx - ax), z = az + best * (bz - az);
    return std::atan2(z, x);
}

// Central differences of the embedded surface (one-sided at the edges),
// oriented upward. Needs at least two beams.
inline std::vector<V3> normals(const std::vector<real>& totals, int rows, int cols, const SonarConfig& cfg) {
    auto at = [&](int p, int j) {
        return embed(cell_range(cfg, p), beam_azimuth(cfg, j), totals[static_cast<std::size_t>(p * cols + j)]);
    };
    std::vector<V3> out(totals.size());
    for (int p = 0; p < rows; ++p) {
        for (int j = 0; j < cols; ++j) {
            const V3 tr = sub(at(std::min(p + 1, rows - 1), j), at(std::max(p - 1, 0), j));
            const V3 ta = sub(at(p, std::min(j + 1, cols - 1)), at(p, std::max(j - 1, 0)));
            V3 n = unit(cross(ta, tr));
            if (n.z < 0) n = scale(-1, n);
            out[static_cast<std::size_t>(p * cols + j)] = n;
        }
    }
    return out;
}

// Linear intensities (after gains and spreading), n_bins x n_az.
inline std::vector<real> linear_image(const HeightField& hf, const BasePlane& plane, const BeamGains& gains,
                                      const SonarConfig& cfg) {
    const int rows = cfg.padded_rows(), cols = cfg.n_az;
    std::vector<real> totals(static_cast<std::size_t>(rows * cols));
    const real lo = cfg.elev_min - 0.2L, hi = cfg.elev_max + 0.2L;
    for (int p = 0; p < rows; ++p) {
        const real base = plane_elevation(plane, cfg, cell_range(cfg, p));
        for (int j = 0; j < cols; ++j)
            totals[static_cast<std::size_t>(p * cols + j)] =
                std::clamp(base + hf.psi(static_cast<std::size_t>(p), static_cast<std::size_t>(j)), lo, hi);
    }
    const auto n = normals(totals, rows, cols, cfg);
    const auto rays = fan(cfg);
    std::vector<real> ranges(static_cast<std::size_t>(rows));
    for (int p = 0; p < rows; ++p) ranges[static_cast<std::size_t>(p)] = cell_range(cfg, p);

    std::vector<real> out(static_cast<std::size_t>(cfg.n_bins * cols));
    for (int j = 0; j < cols; ++j) {
        std::vector<real> h(static_cast<std::size_t>(rows));
        std::vector<V3> nj(static_cast<std::size_t>(rows));
        for (int p = 0; p < rows; ++p) {
            h[static_cast<std::size_t>(p)] = totals[static_cast<std::size_t>(p * cols + j)];
            nj[static_cast<std::size_t>(p)] = n[static_cast<std::size_t>(p * cols + j)];
        }
        const auto bins = column_bins(h, nj, ranges, beam_azimuth(cfg, j), rays, cfg);
        for (int k = 0; k < cfg.n_bins; ++k) {
            const real r = cfg.r_min + (k + 0.5L) * (static_cast<real>(cfg.r_max) - cfg.r_min) / cfg.n_bins;
            out[static_cast<std::size_t>(k * cols + j)] = bins[static_cast<std::size_t>(k)] *
                                                           gains.gains[static_cast<std::size_t>(j)] *
                                                           std::pow(r, static_cast<real>(cfg.tvg_exponent) - 4);
        }
    }
    return out;
}

inline real to_db_unit(real linear, const SonarConfig& cfg) {
    const real floor_lin = std::pow(10.0L, static_cast<real>(cfg.db_floor) / 10);
    const real db = 10 * std::log10(std::max(linear, floor_lin));
    return std::clamp<real>((db - cfg.db_floor) / 100, 0, 1);
}

} // namespace sftest::ref
