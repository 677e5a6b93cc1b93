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

#include "sonarfield/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sonarfield {

double rad_to_deg(double rad) {
    double deg = rad * (180.0 / kPi);
    if (deg_to_rad(deg) == rad) return deg;
    // Walk a few ulps either way so the value survives a file round trip.
    double up = deg, down = deg;
    for (int i = 0; i < 8; ++i) {
        up = std::nextafter(up, INFINITY);
        if (deg_to_rad(up) == rad) return up;
        down = std::nextafter(down, -INFINITY);
        if (deg_to_rad(down) == rad) return down;
    }
    return deg;
}

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::ostringstream out;
    out << "invalid sonar config:";
    for (const auto& issue : issues) out << " [" << issue.field << ": " << issue.reason << "]";
    return out.str();
}

} // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(ErrorCode::Invalid, join_issues(issues)), issues_(std::move(issues)) {}

RawSonarConfig to_raw(const SonarConfig& cfg) {
    RawSonarConfig raw;
    raw.r_min = cfg.r_min;
    raw.r_max = cfg.r_max;
    raw.n_bins = cfg.n_bins;
    raw.n_az = cfg.n_az;
    raw.azimuth_spread = cfg.azimuth_spread;
    raw.elev_min = cfg.elev_min;
    raw.elev_max = cfg.elev_max;
    raw.n_el = cfg.n_el;
    raw.alpha = cfg.alpha;
    raw.sigma_bins = cfg.sigma_bins;
    raw.gamma = cfg.gamma;
    raw.sigma_spec = cfg.sigma_spec;
    raw.epsilon = cfg.epsilon;
    raw.tvg_exponent = cfg.tvg_exponent;
    raw.near_pad = cfg.near_pad;
    raw.db_floor = cfg.db_floor;
    return raw;
}

SonarConfig validate_config(const RawSonarConfig& raw) {
    std::vector<ConfigIssue> issues;
    auto fail = [&](const char* field, std::string reason) {
        issues.push_back({field, std::move(reason)});
    };

    SonarConfig cfg;
    auto require = [&](const auto& opt, const char* field, auto& dst) {
        if (opt) {
            dst = *opt;
        } else {
            fail(field, "is required");
        }
    };
    require(raw.r_min, "r_min", cfg.r_min);
    require(raw.r_max, "r_max", cfg.r_max);
    require(raw.n_bins, "n_bins", cfg.n_bins);
    require(raw.n_az, "n_az", cfg.n_az);
    require(raw.azimuth_spread, "azimuth_spread", cfg.azimuth_spread);
    require(raw.elev_min, "elev_min", cfg.elev_min);
    require(raw.elev_max, "elev_max", cfg.elev_max);

    cfg.alpha = raw.alpha.value_or(cfg.alpha);
    cfg.sigma_bins = raw.sigma_bins.value_or(cfg.sigma_bins);
    cfg.gamma = raw.gamma.value_or(cfg.gamma);
    cfg.sigma_spec = raw.sigma_spec.value_or(cfg.sigma_spec);
    cfg.epsilon = raw.epsilon.value_or(cfg.epsilon);
    cfg.tvg_exponent = raw.tvg_exponent.value_or(cfg.tvg_exponent);
    cfg.near_pad = raw.near_pad.value_or(cfg.near_pad);
    cfg.db_floor = raw.db_floor.value_or(cfg.db_floor);
    cfg.n_el = raw.n_el.value_or(6 * cfg.n_bins);

    auto finite = [&](double v, const char* field) {
        if (!std::isfinite(v)) {
            fail(field, "must be finite");
            return false;
        }
        return true;
    };

    if (raw.r_min && finite(cfg.r_min, "r_min") && cfg.r_min <= 0.0) fail("r_min", "must be positive");
    if (raw.r_max && finite(cfg.r_max, "r_max") && raw.r_min && cfg.r_max <= cfg.r_min)
        fail("r_max", "must exceed r_min");
    if (raw.n_bins && cfg.n_bins < 2) fail("n_bins", "must be at least 2");
    if (raw.n_az && cfg.n_az < 1) fail("n_az", "must be at least 1");
    if (cfg.n_el < 1) fail("n_el", "must be at least 1");
    if (raw.azimuth_spread && finite(cfg.azimuth_spread, "azimuth_spread") &&
        (cfg.azimuth_spread < 0.0 || cfg.azimuth_spread >= kPi))
        fail("azimuth_spread", "must lie in [0, pi)");

    const double half_pi = 0.5 * kPi;
    if (raw.elev_min && finite(cfg.elev_min, "elev_min") &&
        !(cfg.elev_min > -half_pi && cfg.elev_min < 0.0))
        fail("elev_min", "must lie in (-pi/2, 0)");
    if (raw.elev_max && finite(cfg.elev_max, "elev_max") &&
        !(cfg.elev_max > -half_pi && cfg.elev_max < 0.0))
        fail("elev_max", "must lie in (-pi/2, 0)");
    if (raw.elev_min && raw.elev_max && cfg.elev_min >= cfg.elev_max)
        fail("elev_max", "must exceed elev_min");

    if (finite(cfg.alpha, "alpha") && cfg.alpha <= 0.0) fail("alpha", "must be positive");
    if (finite(cfg.sigma_bins, "sigma_bins") && cfg.sigma_bins <= 0.0)
        fail("sigma_bins", "must be positive");
    if (finite(cfg.gamma, "gamma") && cfg.gamma < 1.0) fail("gamma", "must be at least 1");
    if (finite(cfg.sigma_spec, "sigma_spec") && cfg.sigma_spec <= 0.0)
        fail("sigma_spec", "must be positive");
    if (finite(cfg.epsilon, "epsilon") && cfg.epsilon <= 0.0) fail("epsilon", "must be positive");
    finite(cfg.tvg_exponent, "tvg_exponent");
    finite(cfg.db_floor, "db_floor");
    if (cfg.near_pad < 0) fail("near_pad", "must be non-negative");

    // Padded rows sit in front of r_min and must stay at positive range.
    if (issues.empty() && cfg.cell_range(0) <= 0.0)
        fail("near_pad", "padded rows would reach the sensor origin");

    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

void check_plane(const BasePlane& plane, const SonarConfig& cfg) {
    auto inside = [&](double v) {
        return std::isfinite(v) && v >= cfg.elev_min && v <= cfg.elev_max;
    };
    if (!inside(plane.phi_near) || !inside(plane.phi_far))
        throw Error(ErrorCode::Invalid, "base plane anchors must lie within the elevation fan");
}

double coverage(const BasePlane& plane, const SonarConfig& cfg) {
    return std::abs(plane.phi_near - plane.phi_far) / cfg.elevation_span();
}

double plane_tilt(const BasePlane& plane, const SonarConfig& cfg) {
    const double rho_near = cfg.r_min * std::cos(plane.phi_near);
    const double z_near = cfg.r_min * std::sin(plane.phi_near);
    const double rho_far = cfg.r_max * std::cos(plane.phi_far);
    const double z_far = cfg.r_max * std::sin(plane.phi_far);
    // Positive when the seafloor descends away from the sensor.
    return std::atan2(z_near - z_far, rho_far - rho_near);
}

double plane_elevation_at(const BasePlane& plane, const SonarConfig& cfg, double r) {
    // The plane seen in a beam's vertical (horizontal distance, z) half-plane
    // is the line through both anchors; intersect it with the circle of radius r.
    const double ax = cfg.r_min * std::cos(plane.phi_near);
    const double az = cfg.r_min * std::sin(plane.phi_near);
    const double dx = cfg.r_max * std::cos(plane.phi_far) - ax;
    const double dz = cfg.r_max * std::sin(plane.phi_far) - az;

    const double a = dx * dx + dz * dz;
    const double b = 2.0 * (ax * dx + az * dz);
    const double c = ax * ax + az * az - r * r;
    const double disc = b * b - 4.0 * a * c;

    double t;
    if (disc <= 0.0) {
        t = -b / (2.0 * a);  // arc misses the line: use the closest point
    } else {
        const double s = std::sqrt(disc);
        const double t_hi = (-b + s) / (2.0 * a);
        const double t_lo = (-b - s) / (2.0 * a);
        // Two crossings: keep the one nearest linear interpolation in range so
        // the anchors map back onto themselves.
        const double t_lin = (r - cfg.r_min) / (cfg.r_max - cfg.r_min);
        t = std::abs(t_hi - t_lin) <= std::abs(t_lo - t_lin) ? t_hi : t_lo;
    }
    const double qx = ax + t * dx;
    const double qz = az + t * dz;
    return std::atan2(qz, qx);
}

std::vector<double> plane_elevation_profile(const BasePlane& plane, const SonarConfig& cfg) {
    std::vector<double> out(static_cast<std::size_t>(cfg.padded_rows()));
    for (int p = 0; p < cfg.padded_rows(); ++p) out[p] = plane_elevation_at(plane, cfg, cfg.cell_range(p));
    return out;
}

HeightField zero_heightfield(const SonarConfig& cfg) {
    return HeightField{Grid(static_cast<std::size_t>(cfg.padded_rows()), static_cast<std::size_t>(cfg.n_az))};
}

BeamGains unit_gains(const SonarConfig& cfg) {
    return BeamGains{std::vector<double>(static_cast<std::size_t>(cfg.n_az), 1.0)};
}

const char* to_string(PlaneMode mode) {
    switch (mode) {
        case PlaneMode::KnownPlane: return "kp";
        case PlaneMode::HighTilt: return "ht";
        case PlaneMode::GenericView: return "gv";
    }
    return "kp";
}

PlaneMode parse_plane_mode(const std::string& text) {
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "kp") return PlaneMode::KnownPlane;
    if (lower == "ht") return PlaneMode::HighTilt;
    if (lower == "gv") return PlaneMode::GenericView;
    throw Error(ErrorCode::Invalid, "unknown plane mode '" + text + "' (expected kp, ht or gv)");
}

void check_settings(const OptimSettings& s) {
    std::vector<ConfigIssue> issues;
    if (s.steps < 0) issues.push_back({"steps", "must be non-negative"});
    if (s.warmup < 0) issues.push_back({"warmup", "must be non-negative"});
    if (!(s.gv_min_coverage > 0.0 && s.gv_min_coverage <= s.gv_max_coverage && s.gv_max_coverage <= 1.0))
        issues.push_back({"gv_min_coverage", "need 0 < gv_min_coverage <= gv_max_coverage <= 1"});
    if (!(s.ht_coverage > 0.0 && s.ht_coverage <= 1.0))
        issues.push_back({"ht_coverage", "must lie in (0, 1]"});
    if (!(s.lr_geometry >= 0.0 && s.lr_gains >= 0.0 && s.lr_tvg >= 0.0))
        issues.push_back({"lr", "learning rates must be non-negative"});
    if (!(s.lambda_tv >= 0.0)) issues.push_back({"lambda_tv", "must be non-negative"});
    if (!(s.weight_decay >= 0.0)) issues.push_back({"weight_decay", "must be non-negative"});
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

} // namespace sonarfield
