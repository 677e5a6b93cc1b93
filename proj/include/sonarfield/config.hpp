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

// Domain types shared by every module.
//
// Frame: sensor at the origin looking down -X, +Y right, +Z up. A point at
// slant range r, azimuth theta and elevation phi sits at
//   r * (-cos(phi) cos(theta), cos(phi) sin(theta), sin(phi)).
// All angles are radians in memory; degrees only appear in files and flags.

#pragma once

#include "sonarfield/error.hpp"
#include "sonarfield/grid.hpp"

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace sonarfield {

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
// Returns a degree value that converts back to exactly `rad`.
double rad_to_deg(double rad);

/// Sensor and renderer parameterization. Build through validate_config().
struct SonarConfig {
    double r_min = 0.0;
    double r_max = 0.0;
    int n_bins = 0;
    int n_az = 0;
    double azimuth_spread = 0.0;
    double elev_min = 0.0;
    double elev_max = 0.0;
    int n_el = 0;
    double alpha = 3000.0;
    double sigma_bins = 0.5;
    double gamma = 1.0;
    double sigma_spec = deg_to_rad(5.0);
    double epsilon = 1e-3;
    double tvg_exponent = 3.6;
    int near_pad = 4;
    double db_floor = -60.0;

    double bin_width() const { return (r_max - r_min) / n_bins; }
    double elevation_span() const { return elev_max - elev_min; }
    double db_ceiling() const { return db_floor + 100.0; }
    int padded_rows() const { return n_bins + near_pad; }

    // Bin-center range of padded row p (row near_pad is the first visible bin).
    double cell_range(int p) const { return r_min + (p - near_pad + 0.5) * bin_width(); }
    // Bin-center range of visible bin k.
    double bin_range(int k) const { return r_min + (k + 0.5) * bin_width(); }
    double beam_azimuth(int j) const {
        return -0.5 * azimuth_spread + (j + 0.5) * azimuth_spread / n_az;
    }

    friend bool operator==(const SonarConfig&, const SonarConfig&) = default;
};

/// Unvalidated config record as read from a file or assembled by a builder.
/// Unset optionals fall back to the defaults above (n_el to 6 * n_bins).
struct RawSonarConfig {
    std::optional<double> r_min, r_max;
    std::optional<int> n_bins, n_az;
    std::optional<double> azimuth_spread, elev_min, elev_max;
    std::optional<int> n_el;
    std::optional<double> alpha, sigma_bins, gamma, sigma_spec, epsilon, tvg_exponent;
    std::optional<int> near_pad;
    std::optional<double> db_floor;
};

RawSonarConfig to_raw(const SonarConfig& cfg);

struct ConfigIssue {
    std::string field;
    std::string reason;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// Checks every invariant and fills derived defaults. All violations are
/// collected and reported together in one ConfigError.
SonarConfig validate_config(const RawSonarConfig& raw);

/// Base seafloor orientation, given by the plane's elevation angle where it
/// crosses the r_min and r_max arcs.
struct BasePlane {
    double phi_near = 0.0;
    double phi_far = 0.0;

    friend bool operator==(const BasePlane&, const BasePlane&) = default;
};

void check_plane(const BasePlane& plane, const SonarConfig& cfg);
double coverage(const BasePlane& plane, const SonarConfig& cfg);
// Angle between the plane and the horizontal, measured in a beam's vertical plane.
double plane_tilt(const BasePlane& plane, const SonarConfig& cfg);

// Elevation of the base plane where it crosses the arc of radius r.
double plane_elevation_at(const BasePlane& plane, const SonarConfig& cfg, double r);
// The above evaluated at every padded row's bin-center range.
std::vector<double> plane_elevation_profile(const BasePlane& plane, const SonarConfig& cfg);

// Total angular heights are clamped to this band around the fan.
inline constexpr double kHeightClampMargin = 0.2;

/// Angular-height deviations psi, [n_bins + near_pad] x [n_az].
struct HeightField {
    Grid psi;
    friend bool operator==(const HeightField&, const HeightField&) = default;
};

HeightField zero_heightfield(const SonarConfig& cfg);

/// Normalized dB image, [n_bins] x [n_az], values in [0, 1].
struct SonarImage {
    Grid intensity;
    SonarConfig meta;
};

struct BeamGains {
    std::vector<double> gains;
    friend bool operator==(const BeamGains&, const BeamGains&) = default;
};

BeamGains unit_gains(const SonarConfig& cfg);

enum class PlaneMode { KnownPlane, HighTilt, GenericView };

const char* to_string(PlaneMode mode);
PlaneMode parse_plane_mode(const std::string& text);

struct OptimSettings {
    int steps = 150;
    double lr_geometry = 1e-4;
    double lr_gains = 0.1;
    int warmup = 30;
    double lambda_tv = 0.1;
    double weight_decay = 0.0;
    PlaneMode mode = PlaneMode::KnownPlane;
    double gv_min_coverage = 0.60;
    double gv_max_coverage = 0.975;
    double ht_coverage = 0.90;
    bool optimize_tvg = false;
    double lr_tvg = 1e-3;
    std::uint64_t seed = 0;

    friend bool operator==(const OptimSettings&, const OptimSettings&) = default;
};

void check_settings(const OptimSettings& settings);

} // namespace sonarfield
