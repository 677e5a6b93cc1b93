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

// Synthetic seafloors: seeded gradient noise on a tilted base plane, scene
// presets, and dataset emission.

#pragma once

#include "sonarfield/config.hpp"
#include "sonarfield/random.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sonarfield {

// 2D gradient noise at (x, y) meters with `frequency` lattice cells per meter.
// Zero on every lattice point, C1 across cell boundaries.
double perlin2(double x, double y, double frequency, std::uint64_t seed);

// Metric vertical offsets dz for every padded cell. Rescaled so the visible
// bins have peak-to-trough `amplitude` and zero mean; padding rows share the
// same affine map. octaves = 2 stacks frequency and twice the frequency.
Grid seafloor_offsets(const SonarConfig& cfg, const BasePlane& plane, double amplitude, double frequency,
                      std::uint64_t seed, int octaves = 1);

// psi = asin((r sin(phi_plane) + dz) / r) - phi_plane, per padded cell.
HeightField offsets_to_heightfield(const Grid& dz, const BasePlane& plane, const SonarConfig& cfg);

HeightField synth_seafloor(const SonarConfig& cfg, const BasePlane& plane, double amplitude, double frequency,
                           std::uint64_t seed, int octaves = 1);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Closed parameter ranges. Angles in degrees, lengths in meters.
struct ScenePreset {
    std::string name;
    Interval azimuth_spread_deg;
    Interval start_range;
    Interval end_range;
    Interval range_coverage;
    Interval n_bins;
    Interval n_az;
    Interval elevation_spread_deg;
    Interval fan_pitch_deg;  // center of the elevation fan
    Interval amplitude;
    Interval frequency;
    Interval tilt_deg;
};

ScenePreset in_dist_preset();
ScenePreset holo_standard_like_preset();
ScenePreset holo_rough_like_preset();
ScenePreset preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

// Anchors stay this fraction of the fan span away from its edges.
inline constexpr double kAnchorMargin = 0.02;
inline constexpr int kMaxSceneAttempts = 1000;

struct SceneSample {
    SonarConfig cfg;
    BasePlane plane;
    HeightField gt_dev;
    SonarImage target;
    std::uint64_t seed = 0;
    // Named parameter draws in file units (degrees, meters).
    std::vector<std::pair<std::string, double>> draws;
};

/// Every random choice of one scene, before terrain synthesis and rendering.
struct SceneDraw {
    SonarConfig cfg;
    BasePlane plane;
    double amplitude = 0.0;
    double frequency = 0.0;
    std::uint64_t noise_seed = 0;
    std::vector<std::pair<std::string, double>> draws;
};

// Rejection-samples parameters until the plane's tilt fits the preset.
SceneDraw draw_scene(const ScenePreset& preset, Rng& rng);

SceneSample sample_scene(const ScenePreset& preset, Rng& rng, int octaves = 1);
// Convenience: sample_scene with an engine seeded by `seed`, which is recorded.
SceneSample sample_scene(const ScenePreset& preset, std::uint64_t seed, int octaves = 1);

struct DatasetEntry {
    std::string id;
    std::uint64_t seed = 0;
    std::string cfg_path;
    std::string plane_path;
    std::string gt_path;
    std::string target_path;
    std::vector<std::pair<std::string, double>> draws;
};

// Writes <out_dir>/<id>/{config.json, plane.json, gt.sfg, target.sfg} per
// sample and <out_dir>/manifest.json. Paths in the manifest are relative to
// out_dir.
std::vector<DatasetEntry> gen_dataset(const ScenePreset& preset, int n, std::uint64_t seed,
                                      const std::string& out_dir, int octaves = 1);

} // namespace sonarfield
