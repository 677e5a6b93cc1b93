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

// Small configs, random fields and scratch directories shared by the tests.

#pragma once

#include "sonarfield/config.hpp"
#include "sonarfield/random.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace sftest {

using namespace sonarfield;

struct ConfigSpec {
    int n_bins = 32;
    int n_az = 8;
    int n_el = 64;
    double alpha = 500.0;
    double r_min = 2.0;
    double r_max = 6.0;
    double az_spread_deg = 20.0;
    double elev_min_deg = -35.0;
    double elev_max_deg = -15.0;
    int near_pad = 4;
};

inline SonarConfig make_config(const ConfigSpec& s = {}) {
    RawSonarConfig raw;
    raw.r_min = s.r_min;
    raw.r_max = s.r_max;
    raw.n_bins = s.n_bins;
    raw.n_az = s.n_az;
    raw.n_el = s.n_el;
    raw.alpha = s.alpha;
    raw.azimuth_spread = deg_to_rad(s.az_spread_deg);
    raw.elev_min = deg_to_rad(s.elev_min_deg);
    raw.elev_max = deg_to_rad(s.elev_max_deg);
    raw.near_pad = s.near_pad;
    return validate_config(raw);
}

// A plane crossing most of the fan, tilted toward the far edge.
inline BasePlane mid_plane(const SonarConfig& cfg) {
    const double span = cfg.elevation_span();
    return {cfg.elev_min + 0.15 * span, cfg.elev_min + 0.85 * span};
}

inline HeightField random_field(const SonarConfig& cfg, Rng& rng, double scale) {
    HeightField hf = zero_heightfield(cfg);
    for (double& v : hf.psi.values()) v = uniform(rng, -scale, scale);
    return hf;
}

inline BeamGains random_gains(const SonarConfig& cfg, Rng& rng) {
    BeamGains g = unit_gains(cfg);
    for (double& v : g.gains) v = uniform(rng, 0.5, 2.0);
    return g;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("sonarfield_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& leaf = "") const { return leaf.empty() ? path_.string() : (path_ / leaf).string(); }

private:
    std::filesystem::path path_;
};

} // namespace sftest
