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

// File formats. Angles are degrees on disk, radians in memory.
//
// SFG1 grid: "SFG1", u32 rows, u32 cols, u8 kind, rows*cols f32, all
// little-endian, row-major (row = range bin, col = azimuth beam).

#pragma once

#include "sonarfield/config.hpp"
#include "sonarfield/evalmetrics.hpp"
#include "sonarfield/terrain.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sonarfield {

enum class SfgKind : std::uint8_t { Image = 0, HeightField = 1 };

struct SfgGrid {
    Grid grid;
    SfgKind kind = SfgKind::Image;
};

std::string encode_sfg(const Grid& grid, SfgKind kind);
SfgGrid decode_sfg(const std::string& bytes);
void write_sfg(const std::string& path, const Grid& grid, SfgKind kind);
SfgGrid read_sfg(const std::string& path);

// Reads a grid and checks its kind and, when nonzero, its shape.
Grid read_sfg_as(const std::string& path, SfgKind kind, std::size_t rows = 0, std::size_t cols = 0);

// P5 with maxval 255, pixel = round(255 * v) clamped to [0, 255]. With
// `normalize`, values are first min-max scaled to [0, 1].
std::string encode_pgm(const Grid& grid, bool normalize = false);
void write_pgm(const std::string& path, const Grid& grid, bool normalize = false);

std::string config_to_json(const SonarConfig& cfg);
SonarConfig config_from_json(const std::string& text);
SonarConfig load_config(const std::string& path);
void save_config(const std::string& path, const SonarConfig& cfg);

std::string plane_to_json(const BasePlane& plane);
BasePlane plane_from_json(const std::string& text);
BasePlane load_plane(const std::string& path);
void save_plane(const std::string& path, const BasePlane& plane);

std::string gains_to_json(const BeamGains& gains);
BeamGains gains_from_json(const std::string& text);
BeamGains load_gains(const std::string& path);
void save_gains(const std::string& path, const BeamGains& gains);

// {mcd_cm, rmse_cm, mae_cm, mse_cm2, n_points}
std::string metrics_to_json(const MetricsReport& report);

std::string loss_csv(const std::vector<double>& losses);

std::string manifest_to_json(const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> manifest_from_json(const std::string& text);
void save_manifest(const std::string& path, const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> load_manifest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);
// Writes to a sibling temporary, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& bytes);

} // namespace sonarfield
