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

#pragma once

#include "sonarfield/config.hpp"

#include <vector>

namespace sonarfield {

struct PointCloud {
    std::vector<Vec3> points;
};

// One point per visible bin, row-major: the base-plane point offset by r*psi
// along the constant-range arc through it.
PointCloud to_point_cloud(const HeightField& dev, const BasePlane& plane, const SonarConfig& cfg);

/// 0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|).
double chamfer(const PointCloud& a, const PointCloud& b);
// Exhaustive reference; chamfer() returns the identical double.
double chamfer_bruteforce(const PointCloud& a, const PointCloud& b);

// Directed mean nearest-neighbor distance from each point of `from` into `to`.
double directed_mean_nn(const PointCloud& from, const PointCloud& to);

struct HeightErrors {
    double rmse = 0.0;
    double mae = 0.0;
    double mse = 0.0;
};

HeightErrors height_errors(const PointCloud& pred, const PointCloud& gt);

/// Metric values in meters (mse in m^2).
struct MetricsReport {
    double mcd = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double mse = 0.0;
    std::size_t n_points = 0;
};

MetricsReport evaluate(const HeightField& pred, const HeightField& gt, const BasePlane& plane,
                       const SonarConfig& cfg);

// Arithmetic mean of each field; n_points is summed.
MetricsReport average_reports(const std::vector<MetricsReport>& reports);

} // namespace sonarfield
