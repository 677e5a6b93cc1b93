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

// Exact gradients of  recon_loss(render(psi, gains, g)) + lambda_tv * TV(psi)
// via hand-written adjoints of each render stage, plus a central-difference
// oracle used to check them.

#pragma once

#include "sonarfield/config.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace sonarfield {

struct DiffParams {
    HeightField psi;
    BeamGains gains;
    double tvg_exponent = 0.0;
};

DiffParams initial_params(const SonarConfig& cfg);

struct GradBundle {
    double value = 0.0;
    double recon = 0.0;
    double tv = 0.0;
    Grid d_psi;
    std::vector<double> d_gains;
    std::optional<double> d_tvg;
};

// The plain forward objective. value_and_grad(...).value is bit-identical.
double forward_loss(const DiffParams& params, const BasePlane& plane, const SonarImage& target,
                    double lambda_tv, const SonarConfig& cfg);

GradBundle value_and_grad(const DiffParams& params, const BasePlane& plane, const SonarImage& target,
                          double lambda_tv, const SonarConfig& cfg, bool differentiate_tvg = false);

struct FdSelection {
    bool psi = true;
    bool gains = true;
    bool tvg = false;
    // Restrict psi to these flat indices when non-empty.
    std::vector<std::size_t> psi_indices;
};

using ScalarObjective = std::function<double(const DiffParams&)>;

/// Central differences (f(x+h) - f(x-h)) / 2h per selected coordinate;
/// unselected entries are left at zero.
GradBundle fd_gradient(const ScalarObjective& f, const DiffParams& params, double h,
                       const FdSelection& which = {});

double fd_derivative(const std::function<double(double)>& f, double x, double h);

} // namespace sonarfield
