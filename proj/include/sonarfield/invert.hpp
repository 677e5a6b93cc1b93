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

// Training-free inversion: psi and per-beam gains are fitted to one target
// image by AdamW on  recon + lambda_tv * TV, with the base plane either known,
// pinned to a steep tilt, or resampled every step.

#pragma once

#include "sonarfield/graddiff.hpp"
#include "sonarfield/losses.hpp"
#include "sonarfield/random.hpp"

#include <functional>
#include <vector>

namespace sonarfield {

BasePlane sample_plane(PlaneMode mode, const BasePlane& known, const OptimSettings& settings,
                       const SonarConfig& cfg, Rng& rng);

struct AdamConstants {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimState {
    long long step = 0;
    DiffParams params;
    DiffParams m;
    DiffParams v;
    std::vector<double> loss_history;
};

OptimState init_state(const DiffParams& params);

struct StepRates {
    double geometry = 0.0;
    double gains = 0.0;
    double tvg = 0.0;
    double weight_decay = 0.0;
};

// Gains are projected back onto [kMinGain, inf) after every update; a dark
// column otherwise drives its gain through zero.
inline constexpr double kMinGain = 1e-3;

// One decoupled-weight-decay update. The tvg moment only moves when the
// bundle carries d_tvg.
void adamw_step(OptimState& state, const GradBundle& grads, const StepRates& rates,
                const AdamConstants& k = {});

struct FitResult {
    HeightField heightfield;
    BeamGains gains;
    double tvg_exponent = 0.0;
    std::vector<double> loss_history;
    std::vector<double> recon_history;
    SonarImage final_image;
    OptimSettings settings_echo;
};

// Called after each step with (step, loss, params).
using FitObserver = std::function<void(int, double, const DiffParams&)>;

FitResult fit(const SonarImage& target, const SonarConfig& cfg, const BasePlane& known_plane,
              const OptimSettings& settings, const FitObserver& observer = {});

} // namespace sonarfield
