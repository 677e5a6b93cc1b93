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

namespace sonarfield {

// Smoothing of |x| inside the TV prior: sqrt(x^2 + d^2) - d.
inline constexpr double kTvSmoothing = 1e-8;

/// Per-pixel mean squared error.
double recon_loss(const Grid& rendered, const Grid& target);
double recon_loss(const SonarImage& rendered, const SonarImage& target);

/// First-order total variation of psi with forward differences where a
/// neighbor exists, divided by the total entry count.
double tv_penalty(const Grid& psi);
Grid tv_gradient(const Grid& psi);

} // namespace sonarfield
