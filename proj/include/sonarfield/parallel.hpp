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

#include <cstddef>
#include <functional>

namespace sonarfield {

// Worker cap for column- and sample-parallel loops. 0 restores the default:
// SONARFIELD_THREADS if set, otherwise the hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write only to index-owned outputs so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace sonarfield
