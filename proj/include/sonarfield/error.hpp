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

#include <stdexcept>
#include <string>

namespace sonarfield {

// Numeric values double as CLI exit codes and C API status codes.
enum class ErrorCode : int {
    Other = 1,
    Format = 2,
    Dimension = 3,
    Divergence = 4,
    Invalid = 5,
    Io = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Malformed binary or text input. Carries the byte offset where parsing
// stopped when one is known.
class FormatError : public Error {
public:
    FormatError(const std::string& what, long long offset = -1)
        : Error(ErrorCode::Format, what), offset_(offset) {}

    long long offset() const noexcept { return offset_; }

private:
    long long offset_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what)
        : Error(ErrorCode::Dimension, what) {}
};

// A non-finite value escaped one of the pipeline stages.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& stage, long long step = -1)
        : Error(ErrorCode::Divergence,
                step >= 0 ? "non-finite value in stage '" + stage + "' at step " +
                                std::to_string(step)
                          : "non-finite value in stage '" + stage + "'"),
          stage_(stage), step_(step) {}

    const std::string& stage() const noexcept { return stage_; }
    long long step() const noexcept { return step_; }

private:
    std::string stage_;
    long long step_;
};

} // namespace sonarfield
