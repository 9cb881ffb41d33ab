// Copyright 2026 The qpu-twin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtwin {

enum class ErrorKind {
    InvalidArgument,
    Truncation,
    LabelAmbiguity,
    NonConvergence,
    DegenerateObservations,
    ModeMixing,
    EmptyGrid,
    SingularCovariance,
    EmptyClass,
    SampleRateMismatch,
    UnstableTerm,
    IllConditioned,
    UnwrapFailure,
    StepTooLarge,
    NoCrossing,
    CalibrationFailed,
    FitDivergence,
    RatioOutOfRange,
    ModelMismatch,
    Config,
};

std::string_view error_kind_name(ErrorKind kind);

/// Every recoverable failure in the library is reported as an Error carrying
/// the kind, so callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

}  // namespace qtwin
