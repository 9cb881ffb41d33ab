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

#include "qtwin/error.hpp"

namespace qtwin {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Truncation: return "Truncation";
        case ErrorKind::LabelAmbiguity: return "LabelAmbiguity";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::DegenerateObservations: return "DegenerateObservations";
        case ErrorKind::ModeMixing: return "ModeMixing";
        case ErrorKind::EmptyGrid: return "EmptyGrid";
        case ErrorKind::SingularCovariance: return "SingularCovariance";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::SampleRateMismatch: return "SampleRateMismatch";
        case ErrorKind::UnstableTerm: return "UnstableTerm";
        case ErrorKind::IllConditioned: return "IllConditioned";
        case ErrorKind::UnwrapFailure: return "UnwrapFailure";
        case ErrorKind::StepTooLarge: return "StepTooLarge";
        case ErrorKind::NoCrossing: return "NoCrossing";
        case ErrorKind::CalibrationFailed: return "CalibrationFailed";
        case ErrorKind::FitDivergence: return "FitDivergence";
        case ErrorKind::RatioOutOfRange: return "RatioOutOfRange";
        case ErrorKind::ModelMismatch: return "ModelMismatch";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

}  // namespace qtwin
