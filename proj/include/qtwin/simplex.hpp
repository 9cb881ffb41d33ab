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

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace qtwin {

struct SimplexOptions {
    /// Initial simplex edge per coordinate. Empty means 5% of |start| (or
    /// 0.00025 for zero coordinates).
    std::vector<double> initial_steps;
    int max_evaluations = 2000;
    /// Stop when the spread of objective values across the simplex falls
    /// below this value.
    double f_tolerance = 1e-12;
    /// ... and the simplex diameter falls below this value.
    double x_tolerance = 1e-9;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    /// Best objective value after each iteration.
    std::vector<double> best_history;
};

/// Nelder-Mead downhill simplex with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const SimplexOptions& options = {});

}  // namespace qtwin
