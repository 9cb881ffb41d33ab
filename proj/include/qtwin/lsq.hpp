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

#include <Eigen/Core>

namespace qtwin {

struct LeastSquaresOptions {
    int max_iterations = 200;
    /// Relative step and relative cost-change tolerances.
    double x_tolerance = 1e-12;
    double f_tolerance = 1e-15;
    /// Forward-difference step relative to max(|p|, 1e-8 scale).
    double jacobian_step = 1e-7;
    double initial_lambda = 1e-3;
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    /// (J^T J)^-1 scaled by the reduced chi-square, or unscaled when the
    /// residuals are already normalized by known standard deviations.
    Eigen::MatrixXd covariance;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;

    double stderr_of(Eigen::Index i) const;
};

/// Levenberg-Marquardt on a residual vector with a forward-difference
/// Jacobian. With scale_covariance the covariance is multiplied by
/// cost / (n - k) (appropriate when residuals are unweighted).
LeastSquaresResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                                       const Eigen::VectorXd& start, bool scale_covariance,
                                       const LeastSquaresOptions& options = {});

}  // namespace qtwin
