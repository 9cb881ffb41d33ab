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


#include "qtwin/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace qtwin {

double LeastSquaresResult::stderr_of(Eigen::Index i) const {
    const double v = covariance(i, i);
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

namespace {

Eigen::MatrixXd jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& r0, double rel_step) {
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        Eigen::VectorXd q = p;
        const double h = rel_step * std::max(std::abs(p[k]), 1e-8);
        q[k] += h;
        jac.col(k) = (f(q) - r0) / (q[k] - p[k]);
    }
    return jac;
}

}  // namespace

LeastSquaresResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                                       const Eigen::VectorXd& start, bool scale_covariance,
                                       const LeastSquaresOptions& options) {
    LeastSquaresResult out;
    Eigen::VectorXd p = start;
    Eigen::VectorXd r = residuals(p);
    double cost = r.squaredNorm();
    double lambda = options.initial_lambda;
    const Eigen::Index k = p.size();

    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it + 1;
        const Eigen::MatrixXd jac = jacobian(residuals, p, r, options.jacobian_step);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        bool improved = false;
        bool small_step = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index i = 0; i < k; ++i) {
                a(i, i) += lambda * std::max(jtj(i, i), 1e-30);
            }
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = p + step;
            const Eigen::VectorXd rt = residuals(trial);
            const double ct = rt.allFinite() ? rt.squaredNorm() : std::numeric_limits<double>::infinity();
            if (ct <= cost) {
                small_step = step.norm() <= options.x_tolerance * (p.norm() + options.x_tolerance);
                const bool flat = cost - ct <= options.f_tolerance * std::max(cost, 1e-300);
                p = trial;
                r = rt;
                cost = ct;
                lambda = std::max(lambda / 10.0, 1e-15);
                improved = true;
                small_step = small_step || flat;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved || small_step || cost == 0.0) {
            out.converged = improved || cost < 1e-24 || lambda > 1e10;
            break;
        }
    }

    const Eigen::MatrixXd jac = jacobian(residuals, p, r, options.jacobian_step);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    out.covariance = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse())
                                       : Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::infinity());
    if (scale_covariance) {
        const auto dof = std::max<Eigen::Index>(r.size() - k, 1);
        out.covariance *= cost / static_cast<double>(dof);
    }
    out.params = p;
    out.cost = cost;
    return out;
}

}  // namespace qtwin
