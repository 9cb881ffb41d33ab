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

#include "qtwin/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qtwin {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const SimplexOptions& options) {
    const Eigen::Index n = start.size();
    std::vector<Eigen::VectorXd> points(n + 1, start);
    for (Eigen::Index i = 0; i < n; ++i) {
        double step = 0.0;
        if (static_cast<std::size_t>(i) < options.initial_steps.size()) {
            step = options.initial_steps[i];
        } else {
            step = start[i] != 0.0 ? 0.05 * std::abs(start[i]) : 0.00025;
        }
        points[i + 1][i] += step;
    }

    SimplexResult result;
    std::vector<double> values(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) {
        values[i] = objective(points[i]);
        ++result.evaluations;
    }

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Eigen::VectorXd> p;
        std::vector<double> v;
        p.reserve(order.size());
        v.reserve(order.size());
        for (auto idx : order) {
            p.push_back(points[idx]);
            v.push_back(values[idx]);
        }
        points = std::move(p);
        values = std::move(v);
    };

    sort_simplex();
    while (result.evaluations < options.max_evaluations) {
        double diameter = 0.0;
        for (Eigen::Index i = 1; i <= n; ++i) {
            diameter = std::max(diameter, (points[i] - points[0]).lpNorm<Eigen::Infinity>());
        }
        if (values[n] - values[0] <= options.f_tolerance && diameter <= options.x_tolerance) {
            result.converged = true;
            break;
        }
        ++result.iterations;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            centroid += points[i];
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - points[n]);
        const double f_reflected = objective(reflected);
        ++result.evaluations;

        if (f_reflected < values[0]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - points[n]);
            const double f_expanded = objective(expanded);
            ++result.evaluations;
            if (f_expanded < f_reflected) {
                points[n] = expanded;
                values[n] = f_expanded;
            } else {
                points[n] = reflected;
                values[n] = f_reflected;
            }
        } else if (f_reflected < values[n - 1]) {
            points[n] = reflected;
            values[n] = f_reflected;
        } else {
            const bool outside = f_reflected < values[n];
            const Eigen::VectorXd contracted =
                outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                        : Eigen::VectorXd(centroid + 0.5 * (points[n] - centroid));
            const double f_contracted = objective(contracted);
            ++result.evaluations;
            if (f_contracted < (outside ? f_reflected : values[n])) {
                points[n] = contracted;
                values[n] = f_contracted;
            } else {
                for (Eigen::Index i = 1; i <= n; ++i) {
                    points[i] = points[0] + 0.5 * (points[i] - points[0]);
                    values[i] = objective(points[i]);
                    ++result.evaluations;
                }
            }
        }
        sort_simplex();
        result.best_history.push_back(values[0]);
    }

    result.x = points[0];
    result.value = values[0];
    return result;
}

}  // namespace qtwin
