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

#include <string>
#include <vector>

namespace qpu_twin {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    /// Markers instead of a polyline.
    bool markers = false;
};

struct Axes {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
};

/// Self-contained SVG; every series is repeated as CSV in a comment so the
/// figure can be regenerated from the file alone.
std::string line_plot(const Axes& axes, const std::vector<Series>& series);

/// z[row][col] over ys[row] by xs[col], colour scaled between zmin and zmax.
std::string heatmap(const Axes& axes, const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::vector<std::vector<double>>& z, double zmin, double zmax);

}  // namespace qpu_twin
