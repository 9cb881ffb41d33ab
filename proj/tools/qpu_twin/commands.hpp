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

#include <optional>
#include <string>
#include <vector>

#include "io.hpp"
#include "qtwin/dynamics.hpp"

namespace qpu_twin {

/// Exit status of a command that ran to the end; errors travel as
/// qtwin::Error and are mapped in main.
enum Exit : int { kOk = 0, kInput = 2, kNumerical = 3 };

int cmd_fit_device(Context& ctx);

struct ReadoutArgs {
    std::string sub;
    int qubit = 1;
    std::optional<int> shots;
    std::optional<double> amplitude;
    std::optional<double> eta;
    bool no_preselect = false;
};
int cmd_readout(Context& ctx, const ReadoutArgs& args);

struct FluxArgs {
    std::string sub;
    std::optional<int> qubit;
    bool no_correction = false;
    double detuning_ghz = 0.2;
    double pulse_ns = 100.0;
    double budget_mhz = 1.0;
    double phase_noise_rad = 0.0;
};
int cmd_flux(Context& ctx, const FluxArgs& args);

struct GateArgs {
    std::string sub;
    int pair = 1;
    double noise_mhz = 0.1;
    double span = 0.01;
    int points = 101;
    std::vector<double> amplitudes;
    double max_ns = 80.0;
    bool skip_noise = false;
};
int cmd_gate(Context& ctx, const GateArgs& args);

/// The pulse file written by gate calibrate and read by the dynamics bench.
json cz_to_json(const qtwin::CzCalibration& cal);
qtwin::CzCalibration cz_from_json(const json& j);

struct BenchArgs {
    std::string sub;
    std::string model = "depolarizing";
    int pair = 1;
    std::vector<double> epc;
    std::optional<double> irb_epc;
    double zz_mhz = 0.0;
    int randomizations = 30;
    int shots = 1000;
    std::vector<int> lengths;
    std::string cz_pulse;
};
int cmd_bench(Context& ctx, const BenchArgs& args);

}  // namespace qpu_twin
