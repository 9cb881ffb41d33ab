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

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qtwin/dynamics.hpp"
#include "qtwin/flux_dsp.hpp"
#include "qtwin/param_fit.hpp"
#include "qtwin/readout.hpp"
#include "qtwin/spectrum.hpp"

namespace qtwin {

/// Measured extremal lines used by the parameter fit.
struct QubitObservations {
    double ge_max_ghz = 0.0;
    double ge_min_ghz = 0.0;
    std::optional<double> anharmonicity_ghz;
    /// Dressed resonator with the qubit at minimum frequency.
    std::optional<double> resonator_min_ghz;

    bool operator==(const QubitObservations&) const = default;
};

/// Published extracted values to compare fits against.
struct ReferenceParams {
    std::optional<double> ej_max_ghz;
    std::optional<double> ec_ghz;
    std::optional<double> g_qr_ghz;

    bool operator==(const ReferenceParams&) const = default;
};

struct QubitDescription {
    int id = 1;
    ChainParams chain;
    QubitNoise noise;
    FluxPoint operating;
    std::optional<QubitObservations> observations;
    ReferenceParams reference;
    ReadoutConfig readout;
    /// When absent the probe is placed by optimal_probe_frequency.
    std::optional<double> probe_ghz;

    bool operator==(const QubitDescription&) const = default;
};

struct CouplerDescription {
    std::array<int, 2> qubits{1, 2};
    double j_qq_ghz = 0.0067;
    double interaction_ghz = 5.0;

    bool operator==(const CouplerDescription&) const = default;
};

struct DeviceDescription {
    std::string id;
    std::vector<QubitDescription> qubits;
    std::vector<CouplerDescription> couplers;
    TransferFunction flux_line;

    /// Throws Config on dangling references, duplicates or bad values.
    void validate() const;
    /// Throws Config for an unknown id.
    const QubitDescription& qubit(int id) const;
    /// Ge frequency versus flux: the measured extrema when present, else the
    /// dressed maximum of the chain with its own asymmetry.
    FluxMap flux_map(int id) const;
    /// Two-mode model of a coupler, first listed qubit first.
    DuffingPair pair(std::size_t coupler) const;
    NoiseParams pair_noise(std::size_t coupler) const;

    bool operator==(const DeviceDescription&) const = default;
};

/// YAML (or its JSON subset). Throws Config with the offending key.
DeviceDescription parse_device(const std::string& text);
DeviceDescription load_device(const std::filesystem::path& path);
/// Canonical YAML; doubles keep full precision so load(emit(x)) == x.
std::string emit_device(const DeviceDescription& device);
void save_device(const DeviceDescription& device, const std::filesystem::path& path);

}  // namespace qtwin
