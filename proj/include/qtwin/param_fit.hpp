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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtwin/spectrum.hpp"

namespace qtwin {

enum class ObservableKind {
    /// Dressed |g>-|e> frequency.
    QubitGe,
    /// Dressed anharmonicity, ef - ge.
    Anharmonicity,
    /// Dressed resonator-like frequency with the qubit in |g>.
    ResonatorG,
};

struct Observation {
    ObservableKind kind = ObservableKind::QubitGe;
    double phi = 0.0;
    double value = 0.0;
    double weight = 1.0;
};

/// Measured dressed frequencies of one chain. The resonator bare frequency,
/// filter frequency and resonator-filter coupling are held fixed during the
/// fit; they come from the readout spectra.
struct SpectralObservations {
    std::vector<Observation> observations;
    double omega_r_bare = 7.0;
    double omega_p = 7.0;
    double j_rp = 0.0;
    double kappa_p = 0.0;
    int charge_cutoff = 20;
    int levels_kept = 5;
    int n_r = 5;
    int n_p = 5;

    /// The usual set: ge at both flux extrema, anharmonicity at phi = 0 (weight
    /// 2) and the dressed resonator at phi = 1/2, each optional except ge.
    static SpectralObservations extremal(double ge_at_max, double ge_at_min, std::optional<double> anharmonicity_at_max,
                                         std::optional<double> resonator_at_min, double omega_r_bare, double omega_p,
                                         double j_rp);

    std::optional<double> find(ObservableKind kind, double phi) const;
    void validate() const;
};

struct FittedChain {
    TransmonParams transmon;
    double g_qr = 0.1;
};

struct FitResidual {
    ObservableKind kind;
    double phi;
    double observed;
    double model;
    /// model - observed, GHz.
    double residual;
};

struct FitReport {
    FittedChain fitted;
    std::vector<FitResidual> residuals;
    double objective = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    /// False when no anharmonicity was observed: E_c stays at its seed value.
    bool ec_constrained = true;
    /// False when no resonator line was observed: g_qr stays at its seed.
    bool g_constrained = true;
    int winning_restart = 0;
    /// Best objective after each simplex iteration of the winning restart.
    std::vector<double> objective_history;

    double max_abs_residual() const;
};

struct FitOptions {
    /// Residual tolerance in GHz.
    double tol = 1e-6;
    /// Evaluation budget per restart.
    int max_iter = 3000;
    int restarts = 3;
    std::uint64_t seed = 0;
    /// Hold g_qr at this value instead of fitting it.
    std::optional<double> fixed_g_qr;
};

/// Closed-form starting point from the asymptotic transmon relations.
FittedChain seed_guess(const SpectralObservations& obs);

/// Weighted least-squares fit of (E_J,max, E_c, asym, g_qr) to the
/// observations by repeated diagonalization of the chain Hamiltonian.
/// Returns the best point even when not converged.
FitReport fit_chain(const SpectralObservations& obs, const FitOptions& options = {});

ChainParams chain_from_fit(const SpectralObservations& obs, const FittedChain& fitted);

/// Forward model: the model value of every observation for the given chain.
std::vector<double> model_values(const SpectralObservations& obs, const FittedChain& fitted);

/// Noiseless observations (ge at both extrema, anharmonicity at 0, resonator
/// at 1/2) generated by the forward model.
SpectralObservations synthesize_observations(const ChainParams& chain);

std::string observable_name(ObservableKind kind);

}  // namespace qtwin
