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
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qtwin/spectrum.hpp"

namespace qtwin {

enum class QubitState { G = 0, E = 1, F = 2 };

char state_letter(QubitState s);
QubitState state_from_letter(char c);

/// Complex eigenmodes of the resonator-filter pair. Frequencies and rates are
/// in GHz (divided by 2 pi); kappa is the full linewidth, -2 Im(eigenvalue).
struct HybridizedModes {
    double kappa_r_eff = 0.0;
    double kappa_p_eff = 0.0;
    double omega_r_like = 0.0;
    double omega_p_like = 0.0;
    /// |<r|v_r>|^2 of the eigenvector labeled resonator-like.
    double resonator_weight = 1.0;
};

/// Eigenvalues of [[delta_rp - i kappa_int/2, j], [j, -i kappa_p/2]] in the
/// filter frame. Throws ModeMixing when neither eigenvector is clearly
/// resonator-like.
HybridizedModes hybridized_linewidths(double delta_rp, double j_rp, double kappa_p, double kappa_int = 0.0);

/// Same with the decoupled resonator frequency for the given qubit state taken
/// from the chain (filter removed). Returned frequencies are absolute.
HybridizedModes hybridized_linewidths(const ChainParams& c, QubitState s, FluxPoint f = {});

/// Per-state resonator frequencies with the filter decoupled, GHz.
std::array<double, 3> resonator_frequencies(const ChainParams& c, FluxPoint f = {});

/// Feedline transmission past a side-coupled filter that is exchange-coupled
/// to the resonator:
///   S21 = X / (X + kappa_p/2),  X = -i dp + J^2 / (kappa_int/2 - i dr)
/// with dp, dr the probe detuning from the filter and resonator.
std::complex<double> transmission_s21(double omega, double omega_r, double omega_p, double j_rp, double kappa_p,
                                      double kappa_int = 0.0);

std::vector<std::complex<double>> transmission_s21(const ChainParams& c, QubitState s, const std::vector<double>& freqs,
                                                   FluxPoint f = {});

/// Argmax over the grid of ||S_g|-|S_e|| + ||S_e|-|S_f||; ties go to the
/// lowest frequency. Throws EmptyGrid.
double optimal_probe_frequency(const std::vector<double>& freqs, const std::vector<std::complex<double>>& sg,
                               const std::vector<std::complex<double>>& se,
                               const std::vector<std::complex<double>>& sf);

struct TwoStep {
    /// Drive amplitude multiplier during the initial segment.
    double scale = 2.0;
    double duration_ns = 40.0;

    bool operator==(const TwoStep&) const = default;
};

struct ReadoutConfig {
    double probe_ghz = 7.0;
    double integration_ns = 160.0;
    /// Steady-state field magnitude with the qubit in g, sqrt(photons).
    double amplitude = 1.0;
    double eta = 0.29;
    int shots = 10000;
    std::optional<TwoStep> two_step;
    std::uint64_t seed = 1;
    /// Probability that the qubit starts in e before state preparation.
    double thermal_population = 0.0;
    /// Trajectory sampling step, ns.
    double dt_ns = 0.5;

    void validate() const;
    bool operator==(const ReadoutConfig&) const = default;
};

struct IQRecord {
    QubitState prepared = QubitState::G;
    std::complex<double> iq;
    std::complex<double> presel;
};

struct IQShotSet {
    std::vector<IQRecord> records;
    /// Per-quadrature noise standard deviation used for both readouts.
    double sigma = 0.0;
};

/// Mode parameters seen by the single-mode cavity model, per qubit state.
struct CavityModel {
    std::array<double, 3> omega{};
    std::array<double, 3> kappa{};
};

CavityModel cavity_model(const ChainParams& c, FluxPoint f = {});

/// Noise-free cavity field sampled every dt over the integration window for
/// a qubit that stays in state s.
std::vector<std::complex<double>> cavity_trajectory(const CavityModel& m, const ReadoutConfig& r, QubitState s);

/// Ensemble-mean trajectory including relaxation during the window.
std::vector<std::complex<double>> mean_trajectory(const CavityModel& m, const ReadoutConfig& r, QubitState s,
                                                  double t1_us);

/// Integration weights conj(mean_e - mean_g), normalized to unit l2 norm.
std::vector<std::complex<double>> integration_weights(const CavityModel& m, const ReadoutConfig& r, double t1_us);

IQShotSet simulate_shots(const CavityModel& m, const ReadoutConfig& r, double t1_us);
IQShotSet simulate_shots(const ChainParams& c, const ReadoutConfig& r, double t1_us, FluxPoint f = {});

struct GaussianComponent {
    Eigen::Vector2d mean;
    Eigen::Matrix2d covariance;
    double weight = 1.0 / 3.0;
};

struct Classifier {
    std::array<GaussianComponent, 3> components;
    int iterations = 0;
    double log_likelihood = 0.0;

    QubitState classify(std::complex<double> v) const;
    /// Per-component log(weight * density).
    std::array<double, 3> log_joint(std::complex<double> v) const;
};

/// EM for a three-component 2-D Gaussian mixture on the pooled integrated
/// voltages, started from the per-prepared-state sample statistics.
Classifier fit_classifier(const IQShotSet& shots, int max_iter = 200, double tol = 1e-10);

struct AssignmentMatrix {
    /// p(prepared, assigned).
    Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
    std::array<double, 3> discarded{};
    std::array<int, 3> retained{};

    double mean_error() const { return 1.0 - p.trace() / 3.0; }
    double discarded_fraction() const { return (discarded[0] + discarded[1] + discarded[2]) / 3.0; }
};

AssignmentMatrix assignment_matrix(const IQShotSet& shots, const Classifier& c, bool preselect);

}  // namespace qtwin
