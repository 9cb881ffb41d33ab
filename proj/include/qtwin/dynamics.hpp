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

#include <Eigen/Core>

#include "qtwin/flux_dsp.hpp"

namespace qtwin {

/// One transmon as a Kerr oscillator. Detuning from idle follows the flux
/// map: delta(x) = map(phi_idle + x) - map(phi_idle).
struct DuffingMode {
    double idle_ghz = 5.0;
    double anharmonicity_ghz = -0.16;
    int levels = 3;
    FluxMap map;
    double phi_idle = 0.0;

    double detuning(double flux_offset) const;
    /// Flux offset in [0, 1/2] placing the ge transition at freq_ghz. The
    /// sign is chosen so that the offset moves away from phi_idle toward the
    /// nearest sweet spot's opposite side, i.e. it is the positive branch for
    /// phi_idle = 0 and the negative branch for phi_idle = 1/2.
    double offset_for(double freq_ghz) const;
};

struct DuffingPair {
    std::array<DuffingMode, 2> q;
    /// Half the on-resonance splitting in the one-excitation manifold.
    double j_qq = 0.0067;
    double interaction_ghz = 5.0;

    void validate() const;
    int dim() const { return q[0].levels * q[1].levels; }
    /// Basis index of |n1 n2>, qubit 1 major.
    int index(int n1, int n2) const { return n1 * q[1].levels + n2; }

    /// Device A qubits 1 and 2: qubit 1 idles at its minimum (4.421 GHz),
    /// qubit 2 at its maximum (5.662 GHz).
    static DuffingPair device_a();
};

enum class T2Kind { Star, Echo };

struct QubitNoise {
    double t1_us = 100.0;
    double t2_star_us = 100.0;
    double t2_echo_us = 100.0;

    void validate() const;
    bool operator==(const QubitNoise&) const = default;
    /// Pure-dephasing rate 1/t2 - 1/(2 t1) in 1/ns.
    double dephasing_rate(T2Kind kind) const;
    double relaxation_rate() const { return 1.0 / (t1_us * 1e3); }
};

struct NoiseParams {
    std::array<QubitNoise, 2> q;
    /// Dephasing context per sample: T2 used while that qubit's flux is
    /// displaced from idle, and while it idles.
    T2Kind pulse_t2 = T2Kind::Echo;
    T2Kind idle_t2 = T2Kind::Star;

    void validate() const;
    /// Device A qubits 1 and 2, median coherence.
    static NoiseParams device_a();
};

struct GateReport {
    double conditional_phase = 0.0;
    double leakage = 0.0;
    /// Mean population moved between computational states (|ge> <-> |eg>
    /// exchange left over from non-adiabatic edges).
    double swap = 0.0;
    /// Phases of |eg> and |ge> relative to |gg> (qubit 1, qubit 2).
    std::array<double, 2> dynamic_phase{0.0, 0.0};
    double total_ns = 0.0;
    /// Average gate infidelity after virtual-Z correction; present when the
    /// report comes from a dissipative evaluation.
    std::optional<double> gate_error;
};

/// Piecewise-constant unitary propagator over the joint trajectory, bare
/// basis. Integration runs in the common frame at the mean idle frequency,
/// where the exchange term is static; the result is reported in the
/// interaction frame of the zero-flux Hamiltonian H0 (exchange included),
/// U = exp(i 2 pi H0 t1) U_common exp(-i 2 pi H0 t0), with t0 = flux1.t0_ns.
/// Zero-flux stretches are therefore exact identities and, for j_qq = 0, this
/// is the rotating frame at the idle frequencies. Throws StepTooLarge when
/// 2 pi dt ||H|| > 100.
Eigen::MatrixXcd pair_propagator(const DuffingPair& pair, const PulseWaveform& flux1, const PulseWaveform& flux2);

Eigen::VectorXcd propagate(const DuffingPair& pair, const PulseWaveform& flux1, const PulseWaveform& flux2,
                           const Eigen::VectorXcd& psi0);

/// Superoperator on column-stacked density matrices, idle frames.
Eigen::MatrixXcd pair_superoperator(const DuffingPair& pair, const PulseWaveform& flux1, const PulseWaveform& flux2,
                                    const NoiseParams& noise);

Eigen::MatrixXcd lindblad_propagate(const DuffingPair& pair, const PulseWaveform& flux1,
                                    const PulseWaveform& flux2, const NoiseParams& noise,
                                    const Eigen::MatrixXcd& rho0);

struct SpectroscopyResult {
    std::vector<double> flux;
    std::vector<double> lower_ghz;
    std::vector<double> upper_ghz;
    double two_j_ghz = 0.0;
    double two_j_stderr_ghz = 0.0;
};

/// Two-tone sweep of qubit 2's flux offset with qubit 1 held at flux1_offset:
/// eigenfrequencies of the one-excitation block plus Gaussian noise, then a
/// hyperbola fit with a cubic detuning model. Throws NoCrossing when the
/// minimum separation sits at a sweep edge.
SpectroscopyResult spectroscopy_lines(const DuffingPair& pair, double flux1_offset,
                                      const std::vector<double>& flux2_offsets, double noise_ghz = 0.0,
                                      std::uint64_t seed = 1);

/// Flux offsets putting qubit 1 ge and qubit 2 ef at the interaction
/// frequency (ignoring the exchange shift).
std::array<double, 2> interaction_offsets(const DuffingPair& pair);

struct ChevronMap {
    std::vector<double> durations_ns;
    std::vector<double> amplitudes;
    /// p_g[a][d]: qubit 1 ground population after a square pulse of
    /// durations_ns[d] with qubit 2 offset amplitudes[a].
    std::vector<std::vector<double>> p_g;
};

/// Unipolar square pulses on both qubits starting from |ee>; qubit 1 sits at
/// its interaction offset. Durations are rounded to whole samples.
ChevronMap chevron_scan(const DuffingPair& pair, const std::vector<double>& durations_ns,
                        const std::vector<double>& amplitudes, double dt_ns = 0.5);

/// Net-zero flux pulse pair: each half rises over ramp_ns with a raised
/// cosine, holds, and falls back; the second half mirrors the first with
/// opposite sign after a zero-flux dwell of mid_ns. The dwell sets the phase
/// |gf> collects between the halves. Buffers of zero flux pad both ends.
/// Samples are interval averages of the continuous shape.
struct CzPulse {
    std::array<double, 2> amplitude{0.0, 0.0};
    double half_ns = 31.5;
    double mid_ns = 0.0;
    double ramp_ns = 3.0;
    double buffer_ns = 20.0;
    double dt_ns = 0.5;

    double flux_ns() const { return 2.0 * half_ns + mid_ns; }
    double total_ns() const { return flux_ns() + 2.0 * buffer_ns; }
    std::array<PulseWaveform, 2> waveforms() const;
};

struct CzCalibrationOptions {
    double ramp_ns = 3.0;
    double buffer_ns = 20.0;
    double dt_ns = 0.5;
    /// Objective w_phase dphi^2 + w_leak leakage; at the default threshold
    /// a success implies |dphi| < 1e-3 and leakage < 1e-6.
    double phase_weight = 1.0;
    double leakage_weight = 1.0;
    /// Off by default: with three knobs the swap residual cannot be nulled
    /// together with phase and leakage near the default duration.
    double swap_weight = 0.0;
    int coarse_points = 9;
    /// Per simplex run; up to four runs.
    int max_evaluations = 1500;
    /// CalibrationFailed above this objective.
    double threshold = 1e-6;
};

struct CzCalibration {
    CzPulse pulse;
    GateReport report;
    /// Virtual-Z angles applied after the pulse (minus the dynamic phases).
    std::array<double, 2> virtual_z{0.0, 0.0};
    double objective = 0.0;
    int evaluations = 0;
};

/// Evaluates a pulse noiselessly: conditional phase, leakage, dynamic phases.
GateReport evaluate_cz(const DuffingPair& pair, const CzPulse& pulse);

/// Adds the dissipative average gate error of the virtual-Z corrected pulse.
GateReport evaluate_cz(const DuffingPair& pair, const CzPulse& pulse, const NoiseParams& noise);

CzCalibration calibrate_cz(const DuffingPair& pair, const std::optional<NoiseParams>& noise = std::nullopt,
                           const CzCalibrationOptions& options = {});

/// exp(i 2 pi H0 t) for the zero-flux Hamiltonian in the common frame at the
/// mean idle frequency. Applying its inverse to an idle-frame state gives the
/// common-frame state, whose bare-basis populations are the lab populations.
Eigen::MatrixXcd idle_frame(const DuffingPair& pair, double t_ns);

/// Zero-flux eigenvectors (columns), ordered and signed to follow the bare
/// basis states they overlap most.
Eigen::MatrixXd idle_eigenbasis(const DuffingPair& pair);

/// Computational-subspace block (4x4, order gg, ge, eg, ee) of a pair
/// propagator expressed in the dressed idle basis, after virtual-Z frame
/// updates (phase exp(i vz) on each excited qubit).
Eigen::Matrix4cd computational_block(const DuffingPair& pair, const Eigen::MatrixXcd& u,
                                     const std::array<double, 2>& virtual_z);

struct SingleQubitGate {
    double angle = 0.0;
    double phase = 0.0;
    double duration_ns = 40.0;
    double dt_ns = 0.5;
    /// Rabi frequency per sample, GHz; sin^2 envelope sampled at midpoints
    /// with the discrete area scaled to angle / (2 pi).
    std::vector<double> envelope;
    /// exp(-i angle/2 (cos(phase) X + sin(phase) Y)).
    Eigen::Matrix2cd ideal;
};

SingleQubitGate single_qubit_gate(double angle, double phase, double duration_ns = 40.0, double dt_ns = 0.5);

/// diag(exp(-i theta/2), exp(i theta/2)).
Eigen::Matrix2cd virtual_z(double theta);

/// Drive propagator on one Kerr mode in its idle frame.
Eigen::MatrixXcd single_qubit_propagator(const DuffingMode& mode, const SingleQubitGate& gate);

/// Dissipative version on column-stacked density matrices, dephasing from
/// t2 of the given kind; idle_after_ns of free decay follows the pulse.
Eigen::MatrixXcd single_qubit_superoperator(const DuffingMode& mode, const SingleQubitGate& gate,
                                            const QubitNoise& noise, T2Kind kind = T2Kind::Star,
                                            double idle_after_ns = 0.0);

enum class RelaxometryKind { T1, Ramsey, Echo };

struct RelaxometryResult {
    std::vector<double> times_us;
    /// Excited-state population at each time.
    std::vector<double> population;
    double fitted_us = 0.0;
    double fitted_stderr_us = 0.0;
    /// Ramsey fringe frequency, MHz.
    double fringe_mhz = 0.0;
};

/// Simulated experiment on a three-level mode with ideal instantaneous
/// pulses. Ramsey uses the frame detuning; the echo inserts a pi pulse at
/// the midpoint. Throws FitDivergence if the fit fails.
RelaxometryResult relaxometry(RelaxometryKind kind, const std::vector<double>& times_us, const QubitNoise& noise,
                              double detuning_mhz = 0.0, double anharmonicity_ghz = -0.16);

}  // namespace qtwin
