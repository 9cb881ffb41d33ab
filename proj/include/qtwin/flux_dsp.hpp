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
#include <vector>

#include "qtwin/spectrum.hpp"

namespace qtwin {

/// One exponential settling term of the step response, a * exp(-t / tau).
struct IirTerm {
    double amplitude = 0.0;
    double tau_ns = 1000.0;

    bool operator==(const IirTerm&) const = default;
};

/// Flux-line distortion: FIR taps, then a step response
/// gain * (1 + sum_k a_k exp(-t / tau_k)).
struct TransferFunction {
    double gain = 1.0;
    std::vector<IirTerm> iir;
    std::vector<double> fir{1.0};
    double dt_ns = 0.5;

    void validate() const;
    bool operator==(const TransferFunction&) const = default;

    static TransferFunction identity(double dt_ns = 0.5);
    /// Synthetic ground truth: 3% at 1 us, 1% at 20 us and a 4-tap ripple.
    static TransferFunction default_synthetic(double dt_ns = 0.5);
};

struct PulseWaveform {
    /// Flux in units of the flux quantum.
    std::vector<double> samples;
    double dt_ns = 0.5;
    double t0_ns = 0.0;

    void validate() const;
    double time(std::size_t k) const { return t0_ns + dt_ns * static_cast<double>(k); }
};

struct CryoscopeTrace {
    std::vector<double> times_ns;
    /// Qubit frequency offset from idle, MHz.
    std::vector<double> freq_mhz;
};

/// y[n] = b0 x[n] + b1 x[n-1] + a1 y[n-1].
struct FirstOrderSection {
    double b0 = 1.0;
    double b1 = 0.0;
    double a1 = 0.0;
};

/// Pre-distortion applied before the line: IIR sections in cascade, then FIR.
struct CorrectionFilter {
    std::vector<FirstOrderSection> sections;
    std::vector<double> fir{1.0};
    double dt_ns = 0.5;
};

PulseWaveform apply_transfer(const PulseWaveform& w, const TransferFunction& tf);

PulseWaveform apply_correction(const PulseWaveform& w, const CorrectionFilter& c);

/// Exact digital inverse of the exponential part of the step response. The
/// sum of K terms has a K-th order numerator whose roots become the poles of
/// K first-order sections. Throws UnstableTerm if any a_k <= -1 or a root
/// lies on or outside the unit circle.
CorrectionFilter invert_iir(const std::vector<IirTerm>& terms, double dt_ns);

/// Ridge least squares for taps h with sum(h) = 1/gain that make h * s a unit
/// step over the supplied samples; the ridge pulls toward [1/gain, 0, ...].
/// gain is the final value of the response. Throws IllConditioned.
std::vector<double> design_fir_inverse(const std::vector<double>& step_response, int n_taps, double ridge = 1e-6);

/// Qubit ge frequency versus flux for a symmetric-SQUID-like transmon:
/// (f_max + E_c) sqrt(|cos pi phi| sqrt(1 + asym^2 tan^2 pi phi)) - E_c.
struct FluxMap {
    double f_max = 6.0;
    double ec = 0.16;
    double asym = 0.6;

    double frequency(double phi) const;
    double derivative(double phi) const;
    /// Flux in [0, 1/2] with the given frequency. Throws InvalidArgument when
    /// the frequency lies outside the tunable range.
    double flux_for(double freq) const;

    /// Matches f_max to the dressed ge frequency of the chain at zero flux.
    static FluxMap from_chain(const ChainParams& c);
};

/// Phase accumulated up to each sample boundary, 2 pi dt sum_{n<k} df_n, with
/// df the frequency offset from idle at the idle flux `phi_idle`.
std::vector<double> cryoscope_phases(const PulseWaveform& flux, const FluxMap& map, double phi_idle);

/// Frequency offset from phases at uniformly spaced truncation times: unwrap,
/// central differences, 3-point moving average. Throws UnwrapFailure when
/// adjacent unwrapped steps differ by more than pi.
CryoscopeTrace cryoscope_reconstruct(const std::vector<double>& phases, double dt_ns, double t0_ns = 0.0);

/// Flux offsets for a reconstructed trace by Newton steps on the map
/// linearized around each point.
std::vector<double> cryoscope_flux(const CryoscopeTrace& trace, const FluxMap& map, double phi_idle);

/// Bipolar pulse: half_ns of +amplitude then half_ns of -amplitude.
PulseWaveform net_zero_pulse(double amplitude, double half_ns, double dt_ns);

/// Square pulse of the given length padded with `tail_ns` of zeros.
PulseWaveform square_pulse(double amplitude, double length_ns, double dt_ns, double tail_ns = 0.0);

/// Short-time line response r (FIR taps) that best explains a cryoscope
/// trace taken with nominal waveform `played` (any slow correction already
/// cancelled): Gauss-Newton on trace(r * played) - trace, with the
/// reconstruction run forward so its smoothing is modeled, not inverted.
std::vector<double> fit_short_response(const CryoscopeTrace& measured, const PulseWaveform& played,
                                       const FluxMap& map, double phi_idle, int n_taps);

struct ExponentialFit {
    double gain = 1.0;
    std::vector<IirTerm> terms;
    double rms = 0.0;
};

/// Fits gain (1 + sum a_k exp(-t/tau_k)) to a step response from t_start_ns on:
/// simplex over log tau with the amplitudes solved linearly at each step.
ExponentialFit fit_exponentials(const std::vector<double>& step_response, double dt_ns, double t_start_ns,
                                int n_terms);

struct PredistortOptions {
    /// Depth of the verification pulse below the idle frequency, GHz.
    double detuning_ghz = 0.2;
    double pulse_ns = 100.0;
    double long_step_ns = 100000.0;
    double fit_start_ns = 100.0;
    int n_terms = 2;
    double cryoscope_ns = 120.0;
    /// Length of the short response estimated from the cryoscope trace.
    int response_taps = 8;
    int fir_taps = 24;
    double ridge = 1e-6;
    /// Gaussian noise added to each measured cryoscope phase, radians.
    double phase_noise_rad = 0.0;
    std::uint64_t seed = 1;
};

struct PredistortResult {
    CorrectionFilter correction;
    ExponentialFit long_fit;
    CryoscopeTrace short_trace;
    /// Pulse flux that detunes by detuning_ghz in the static map.
    double pulse_flux = 0.0;
};

/// Closed loop against a known line: measure a long step, fit and invert the
/// exponentials, then run the cryoscope on the IIR-corrected short response
/// and design the FIR stage from it.
PredistortResult predistort(const TransferFunction& line, const FluxMap& map, double phi_idle,
                            const PredistortOptions& options = {});

struct VerifyReport {
    /// Cryoscope-reconstructed frequency of the played pulse minus that of an
    /// ideal pulse through the same reconstruction, MHz, while the pulse is on.
    std::vector<double> deviation_mhz;
    std::vector<double> times_ns;
    double max_abs_mhz = 0.0;
    /// Sample-level deviation of the true qubit frequency from its target.
    /// Structure finer than the reconstruction resolves shows up only here.
    std::vector<double> true_deviation_mhz;
    double max_abs_true_mhz = 0.0;
    bool within_budget = false;
};

/// Plays a square pulse through correction and line and compares the qubit
/// frequency to its target while the pulse is on. The budget applies to the
/// true sample-level deviation; the cryoscope view is reported alongside.
VerifyReport verify_pulse(const TransferFunction& line, const CorrectionFilter* correction, const FluxMap& map,
                          double phi_idle, double pulse_flux, double pulse_ns, double budget_mhz = 1.0);

}  // namespace qtwin
