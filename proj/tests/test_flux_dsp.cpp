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

#include "qtwin/flux_dsp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qtwin/error.hpp"
#include "qtwin/rng.hpp"

namespace qtwin {
namespace {

constexpr double kDt = 0.5;

// Device A qubit 2 near its sweet spot.
FluxMap device_a_q2() { return FluxMap{5.662, 0.154, 0.70}; }

PulseWaveform random_waveform(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed, 0);
    PulseWaveform w;
    w.dt_ns = kDt;
    for (std::size_t k = 0; k < n; ++k) w.samples.push_back(rng.normal());
    return w;
}

void expect_error(ErrorKind kind, const std::function<void()>& f) {
    try {
        f();
        FAIL() << "expected " << error_kind_name(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind);
    }
}

// Exact pre-distortion for a line whose FIR part is known: invert the
// exponentials, then a long FIR inverse of the tap step response.
CorrectionFilter exact_correction(const TransferFunction& tf) {
    auto c = invert_iir(tf.iir, tf.dt_ns);
    std::vector<double> step(200, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < step.size(); ++k) {
        if (k < tf.fir.size()) acc += tf.fir[k];
        step[k] = acc * tf.gain;
    }
    c.fir = design_fir_inverse(step, 48, 1e-12);
    return c;
}

std::vector<TransferFunction> default_suite() {
    std::vector<TransferFunction> out;
    out.push_back(TransferFunction::identity());
    out.push_back(TransferFunction::default_synthetic());
    TransferFunction one = TransferFunction::identity();
    one.iir = {{0.03, 1000.0}};
    out.push_back(one);
    TransferFunction three = TransferFunction::identity();
    three.iir = {{0.02, 200.0}, {0.015, 2000.0}, {0.01, 20000.0}};
    three.gain = 0.97;
    out.push_back(three);
    TransferFunction negative = TransferFunction::default_synthetic();
    negative.iir = {{-0.02, 500.0}, {0.01, 5000.0}};
    out.push_back(negative);
    return out;
}

}  // namespace

TEST(apply_transfer, identity_is_exact) {
    const auto w = random_waveform(1, 300);
    EXPECT_EQ(apply_transfer(w, TransferFunction::identity()).samples, w.samples);
}

TEST(apply_transfer, single_term_step_response) {
    TransferFunction tf = TransferFunction::identity();
    tf.gain = 0.8;
    tf.iir = {{0.03, 1000.0}};
    const auto y = apply_transfer(square_pulse(1.0, 5000.0, kDt), tf);
    EXPECT_NEAR(y.samples[0], 1.03 * 0.8, 1e-15);
    for (std::size_t k = 0; k < y.samples.size(); k += 97) {
        const double t = kDt * static_cast<double>(k);
        EXPECT_NEAR(y.samples[k], 0.8 * (1.0 + 0.03 * std::exp(-t / 1000.0)), 1e-12);
    }
}

TEST(apply_transfer, square_pulse_tail_is_superposition) {
    TransferFunction tf = TransferFunction::identity();
    tf.iir = {{0.02, 300.0}, {0.02, 3000.0}};
    const double length = 100.0;
    const auto y = apply_transfer(square_pulse(1.0, length, kDt, 2000.0), tf);
    const auto on = static_cast<std::size_t>(length / kDt);
    for (std::size_t k = on; k < y.samples.size(); ++k) {
        const double t = kDt * static_cast<double>(k);
        double want = 0.0;
        for (const auto& term : tf.iir) {
            want += term.amplitude * (std::exp(-t / term.tau_ns) - std::exp(-(t - length) / term.tau_ns));
        }
        EXPECT_NEAR(y.samples[k], want, 1e-6);
    }
}

TEST(apply_transfer, linear) {
    const auto tf = TransferFunction::default_synthetic();
    const auto w1 = random_waveform(2, 500);
    const auto w2 = random_waveform(3, 500);
    PulseWaveform mix = w1;
    for (std::size_t k = 0; k < mix.samples.size(); ++k) mix.samples[k] = 0.7 * w1.samples[k] - 1.3 * w2.samples[k];
    const auto y1 = apply_transfer(w1, tf);
    const auto y2 = apply_transfer(w2, tf);
    const auto ym = apply_transfer(mix, tf);
    for (std::size_t k = 0; k < ym.samples.size(); ++k) {
        EXPECT_NEAR(ym.samples[k], 0.7 * y1.samples[k] - 1.3 * y2.samples[k], 1e-12);
    }
}

TEST(apply_transfer, causal) {
    const auto tf = TransferFunction::default_synthetic();
    auto w = random_waveform(4, 200);
    const auto before = apply_transfer(w, tf);
    w.samples[150] += 1.0;
    const auto after = apply_transfer(w, tf);
    for (std::size_t k = 0; k < 150; ++k) EXPECT_EQ(before.samples[k], after.samples[k]);
    EXPECT_NE(before.samples[150], after.samples[150]);
}

TEST(apply_transfer, sample_rate_mismatch) {
    auto w = random_waveform(5, 10);
    w.dt_ns = 0.25;
    expect_error(ErrorKind::SampleRateMismatch, [&] { apply_transfer(w, TransferFunction::identity()); });
}

TEST(invert_iir, zero_amplitude_is_identity) {
    const auto c = invert_iir({{0.0, 1000.0}}, kDt);
    EXPECT_TRUE(c.sections.empty());
    const auto w = random_waveform(6, 100);
    EXPECT_EQ(apply_correction(w, c).samples, w.samples);
}

TEST(invert_iir, single_term_flat_over_100us) {
    TransferFunction tf = TransferFunction::identity();
    tf.iir = {{0.03, 1000.0}};
    const auto corrected = apply_transfer(apply_correction(square_pulse(1.0, 100000.0, kDt), invert_iir(tf.iir, kDt)), tf);
    double worst = 0.0;
    for (std::size_t k = 1; k < corrected.samples.size(); ++k) worst = std::max(worst, std::abs(corrected.samples[k] - 1.0));
    EXPECT_LT(worst, 1e-4);
}

TEST(invert_iir, stacked_terms_flat_from_100ns_to_100us) {
    TransferFunction tf = TransferFunction::identity();
    tf.iir = {{0.03, 200.0}, {0.02, 2000.0}, {0.01, 20000.0}};
    const auto c = invert_iir(tf.iir, kDt);
    EXPECT_EQ(c.sections.size(), 3u);
    const auto corrected = apply_transfer(apply_correction(square_pulse(1.0, 100000.0, kDt), c), tf);
    double worst = 0.0;
    for (std::size_t k = 1; k < corrected.samples.size(); ++k) worst = std::max(worst, std::abs(corrected.samples[k] - 1.0));
    EXPECT_LT(worst, 1e-4);
}

TEST(invert_iir, unstable_term) {
    expect_error(ErrorKind::UnstableTerm, [] { invert_iir({{-1.0, 100.0}}, kDt); });
    expect_error(ErrorKind::UnstableTerm, [] { invert_iir({{-1.5, 100.0}}, kDt); });
}

TEST(round_trip, default_suite_after_first_sample) {
    for (const auto& tf : default_suite()) {
        const auto w = random_waveform(7, 2000);
        const auto back = apply_transfer(apply_correction(w, exact_correction(tf)), tf);
        double peak = 0.0;
        for (double x : w.samples) peak = std::max(peak, std::abs(x));
        for (std::size_t k = 1; k < w.samples.size(); ++k) {
            ASSERT_NEAR(back.samples[k], w.samples[k], 1e-3 * peak) << k;
        }
    }
}

TEST(design_fir_inverse, flat_response_gives_unit_tap) {
    const auto h = design_fir_inverse(std::vector<double>(50, 1.0), 8, 1e-6);
    EXPECT_NEAR(h[0], 1.0, 1e-12);
    for (std::size_t k = 1; k < h.size(); ++k) EXPECT_NEAR(h[k], 0.0, 1e-12);
}

TEST(design_fir_inverse, ripple_reduced_twentyfold) {
    // a two-sample overshoot on a line with gain 0.95
    std::vector<double> s(80, 0.95);
    s[0] = 1.10;
    s[1] = 0.90;
    const auto h = design_fir_inverse(s, 16, 1e-8);
    EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0 / 0.95, 1e-6);
    double before = 0.0;
    double after = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        double y = 0.0;
        for (std::size_t j = 0; j < h.size() && j <= n; ++j) y += h[j] * s[n - j];
        before = std::max(before, std::abs(s[n] / 0.95 - 1.0));
        after = std::max(after, std::abs(y - 1.0));
    }
    EXPECT_LT(after * 20.0, before);
}

TEST(design_fir_inverse, ill_conditioned) {
    expect_error(ErrorKind::IllConditioned, [] { design_fir_inverse(std::vector<double>(20, 0.0), 4, 1e-6); });
    EXPECT_THROW(design_fir_inverse(std::vector<double>(3, 1.0), 4, 1e-6), Error);
}

TEST(flux_map, derivative_and_inverse) {
    const auto m = device_a_q2();
    EXPECT_DOUBLE_EQ(m.frequency(0.0), 5.662);
    for (double phi : {0.05, 0.13, 0.29, 0.41, -0.2}) {
        const double h = 1e-6;
        EXPECT_NEAR(m.derivative(phi), (m.frequency(phi + h) - m.frequency(phi - h)) / (2 * h), 1e-5);
        if (phi > 0) EXPECT_NEAR(m.flux_for(m.frequency(phi)), phi, 1e-12);
    }
    EXPECT_THROW(m.flux_for(6.0), Error);
}

TEST(flux_map, from_chain_matches_dressed_maximum) {
    ChainParams c;
    c.transmon = {27.79, 0.154, 0.70, 20, 5};
    c.omega_r_bare = 7.022;
    c.omega_p = 7.107;
    c.g_qr = 0.117;
    c.j_rp = 0.0177;
    const auto m = FluxMap::from_chain(c);
    EXPECT_NEAR(m.f_max, dressed_qubit_frequency(c, FluxPoint{0.0}), 1e-12);
    // the analytic map tracks the dressed frequency to within a few MHz
    EXPECT_NEAR(m.frequency(0.25), dressed_qubit_frequency(c, FluxPoint{0.25}), 0.01);
}

TEST(cryoscope, zero_pulse_gives_zero_trace) {
    PulseWaveform w;
    w.dt_ns = kDt;
    w.samples.assign(100, 0.0);
    const auto t = cryoscope_reconstruct(cryoscope_phases(w, device_a_q2(), 0.0), kDt);
    for (double f : t.freq_mhz) EXPECT_EQ(f, 0.0);
    for (std::size_t k = 1; k < t.times_ns.size(); ++k) EXPECT_GT(t.times_ns[k], t.times_ns[k - 1]);
}

TEST(cryoscope, square_pulse_plateau) {
    const auto m = device_a_q2();
    const double flux = m.flux_for(m.frequency(0.0) - 0.2);
    auto w = square_pulse(flux, 100.0, kDt, 20.0);
    w.samples.insert(w.samples.begin(), 20, 0.0);
    const auto t = cryoscope_reconstruct(cryoscope_phases(w, m, 0.0), kDt);
    // pulse occupies samples 20..219, i.e. trace points 21..220
    for (std::size_t k = 24; k < 218; ++k) EXPECT_NEAR(t.freq_mhz[k], -200.0, 2.0) << k;
    for (std::size_t k = 0; k < 19; ++k) EXPECT_EQ(t.freq_mhz[k], 0.0);
}

TEST(cryoscope, distorted_pulse_matches_forward_model) {
    const auto m = device_a_q2();
    const double flux = m.flux_for(m.frequency(0.0) - 0.2);
    auto w = square_pulse(flux, 100.0, kDt, 20.0);
    w.samples.insert(w.samples.begin(), 20, 0.0);
    const auto y = apply_transfer(w, TransferFunction::default_synthetic());
    const auto t = cryoscope_reconstruct(cryoscope_phases(y, m, 0.0), kDt);
    double ss = 0.0;
    int n = 0;
    for (std::size_t k = 26; k < 216; ++k) {
        // sample k spans trace points k and k + 1
        const double truth = 1e3 * (m.frequency(y.samples[k]) - m.frequency(0.0));
        ss += std::pow(0.5 * (t.freq_mhz[k] + t.freq_mhz[k + 1]) - truth, 2);
        ++n;
    }
    EXPECT_LT(std::sqrt(ss / n), 0.5);
}

TEST(cryoscope, flux_inversion_round_trip) {
    const auto m = device_a_q2();
    const double flux = m.flux_for(m.frequency(0.0) - 0.15);
    auto w = square_pulse(flux, 50.0, kDt);
    w.samples.insert(w.samples.begin(), 10, 0.0);
    const auto t = cryoscope_reconstruct(cryoscope_phases(w, m, 0.0), kDt);
    const auto phi = cryoscope_flux(t, m, 0.0);
    for (std::size_t k = 14; k < 100; ++k) EXPECT_NEAR(phi[k], flux, 1e-9);
}

TEST(cryoscope, unwrap_failure) {
    expect_error(ErrorKind::UnwrapFailure, [] { cryoscope_reconstruct({0.0, 0.0, 2.0, 0.0}, kDt); });
}

TEST(fit_short_response, recovers_ripple_through_smoothing) {
    const auto m = device_a_q2();
    TransferFunction line = TransferFunction::default_synthetic();
    line.iir.clear();
    const double flux = m.flux_for(m.frequency(0.0) - 0.2);
    auto w = square_pulse(flux, 60.0, kDt);
    w.samples.insert(w.samples.begin(), 10, 0.0);
    const auto t = cryoscope_reconstruct(cryoscope_phases(apply_transfer(w, line), m, 0.0), kDt);
    const auto r = fit_short_response(t, w, m, 0.0, 8);
    for (std::size_t k = 0; k < r.size(); ++k) {
        EXPECT_NEAR(r[k], k < line.fir.size() ? line.fir[k] : 0.0, 1e-6);
    }
}

TEST(fit_exponentials, recovers_two_terms) {
    TransferFunction tf = TransferFunction::identity();
    tf.gain = 1.02;
    tf.iir = {{0.03, 1000.0}, {0.01, 20000.0}};
    const auto s = apply_transfer(square_pulse(1.0, 100000.0, kDt), tf);
    const auto fit = fit_exponentials(s.samples, kDt, 100.0, 2);
    EXPECT_NEAR(fit.gain, 1.02, 1e-9);
    ASSERT_EQ(fit.terms.size(), 2u);
    EXPECT_NEAR(fit.terms[0].amplitude, 0.03, 1e-7);
    EXPECT_NEAR(fit.terms[0].tau_ns, 1000.0, 1e-3);
    EXPECT_NEAR(fit.terms[1].amplitude, 0.01, 1e-7);
    EXPECT_NEAR(fit.terms[1].tau_ns, 20000.0, 1e-2);
}

TEST(net_zero_pulse, construction) {
    const auto p = net_zero_pulse(0.25, 31.5, kDt);
    ASSERT_EQ(p.samples.size(), 126u);
    for (std::size_t k = 0; k < 63; ++k) EXPECT_EQ(p.samples[k], 0.25);
    for (std::size_t k = 63; k < 126; ++k) EXPECT_EQ(p.samples[k], -0.25);
    EXPECT_THROW(net_zero_pulse(0.1, 0.5, kDt), Error);
}

TEST(net_zero_pulse, sum_is_exactly_zero) {
    CounterRng rng(9, 0);
    for (int trial = 0; trial < 500; ++trial) {
        const double amp = (rng.uniform() - 0.5) * std::pow(10.0, 4.0 * rng.uniform() - 3.0);
        const double half = 1.0 + 200.0 * rng.uniform();
        const double dt = 0.1 + rng.uniform();
        const auto p = net_zero_pulse(amp, half, dt);
        double forward = 0.0;
        for (double x : p.samples) forward += x;
        double backward = 0.0;
        for (auto it = p.samples.rbegin(); it != p.samples.rend(); ++it) backward += *it;
        ASSERT_EQ(forward, 0.0);
        ASSERT_EQ(backward, 0.0);
        ASSERT_NEAR(p.samples[0], amp, 1e-10 * std::abs(amp));
    }
}

TEST(predistort, closed_loop_within_1mhz) {
    const auto m = device_a_q2();
    const auto line = TransferFunction::default_synthetic();
    const auto res = predistort(line, m, 0.0);
    const auto with = verify_pulse(line, &res.correction, m, 0.0, res.pulse_flux, 100.0);
    const auto without = verify_pulse(line, nullptr, m, 0.0, res.pulse_flux, 100.0);
    EXPECT_TRUE(with.within_budget);
    EXPECT_LT(with.max_abs_true_mhz, 1.0);
    EXPECT_LT(with.max_abs_mhz, 1.0);
    EXPECT_GT(without.max_abs_true_mhz, 3.0);
    EXPECT_FALSE(without.within_budget);
    EXPECT_NEAR(m.frequency(res.pulse_flux), m.frequency(0.0) - 0.2, 1e-9);
}

TEST(predistort, tolerates_phase_noise) {
    const auto m = device_a_q2();
    const auto line = TransferFunction::default_synthetic();
    PredistortOptions o;
    o.phase_noise_rad = 3e-4;
    o.seed = 3;
    const auto res = predistort(line, m, 0.0, o);
    const auto with = verify_pulse(line, &res.correction, m, 0.0, res.pulse_flux, 100.0);
    EXPECT_LT(with.max_abs_true_mhz, 1.0);
}

}  // namespace qtwin
