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

#include "qtwin/param_fit.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qtwin/error.hpp"
#include "qtwin/rng.hpp"

namespace qtwin {
namespace {

ChainParams reference_chain() {
    ChainParams c;
    c.transmon = {25.44, 0.154, 0.35, 20, 5};
    c.omega_r_bare = 6.636;
    c.omega_p = 6.699;
    c.g_qr = 0.108;
    c.j_rp = 0.0246;
    return c;
}

void expect_relative(double got, double want, double rel, const char* what) {
    EXPECT_NEAR(got, want, rel * std::abs(want)) << what;
}

// One fit shared by the tests that only inspect its report.
const FitReport& reference_fit() {
    static const FitReport report = fit_chain(synthesize_observations(reference_chain()));
    return report;
}

}  // namespace

TEST(seed_guess, inverts_asymptotic_formula) {
    const auto obs = SpectralObservations::extremal(5.415, 4.421, -0.159, std::nullopt, 6.636, 6.699, 0.0246);
    const auto s = seed_guess(obs);
    EXPECT_DOUBLE_EQ(s.transmon.ec, 0.159);
    EXPECT_NEAR(s.transmon.ej_max, 24.4, 0.05);
    // forward check of the same asymptotic relation at both extrema
    const double ec = s.transmon.ec;
    EXPECT_NEAR(std::sqrt(8.0 * s.transmon.ej_max * ec) - ec, 5.415, 1e-9);
    EXPECT_NEAR(std::sqrt(8.0 * s.transmon.ej_max * s.transmon.asym * ec) - ec, 4.421, 1e-9);
    EXPECT_DOUBLE_EQ(s.g_qr, 0.1);
}

TEST(seed_guess, default_charging_energy_without_anharmonicity) {
    const auto obs = SpectralObservations::extremal(5.008, 3.585, std::nullopt, std::nullopt, 7.226, 7.3, 0.02);
    EXPECT_DOUBLE_EQ(seed_guess(obs).transmon.ec, 0.160);
}

TEST(seed_guess, qubit2_start_near_extracted) {
    const auto obs = SpectralObservations::extremal(5.662, 4.736, -0.158, std::nullopt, 7.022, 7.107, 0.0177);
    expect_relative(seed_guess(obs).transmon.ej_max, 27.79, 0.10, "E_J start");
}

TEST(fit_chain, synthetic_round_trip) {
    const auto& r = reference_fit();
    const auto truth = reference_chain();
    EXPECT_TRUE(r.converged);
    expect_relative(r.fitted.transmon.ej_max, truth.transmon.ej_max, 0.005, "ej");
    expect_relative(r.fitted.transmon.ec, truth.transmon.ec, 0.005, "ec");
    expect_relative(r.fitted.transmon.asym, truth.transmon.asym, 0.005, "asym");
    expect_relative(r.fitted.g_qr, truth.g_qr, 0.005, "g");
    EXPECT_TRUE(r.ec_constrained);
    EXPECT_TRUE(r.g_constrained);
}

TEST(fit_chain, objective_history_non_increasing) {
    const auto& h = reference_fit().objective_history;
    ASSERT_GT(h.size(), 2u);
    for (std::size_t k = 1; k < h.size(); ++k) {
        EXPECT_LE(h[k], h[k - 1]);
    }
}

TEST(fit_chain, residuals_match_fresh_evaluation) {
    const auto& r = reference_fit();
    auto obs = synthesize_observations(reference_chain());
    obs.observations.clear();
    for (const auto& res : r.residuals) {
        obs.observations.push_back({res.kind, res.phi, res.observed, 1.0});
    }
    const auto fresh = model_values(obs, r.fitted);
    ASSERT_EQ(fresh.size(), r.residuals.size());
    for (std::size_t k = 0; k < fresh.size(); ++k) {
        EXPECT_NEAR(fresh[k], r.residuals[k].model, 1e-9);
        EXPECT_NEAR(r.residuals[k].model - r.residuals[k].observed, r.residuals[k].residual, 1e-15);
    }
    EXPECT_LT(r.max_abs_residual(), 1e-6);
}

TEST(fit_chain, permutation_invariant) {
    auto obs = synthesize_observations(reference_chain());
    std::reverse(obs.observations.begin(), obs.observations.end());
    const auto r = fit_chain(obs);
    const auto& ref = reference_fit();
    EXPECT_EQ(r.fitted.transmon.ej_max, ref.fitted.transmon.ej_max);
    EXPECT_EQ(r.fitted.transmon.ec, ref.fitted.transmon.ec);
    EXPECT_EQ(r.fitted.transmon.asym, ref.fitted.transmon.asym);
    EXPECT_EQ(r.fitted.g_qr, ref.fitted.g_qr);
}

TEST(fit_chain, table_qubit1_measured_rows) {
    // Table rows for qubit 1. The dressed resonator line at phi = 1/2 is not
    // tabulated, so it comes from the forward model at the extracted values.
    ChainParams extracted = reference_chain();
    extracted.transmon.asym = 0.67;
    const auto resonator = synthesize_observations(extracted).find(ObservableKind::ResonatorG, 0.5);
    const auto obs = SpectralObservations::extremal(5.415, 4.421, -0.159, resonator, 6.636, 6.699, 0.0246);
    const auto r = fit_chain(obs);
    expect_relative(r.fitted.transmon.ej_max, 25.44, 0.03, "ej");
    expect_relative(r.fitted.transmon.ec, 0.154, 0.03, "ec");
    expect_relative(r.fitted.g_qr, 0.108, 0.03, "g");
}

TEST(fit_chain, uncoupled_limit) {
    ChainParams c = reference_chain();
    c.g_qr = 0.0;
    c.j_rp = 0.0;
    c.omega_r_bare = 30.0;
    c.omega_p = 31.0;
    auto obs = synthesize_observations(c);
    obs.observations.erase(std::remove_if(obs.observations.begin(), obs.observations.end(),
                                          [](const Observation& o) { return o.kind == ObservableKind::ResonatorG; }),
                           obs.observations.end());
    FitOptions options;
    options.fixed_g_qr = 0.0;
    const auto r = fit_chain(obs, options);
    EXPECT_TRUE(r.converged);
    expect_relative(r.fitted.transmon.ej_max, 25.44, 0.005, "ej");
    expect_relative(r.fitted.transmon.ec, 0.154, 0.005, "ec");
    EXPECT_EQ(r.fitted.g_qr, 0.0);
    const double ec = r.fitted.transmon.ec;
    const double ge = obs.find(ObservableKind::QubitGe, 0.0).value();
    EXPECT_NEAR(std::sqrt(8.0 * r.fitted.transmon.ej_max * ec) - ec, ge, 0.010);
}

TEST(fit_chain, missing_anharmonicity_leaves_ec_unconstrained) {
    const auto obs = SpectralObservations::extremal(5.008, 3.585, std::nullopt, std::nullopt, 7.226, 7.3, 0.02);
    FitOptions options;
    options.restarts = 1;
    const auto r = fit_chain(obs, options);
    EXPECT_FALSE(r.ec_constrained);
    EXPECT_FALSE(r.g_constrained);
    EXPECT_DOUBLE_EQ(r.fitted.transmon.ec, 0.160);
    EXPECT_DOUBLE_EQ(r.fitted.g_qr, 0.1);
    EXPECT_TRUE(r.converged);
}

TEST(fit_chain, degenerate_observations) {
    auto obs = SpectralObservations::extremal(5.415, 4.421, -0.159, std::nullopt, 6.636, 6.699, 0.0246);
    obs.observations[2].weight = 0.0;
    try {
        fit_chain(obs);
        FAIL() << "expected DegenerateObservations";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateObservations);
    }
}

TEST(fit_chain, budget_exhaustion_returns_best_point) {
    FitOptions options;
    options.max_iter = 20;
    options.restarts = 1;
    const auto r = fit_chain(synthesize_observations(reference_chain()), options);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evaluations, 20 + 5);
    EXPECT_TRUE(std::isfinite(r.objective));
}

TEST(fit_chain, invalid_input_rejected) {
    auto obs = SpectralObservations::extremal(4.0, 5.0, -0.159, std::nullopt, 6.636, 6.699, 0.0246);
    EXPECT_THROW(fit_chain(obs), Error);
    obs = SpectralObservations::extremal(5.0, 4.0, 0.159, std::nullopt, 6.636, 6.699, 0.0246);
    EXPECT_THROW(fit_chain(obs), Error);
    FitOptions bad;
    bad.tol = 0.0;
    EXPECT_THROW(fit_chain(synthesize_observations(reference_chain()), bad), Error);
}

// Round trip over random draws within +-30% of the table values. Draws that
// put the qubit within 0.5 GHz of the resonator leave the dispersive regime
// and have no unique labeling, so they are redrawn. One restart per fit keeps
// the runtime down; the start is already close.
TEST(fit_chain, property_round_trip_random_draws) {
    CounterRng rng(20260101, 0);
    auto spread = [&](double x) { return x * (0.7 + 0.6 * rng.uniform()); };
    int done = 0;
    while (done < 20) {
        ChainParams c = reference_chain();
        c.transmon.ej_max = spread(25.44);
        c.transmon.ec = spread(0.154);
        c.transmon.asym = spread(0.67);
        c.g_qr = spread(0.108);
        if (dressed_qubit_frequency(c, FluxPoint{0.0}) > c.omega_r_bare - 0.5) {
            continue;
        }
        FitOptions options;
        options.restarts = 1;
        options.seed = static_cast<std::uint64_t>(done);
        const auto r = fit_chain(synthesize_observations(c), options);
        SCOPED_TRACE(done);
        expect_relative(r.fitted.transmon.ej_max, c.transmon.ej_max, 0.005, "ej");
        expect_relative(r.fitted.transmon.ec, c.transmon.ec, 0.005, "ec");
        expect_relative(r.fitted.transmon.asym, c.transmon.asym, 0.005, "asym");
        expect_relative(r.fitted.g_qr, c.g_qr, 0.005, "g");
        ++done;
    }
}

}  // namespace qtwin
