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


#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "commands.hpp"
#include "qtwin/error.hpp"
#include "svg.hpp"

namespace qpu_twin {

namespace {

// First local minimum after the peak of the highest-contrast column; none
// when no column swaps appreciably.
std::optional<double> recovery_time(const qtwin::ChevronMap& m, std::size_t& column) {
    column = 0;
    double best = -1.0;
    for (std::size_t a = 0; a < m.p_g.size(); ++a) {
        const double peak = *std::max_element(m.p_g[a].begin(), m.p_g[a].end());
        if (peak > best) {
            best = peak;
            column = a;
        }
    }
    if (best < 0.5) {
        return std::nullopt;
    }
    const auto& c = m.p_g[column];
    const auto peak = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    for (std::size_t d = peak + 1; d + 1 < c.size(); ++d) {
        if (c[d] <= c[d - 1] && c[d] <= c[d + 1]) {
            return m.durations_ns[d];
        }
    }
    return std::nullopt;
}

std::vector<double> grid(double center, double half, int n) {
    std::vector<double> out;
    for (int k = 0; k < n; ++k) {
        out.push_back(n == 1 ? center : center - half + 2.0 * half * k / (n - 1));
    }
    return out;
}

}  // namespace

json cz_to_json(const qtwin::CzCalibration& cal) {
    const auto& p = cal.pulse;
    const auto& r = cal.report;
    json report{{"conditional_phase_rad", r.conditional_phase},
                {"phase_error_rad", std::remainder(r.conditional_phase - std::numbers::pi, 2.0 * std::numbers::pi)},
                {"leakage", r.leakage},
                {"swap", r.swap},
                {"dynamic_phase_rad", r.dynamic_phase},
                {"total_ns", r.total_ns}};
    if (r.gate_error) {
        report["gate_error"] = *r.gate_error;
    }
    return {{"pulse", {{"amplitude", p.amplitude},
                       {"half_ns", p.half_ns},
                       {"mid_ns", p.mid_ns},
                       {"ramp_ns", p.ramp_ns},
                       {"buffer_ns", p.buffer_ns},
                       {"dt_ns", p.dt_ns}}},
            {"virtual_z_rad", cal.virtual_z},
            {"objective", cal.objective},
            {"evaluations", cal.evaluations},
            {"report", report}};
}

qtwin::CzCalibration cz_from_json(const json& j) {
    try {
        qtwin::CzCalibration cal;
        const auto& p = j.at("pulse");
        cal.pulse.amplitude = p.at("amplitude").get<std::array<double, 2>>();
        cal.pulse.half_ns = p.at("half_ns").get<double>();
        cal.pulse.mid_ns = p.at("mid_ns").get<double>();
        cal.pulse.ramp_ns = p.at("ramp_ns").get<double>();
        cal.pulse.buffer_ns = p.at("buffer_ns").get<double>();
        cal.pulse.dt_ns = p.at("dt_ns").get<double>();
        cal.virtual_z = j.at("virtual_z_rad").get<std::array<double, 2>>();
        cal.objective = j.at("objective").get<double>();
        cal.evaluations = j.at("evaluations").get<int>();
        const auto& r = j.at("report");
        cal.report.conditional_phase = r.at("conditional_phase_rad").get<double>();
        cal.report.leakage = r.at("leakage").get<double>();
        cal.report.swap = r.at("swap").get<double>();
        cal.report.dynamic_phase = r.at("dynamic_phase_rad").get<std::array<double, 2>>();
        cal.report.total_ns = r.at("total_ns").get<double>();
        if (r.contains("gate_error")) {
            cal.report.gate_error = r.at("gate_error").get<double>();
        }
        return cal;
    } catch (const json::exception& e) {
        throw qtwin::Error(qtwin::ErrorKind::Config, std::string("pulse file: ") + e.what());
    }
}

int cmd_gate(Context& ctx, const GateArgs& args) {
    if (args.pair < 1) {
        throw qtwin::Error(qtwin::ErrorKind::Config, "--pair counts couplers from 1");
    }
    const auto coupler = static_cast<std::size_t>(args.pair - 1);
    const auto pair = ctx.device.pair(coupler);

    if (args.sub == "spectroscopy") {
        const double a1 = pair.q[0].offset_for(pair.interaction_ghz);
        const double res = pair.q[1].offset_for(pair.interaction_ghz);
        const auto r = qtwin::spectroscopy_lines(pair, a1, grid(res, args.span, args.points), 1e-3 * args.noise_mhz,
                                                 ctx.seed);
        Table t;
        t.columns = {"flux2_offset", "lower_ghz", "upper_ghz"};
        Series lo{"lower branch", {}, {}, true}, hi{"upper branch", {}, {}, true};
        for (std::size_t k = 0; k < r.flux.size(); ++k) {
            t.add({r.flux[k], r.lower_ghz[k], r.upper_ghz[k]});
            lo.x.push_back(r.flux[k]);
            lo.y.push_back(r.lower_ghz[k]);
            hi.x.push_back(r.flux[k]);
            hi.y.push_back(r.upper_ghz[k]);
        }
        ctx.write_table("spectroscopy", t);
        ctx.write_json("spectroscopy.json", {{"pair", args.pair},
                                             {"flux1_offset", a1},
                                             {"noise_mhz", args.noise_mhz},
                                             {"two_j_mhz", 1e3 * r.two_j_ghz},
                                             {"two_j_stderr_mhz", 1e3 * r.two_j_stderr_ghz}});
        ctx.write_svg("spectroscopy.svg", line_plot({"Single-excitation branches", "qubit 2 flux offset",
                                                     "frequency (GHz)"},
                                                    {lo, hi}));
        std::printf("2J/2pi = %.3f +- %.3f MHz\n", 1e3 * r.two_j_ghz, 1e3 * r.two_j_stderr_ghz);
        return kOk;
    }

    if (args.sub == "chevron") {
        constexpr double kDt = 0.5;
        std::vector<double> durations;
        for (int k = 0; k * kDt <= args.max_ns + 1e-9; ++k) {
            durations.push_back(k * kDt);
        }
        const auto amplitudes =
            args.amplitudes.empty() ? grid(qtwin::interaction_offsets(pair)[1], 0.002, 21) : args.amplitudes;
        const auto m = qtwin::chevron_scan(pair, durations, amplitudes, kDt);
        Table t;
        t.columns = {"amplitude", "duration_ns", "p_g"};
        for (std::size_t a = 0; a < m.amplitudes.size(); ++a) {
            for (std::size_t d = 0; d < m.durations_ns.size(); ++d) {
                t.add({m.amplitudes[a], m.durations_ns[d], m.p_g[a][d]});
            }
        }
        std::size_t column = 0;
        const auto rec = recovery_time(m, column);
        const double expected = 1.0 / (2.0 * std::numbers::sqrt2 * pair.j_qq);
        json out{{"pair", args.pair},
                 {"swap_limit_ns", expected},
                 {"best_amplitude", m.amplitudes[column]},
                 {"max_p_g", *std::max_element(m.p_g[column].begin(), m.p_g[column].end())}};
        out["recovery_ns"] = rec ? json(*rec) : json(nullptr);
        ctx.write_table("chevron", t);
        ctx.write_json("chevron.json", out);
        ctx.write_svg("chevron.svg", heatmap({"Qubit 1 ground population after |ee> pulses", "duration (ns)",
                                              "qubit 2 flux amplitude"},
                                             m.durations_ns, m.amplitudes, m.p_g, 0.0, 1.0));
        if (rec) {
            std::printf("recovery at %.1f ns (swap limit %.1f ns)\n", *rec, expected);
        } else {
            std::printf("no recovery inside the scanned window\n");
        }
        return kOk;
    }

    if (args.sub != "calibrate") {
        throw qtwin::Error(qtwin::ErrorKind::InvalidArgument, "unknown gate subcommand " + args.sub);
    }
    auto cal = qtwin::calibrate_cz(pair);
    if (!args.skip_noise) {
        cal.report.gate_error = qtwin::evaluate_cz(pair, cal.pulse, ctx.device.pair_noise(coupler)).gate_error;
    }
    ctx.write_json("cz_pulse.json", cz_to_json(cal));
    const auto w = cal.pulse.waveforms();
    Table t;
    t.columns = {"t_ns", "flux1", "flux2"};
    Series s1{"qubit 1", {}, {}}, s2{"qubit 2", {}, {}};
    for (std::size_t k = 0; k < w[0].samples.size(); ++k) {
        const double tk = w[0].t0_ns + w[0].dt_ns * static_cast<double>(k);
        t.add({tk, w[0].samples[k], w[1].samples[k]});
        s1.x.push_back(tk);
        s1.y.push_back(w[0].samples[k]);
        s2.x.push_back(tk);
        s2.y.push_back(w[1].samples[k]);
    }
    ctx.write_table("cz_waveform", t);
    ctx.write_svg("cz_waveform.svg", line_plot({"Calibrated net-zero CZ pulse", "time (ns)", "flux offset"}, {s1, s2}));
    const double dphi = std::remainder(cal.report.conditional_phase - std::numbers::pi, 2.0 * std::numbers::pi);
    std::printf("CZ: %.1f ns total, |dphi| %.2e rad, leakage %.2e", cal.report.total_ns, std::abs(dphi),
                cal.report.leakage);
    if (cal.report.gate_error) {
        std::printf(", gate error %.2e", *cal.report.gate_error);
    }
    std::printf("\n");
    return kOk;
}

}  // namespace qpu_twin
