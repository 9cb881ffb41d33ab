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


#include <cmath>
#include <cstdio>
#include <filesystem>

#include "commands.hpp"
#include "qtwin/error.hpp"
#include "qtwin/flux_dsp.hpp"
#include "svg.hpp"

namespace qpu_twin {

namespace {

json filter_json(const qtwin::CorrectionFilter& c) {
    json sections = json::array();
    for (const auto& s : c.sections) {
        sections.push_back({{"b0", s.b0}, {"b1", s.b1}, {"a1", s.a1}});
    }
    return {{"dt_ns", c.dt_ns}, {"sections", sections}, {"fir", c.fir}};
}

qtwin::CorrectionFilter filter_from_json(const json& j) {
    try {
        qtwin::CorrectionFilter c;
        c.dt_ns = j.at("dt_ns").get<double>();
        for (const auto& s : j.at("sections")) {
            c.sections.push_back({s.at("b0").get<double>(), s.at("b1").get<double>(), s.at("a1").get<double>()});
        }
        c.fir = j.at("fir").get<std::vector<double>>();
        return c;
    } catch (const json::exception& e) {
        throw qtwin::Error(qtwin::ErrorKind::Config, std::string("filter file: ") + e.what());
    }
}

// The pulsed qubit should idle at a sweet spot; default to the first one
// listed at zero flux.
const qtwin::QubitDescription& pulsed_qubit(const Context& ctx, const std::optional<int>& id) {
    if (id) {
        return ctx.device.qubit(*id);
    }
    for (const auto& q : ctx.device.qubits) {
        if (q.operating.phi == 0.0) {
            return q;
        }
    }
    return ctx.device.qubits.front();
}

}  // namespace

int cmd_flux(Context& ctx, const FluxArgs& args) {
    const auto& q = pulsed_qubit(ctx, args.qubit);
    const auto map = ctx.device.flux_map(q.id);
    const double phi = q.operating.phi;
    const auto& line = ctx.device.flux_line;
    line.validate();

    qtwin::PredistortOptions opt;
    opt.detuning_ghz = args.detuning_ghz;
    opt.pulse_ns = args.pulse_ns;
    opt.phase_noise_rad = args.phase_noise_rad;
    opt.seed = ctx.seed;
    const double idle = std::abs(std::remainder(phi, 1.0));
    const double pulse_flux = map.flux_for(map.frequency(phi) - args.detuning_ghz) - idle;
    const auto filter_path = ctx.path("filter.json");

    if (args.sub == "cryoscope") {
        const auto ideal = qtwin::square_pulse(pulse_flux, args.pulse_ns, line.dt_ns, 20.0);
        auto trace = [&](const qtwin::PulseWaveform& w) {
            return qtwin::cryoscope_reconstruct(qtwin::cryoscope_phases(w, map, phi), w.dt_ns);
        };
        const auto want = trace(ideal);
        const auto seen = trace(qtwin::apply_transfer(ideal, line));
        std::optional<qtwin::CryoscopeTrace> fixed;
        if (!args.no_correction && std::filesystem::exists(filter_path)) {
            const auto corr = filter_from_json(read_json(filter_path).at("correction"));
            fixed = trace(qtwin::apply_transfer(qtwin::apply_correction(ideal, corr), line));
        }
        Table t;
        t.columns = {"t_ns", "ideal_mhz", "distorted_mhz"};
        if (fixed) t.columns.push_back("corrected_mhz");
        std::vector<Series> series{{"ideal", {}, {}}, {"distorted", {}, {}}};
        if (fixed) series.push_back({"corrected", {}, {}});
        for (std::size_t k = 0; k < want.times_ns.size(); ++k) {
            std::vector<double> row{want.times_ns[k], want.freq_mhz[k], seen.freq_mhz[k]};
            if (fixed) row.push_back(fixed->freq_mhz[k]);
            for (std::size_t s = 0; s < series.size(); ++s) {
                series[s].x.push_back(row[0]);
                series[s].y.push_back(row[s + 1]);
            }
            t.add(row);
        }
        ctx.write_table("cryoscope", t);
        ctx.write_svg("cryoscope.svg", line_plot({"Cryoscope reconstruction, qubit " + std::to_string(q.id),
                                                  "time (ns)", "frequency offset (MHz)"},
                                                 series));
        return kOk;
    }

    if (args.sub == "predistort") {
        const auto r = qtwin::predistort(line, map, phi, opt);
        json terms = json::array();
        for (const auto& term : r.long_fit.terms) {
            terms.push_back({{"amplitude", term.amplitude}, {"tau_ns", term.tau_ns}});
        }
        ctx.write_json("filter.json", {{"qubit", q.id},
                                       {"pulse_flux", r.pulse_flux},
                                       {"detuning_ghz", args.detuning_ghz},
                                       {"correction", filter_json(r.correction)},
                                       {"long_fit", {{"gain", r.long_fit.gain}, {"terms", terms},
                                                     {"rms", r.long_fit.rms}}}});
        Table t;
        t.columns = {"t_ns", "freq_mhz"};
        Series s{"short cryoscope trace", {}, {}};
        for (std::size_t k = 0; k < r.short_trace.times_ns.size(); ++k) {
            t.add({r.short_trace.times_ns[k], r.short_trace.freq_mhz[k]});
            s.x.push_back(r.short_trace.times_ns[k]);
            s.y.push_back(r.short_trace.freq_mhz[k]);
        }
        ctx.write_table("predistort_trace", t);
        ctx.write_svg("predistort_trace.svg",
                      line_plot({"Short-time response after IIR correction", "time (ns)", "frequency offset (MHz)"},
                                {s}));
        std::printf("fitted %zu exponential terms, %zu FIR taps\n", r.long_fit.terms.size(), r.correction.fir.size());
        return kOk;
    }

    if (args.sub != "verify") {
        throw qtwin::Error(qtwin::ErrorKind::InvalidArgument, "unknown flux subcommand " + args.sub);
    }
    std::optional<qtwin::CorrectionFilter> corr;
    if (!args.no_correction) {
        if (std::filesystem::exists(filter_path)) {
            corr = filter_from_json(read_json(filter_path).at("correction"));
        } else {
            corr = qtwin::predistort(line, map, phi, opt).correction;
        }
    }
    const auto r = qtwin::verify_pulse(line, corr ? &*corr : nullptr, map, phi, pulse_flux, args.pulse_ns,
                                       args.budget_mhz);
    Table t;
    t.columns = {"t_ns", "true_deviation_mhz", "cryoscope_deviation_mhz"};
    Series a{"qubit frequency", {}, {}}, b{"cryoscope view", {}, {}};
    for (std::size_t k = 0; k < r.times_ns.size(); ++k) {
        t.add({r.times_ns[k], r.true_deviation_mhz[k], r.deviation_mhz[k]});
        a.x.push_back(r.times_ns[k]);
        a.y.push_back(r.true_deviation_mhz[k]);
        b.x.push_back(r.times_ns[k]);
        b.y.push_back(r.deviation_mhz[k]);
    }
    ctx.write_table("verify", t);
    ctx.write_json("verify.json", {{"qubit", q.id},
                                   {"corrected", corr.has_value()},
                                   {"pulse_ns", args.pulse_ns},
                                   {"detuning_ghz", args.detuning_ghz},
                                   {"budget_mhz", args.budget_mhz},
                                   {"max_abs_deviation_mhz", r.max_abs_true_mhz},
                                   {"max_abs_cryoscope_deviation_mhz", r.max_abs_mhz},
                                   {"within_budget", r.within_budget}});
    ctx.write_svg("verify.svg", line_plot({std::string("Frequency deviation during the pulse, ") +
                                               (corr ? "pre-distorted" : "uncorrected"),
                                           "time (ns)", "deviation (MHz)"},
                                          {a, b}));
    std::printf("max deviation %.4f MHz (budget %.3f MHz)%s\n", r.max_abs_true_mhz, args.budget_mhz,
                r.within_budget ? "" : "  OVER BUDGET");
    return r.within_budget ? kOk : kNumerical;
}

}  // namespace qpu_twin
