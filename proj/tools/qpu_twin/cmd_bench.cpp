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
#include <limits>

#include "commands.hpp"
#include "qtwin/benchmarking.hpp"
#include "qtwin/error.hpp"
#include "svg.hpp"

namespace qpu_twin {

namespace {

using qtwin::CliffordGroup;
using qtwin::RBResult;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Depolarizing defaults: the error rates measured on the device A pair.
constexpr double kSingleEpc[2] = {5.0e-4, 7.4e-4};
constexpr double kTwoQubitEpc = 1.34e-2;
constexpr double kInterleavedEpc = 2.02e-2;

double lambda_for(double epc, int d) {
    const double limit = (d - 1.0) / d;
    if (!(epc >= 0.0 && epc < limit)) {
        throw qtwin::Error(qtwin::ErrorKind::InvalidArgument, "error per Clifford must lie in [0, (d-1)/d)");
    }
    return 1.0 - epc / limit;
}

json rb_json(const RBResult& r, int d) {
    const double scale = (d - 1.0) / d;
    json j{{"lengths", r.lengths},
           {"mean", r.mean},
           {"stddev", r.stddev},
           {"count", r.count},
           {"fit", {{"a", r.fit.a}, {"p", r.fit.p}, {"b", r.fit.b}, {"p_stderr", r.fit.p_stderr()},
                    {"clamped", r.fit.clamped}}},
           {"epc", r.epc},
           {"epc_stderr", scale * r.fit.p_stderr()}};
    if (r.epg) {
        j["epg"] = *r.epg;
        j["epg_stderr"] = scale * r.fit.p_stderr() * (*r.epg / (r.epc > 0 ? r.epc : 1.0));
    }
    if (!r.leaked_mean.empty()) {
        j["leaked_mean"] = r.leaked_mean;
    }
    if (r.leakage) {
        j["leakage"] = {{"per_gate", r.leakage->per_gate},
                        {"per_gate_stderr", r.leakage->per_gate_stderr},
                        {"l_inf", r.leakage->l_inf},
                        {"gamma", r.leakage->gamma}};
    }
    return j;
}

Series curve(const std::string& name, const RBResult& r) {
    Series s{name, {}, {}, true};
    for (std::size_t k = 0; k < r.lengths.size(); ++k) {
        s.x.push_back(r.lengths[k]);
        s.y.push_back(r.mean[k]);
    }
    return s;
}

Series fit_curve(const std::string& name, const RBResult& r) {
    Series s{name, {}, {}};
    const double top = r.lengths.empty() ? 1.0 : r.lengths.back();
    for (int k = 0; k <= 120; ++k) {
        const double m = std::pow(top, k / 120.0);
        s.x.push_back(m);
        s.y.push_back(r.fit.a * std::pow(r.fit.p, m) + r.fit.b);
    }
    return s;
}

struct PairContext {
    std::size_t coupler;
    qtwin::DuffingPair pair;
    qtwin::NoiseParams noise;
};

PairContext pair_context(const Context& ctx, int pair) {
    if (pair < 1) {
        throw qtwin::Error(qtwin::ErrorKind::Config, "--pair counts couplers from 1");
    }
    const auto c = static_cast<std::size_t>(pair - 1);
    return {c, ctx.device.pair(c), ctx.device.pair_noise(c)};
}

std::filesystem::path pulse_path(const Context& ctx, const BenchArgs& args) {
    return args.cz_pulse.empty() ? ctx.path("cz_pulse.json") : std::filesystem::path(args.cz_pulse);
}

qtwin::NoiseModel two_qubit_model(const Context& ctx, const BenchArgs& args, double epc, double irb_epc) {
    if (args.model == "depolarizing") {
        const double lr = lambda_for(epc, 4);
        const double li = lambda_for(irb_epc, 4);
        // interleaved run: p_irb = p_rb * lambda_gate
        return qtwin::DepolarizingModel{lr, li / lr};
    }
    const auto pc = pair_context(ctx, args.pair);
    const auto cal = cz_from_json(read_json(pulse_path(ctx, args)));
    return qtwin::dynamics_channel_model(pc.pair, pc.noise, cal);
}

std::vector<int> default_lengths(const BenchArgs& args, bool single) {
    if (!args.lengths.empty()) {
        return args.lengths;
    }
    if (single) {
        return {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    }
    return {1, 2, 4, 8, 16, 32, 64, 128, 256};
}

qtwin::RbOptions rb_options(const Context& ctx, const BenchArgs& args, bool single) {
    qtwin::RbOptions o;
    o.lengths = default_lengths(args, single);
    o.randomizations = args.randomizations;
    o.shots = args.shots;
    o.seed = ctx.seed;
    return o;
}

int run_rb1(Context& ctx, const BenchArgs& args) {
    std::array<qtwin::NoiseModel, 2> models;
    if (args.model == "depolarizing") {
        for (int k = 0; k < 2; ++k) {
            const double epc = args.epc.empty() ? kSingleEpc[k] : args.epc[std::min<std::size_t>(k, args.epc.size() - 1)];
            models[k] = qtwin::DepolarizingModel{lambda_for(epc, 2), 1.0};
        }
    } else {
        const auto pc = pair_context(ctx, args.pair);
        for (int k = 0; k < 2; ++k) {
            models[k] = qtwin::dynamics_channel_model(pc.pair.q[k], pc.noise.q[k]);
        }
    }
    auto opts = rb_options(ctx, args, true);
    // physical pulses per Clifford in the XZ compilation
    opts.divisor = CliffordGroup::c1().mean_pulses();
    qtwin::SimultaneousOptions sim;
    sim.zz_mhz = args.zz_mhz;
    const auto r = qtwin::run_simultaneous_rb(models, opts, sim);

    Table t;
    t.columns = {"m", "survival_q1", "stddev_q1", "survival_q2", "stddev_q2"};
    for (std::size_t k = 0; k < r[0].lengths.size(); ++k) {
        t.add({static_cast<double>(r[0].lengths[k]), r[0].mean[k], r[0].stddev[k], r[1].mean[k], r[1].stddev[k]});
    }
    ctx.write_table("rb1", t);
    ctx.write_json("rb1.json", {{"model", args.model},
                                {"zz_mhz", args.zz_mhz},
                                {"divisor", *opts.divisor},
                                {"qubits", {rb_json(r[0], 2), rb_json(r[1], 2)}}});
    ctx.write_svg("rb1.svg", line_plot({"Simultaneous single-qubit RB", "sequence length", "ground state population",
                                        true},
                                       {curve("qubit 1", r[0]), curve("qubit 2", r[1]), fit_curve("fit 1", r[0]),
                                        fit_curve("fit 2", r[1])}));
    for (int k = 0; k < 2; ++k) {
        std::printf("qubit %d: EPC %.3e  EPG %.3e +- %.1e\n", k + 1, r[k].epc, r[k].epg.value_or(kNaN),
                    0.5 * r[k].fit.p_stderr());
    }
    return kOk;
}

int run_rb2(Context& ctx, const BenchArgs& args) {
    const double epc = args.epc.empty() ? kTwoQubitEpc : args.epc.front();
    const auto model = two_qubit_model(ctx, args, epc, args.irb_epc.value_or(kInterleavedEpc));
    const auto r = qtwin::run_rb(CliffordGroup::c2(), model, rb_options(ctx, args, false));
    Table t;
    t.columns = {"m", "survival", "stddev", "leaked"};
    for (std::size_t k = 0; k < r.lengths.size(); ++k) {
        t.add({static_cast<double>(r.lengths[k]), r.mean[k], r.stddev[k],
               r.leaked_mean.empty() ? 0.0 : r.leaked_mean[k]});
    }
    ctx.write_table("rb2", t);
    json out = rb_json(r, 4);
    out["model"] = args.model;
    ctx.write_json("rb2.json", out);
    ctx.write_svg("rb2.svg", line_plot({"Two-qubit RB", "sequence length", "|gg> population", true},
                                       {curve("RB", r), fit_curve("fit", r)}));
    std::printf("EPC %.3e +- %.1e\n", r.epc, 0.75 * r.fit.p_stderr());
    return kOk;
}

int run_irb(Context& ctx, const BenchArgs& args) {
    const double epc = args.epc.empty() ? kTwoQubitEpc : args.epc.front();
    const auto model = two_qubit_model(ctx, args, epc, args.irb_epc.value_or(kInterleavedEpc));
    const auto& c2 = CliffordGroup::c2();
    auto opts = rb_options(ctx, args, false);
    const auto rb = qtwin::run_rb(c2, model, opts);
    opts.interleave = c2.cz();
    const auto irb = qtwin::run_rb(c2, model, opts);
    const auto rates = qtwin::error_rates(rb.fit.p, irb.fit.p, 4);
    const double ratio = irb.fit.p / rb.fit.p;
    const double epg_stderr =
        0.75 * ratio * std::hypot(irb.fit.p_stderr() / irb.fit.p, rb.fit.p_stderr() / rb.fit.p);

    Table t;
    t.columns = {"m", "rb_survival", "rb_stddev", "irb_survival", "irb_stddev"};
    for (std::size_t k = 0; k < rb.lengths.size(); ++k) {
        t.add({static_cast<double>(rb.lengths[k]), rb.mean[k], rb.stddev[k], irb.mean[k], irb.stddev[k]});
    }
    ctx.write_table("irb", t);
    json out{{"model", args.model},
             {"rb", rb_json(rb, 4)},
             {"irb", rb_json(irb, 4)},
             {"epg", rates.epg.value_or(kNaN)},
             {"epg_stderr", epg_stderr},
             {"ratio_out_of_range", rates.ratio_out_of_range}};
    if (irb.leakage) {
        out["leakage_per_cz"] = irb.leakage->per_gate;
        out["leakage_per_cz_stderr"] = irb.leakage->per_gate_stderr;
    }
    ctx.write_json("irb.json", out);
    ctx.write_svg("irb.svg", line_plot({"RB and interleaved RB of the CZ gate", "sequence length", "|gg> population",
                                        true},
                                       {curve("RB", rb), curve("IRB", irb), fit_curve("RB fit", rb),
                                        fit_curve("IRB fit", irb)}));
    std::printf("EPC RB %.3e  IRB %.3e  EPG %.3e +- %.1e%s\n", rb.epc, irb.epc, rates.epg.value_or(kNaN),
                epg_stderr, rates.ratio_out_of_range ? "  (IRB decays slower than RB)" : "");
    return kOk;
}

std::optional<json> maybe_read(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) {
        return std::nullopt;
    }
    return read_json(p);
}

int run_report(Context& ctx, const BenchArgs& args) {
    const auto pc = pair_context(ctx, args.pair);
    const bool published = ctx.device.id == "device_a" && args.pair == 1;
    auto ref = [&](double v) { return published ? v : kNaN; };
    Table t;
    t.columns = {"quantity", "simulated", "published"};

    const auto rb1 = maybe_read(ctx.path("rb1.json"));
    const auto irb = maybe_read(ctx.path("irb.json"));
    const auto rb2 = maybe_read(ctx.path("rb2.json"));
    const auto cz = maybe_read(pulse_path(ctx, args));
    auto get = [](const std::optional<json>& j, const json::json_pointer& p) {
        return j && j->contains(p) && (*j)[p].is_number() ? (*j)[p].get<double>() : kNaN;
    };

    const double slot = qtwin::SimultaneousOptions{}.slot_ns;
    for (int k = 0; k < 2; ++k) {
        const auto& n = pc.noise.q[k];
        const std::string q = "q" + std::to_string(k + 1);
        t.add("epg_1q_" + q, {get(rb1, json::json_pointer("/qubits/" + std::to_string(k) + "/epg")),
                              ref(k == 0 ? 5.0e-4 : 7.4e-4)});
        t.add("coherence_limit_1q_" + q,
              {qtwin::coherence_limit({{slot, {{n.t1_us, n.t2_star_us}}}}), ref(k == 0 ? 3.6e-4 : 5.0e-4)});
    }
    const double epc_rb = irb ? get(irb, json::json_pointer("/rb/epc")) : get(rb2, json::json_pointer("/epc"));
    t.add("epc_2q_rb", {epc_rb, ref(1.34e-2)});
    t.add("epc_2q_irb", {get(irb, json::json_pointer("/irb/epc")), ref(2.02e-2)});
    t.add("epg_cz", {get(irb, json::json_pointer("/epg")), ref(7.0e-3)});
    t.add("leakage_per_cz", {get(irb, json::json_pointer("/leakage_per_cz")), ref(4e-4)});

    // flux part at the echo times, buffers at the idle T2*
    qtwin::CzPulse pulse;
    if (cz) {
        pulse = cz_from_json(*cz).pulse;
    }
    const auto& n = pc.noise.q;
    const double cl_cz = qtwin::coherence_limit(
        {{pulse.flux_ns(), {{n[0].t1_us, n[0].t2_echo_us}, {n[1].t1_us, n[1].t2_echo_us}}},
         {2.0 * pulse.buffer_ns, {{n[0].t1_us, n[0].t2_star_us}, {n[1].t1_us, n[1].t2_star_us}}}});
    t.add("coherence_limit_cz", {cl_cz, ref(8.9e-3)});
    t.add("cz_gate_error_lindblad", {get(cz, json::json_pointer("/report/gate_error")), kNaN});
    t.add("cz_total_ns", {cz ? pulse.total_ns() : kNaN, ref(103.0)});

    ctx.write_table("report", t);
    json rows = json::object();
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        rows[t.labels[k]] = {{"simulated", std::isfinite(t.rows[k][0]) ? json(t.rows[k][0]) : json(nullptr)},
                             {"published", std::isfinite(t.rows[k][1]) ? json(t.rows[k][1]) : json(nullptr)}};
    }
    ctx.write_json("report.json", rows);
    std::printf("%-26s %12s %12s\n", "quantity", "simulated", "published");
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        std::printf("%-26s %12.4g %12.4g\n", t.labels[k].c_str(), t.rows[k][0], t.rows[k][1]);
    }
    return kOk;
}

}  // namespace

int cmd_bench(Context& ctx, const BenchArgs& args) {
    if (args.model != "depolarizing" && args.model != "dynamics") {
        throw qtwin::Error(qtwin::ErrorKind::InvalidArgument, "unknown model " + args.model);
    }
    if (args.sub == "rb1") return run_rb1(ctx, args);
    if (args.sub == "rb2") return run_rb2(ctx, args);
    if (args.sub == "irb") return run_irb(ctx, args);
    if (args.sub == "report") return run_report(ctx, args);
    throw qtwin::Error(qtwin::ErrorKind::InvalidArgument, "unknown bench subcommand " + args.sub);
}

}  // namespace qpu_twin
