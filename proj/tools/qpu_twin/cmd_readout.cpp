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
#include <array>
#include <cmath>
#include <cstdio>

#include "commands.hpp"
#include "qtwin/error.hpp"
#include "qtwin/readout.hpp"
#include "svg.hpp"

namespace qpu_twin {

namespace {

using qtwin::QubitState;

constexpr std::array<QubitState, 3> kStates{QubitState::G, QubitState::E, QubitState::F};

struct Sweep {
    std::vector<double> freqs;
    std::array<std::vector<std::complex<double>>, 3> s21;
};

// 100 kHz grid covering the three dressed resonator lines and the filter.
Sweep sweep(const qtwin::ChainParams& chain, qtwin::FluxPoint f) {
    const auto lines = qtwin::resonator_frequencies(chain, f);
    const double lo = std::min({lines[0], lines[1], lines[2], chain.omega_p}) - 0.03;
    const double hi = std::max({lines[0], lines[1], lines[2], chain.omega_p}) + 0.03;
    Sweep s;
    const auto n = static_cast<int>(std::ceil((hi - lo) / 1e-4));
    for (int k = 0; k <= n; ++k) {
        s.freqs.push_back((std::floor(lo * 1e4) + k) / 1e4);
    }
    for (int k = 0; k < 3; ++k) {
        s.s21[k] = qtwin::transmission_s21(chain, kStates[k], s.freqs, f);
    }
    return s;
}

json state_map(const std::array<double, 3>& v) { return {{"g", v[0]}, {"e", v[1]}, {"f", v[2]}}; }

}  // namespace

int cmd_readout(Context& ctx, const ReadoutArgs& args) {
    const auto& q = ctx.device.qubit(args.qubit);
    const auto& chain = q.chain;
    const auto f = q.operating;
    const auto sw = sweep(chain, f);
    const double probe =
        q.probe_ghz ? *q.probe_ghz : qtwin::optimal_probe_frequency(sw.freqs, sw.s21[0], sw.s21[1], sw.s21[2]);

    if (args.sub == "spectrum") {
        Table t;
        t.columns = {"freq_ghz", "s21_mag_g", "s21_mag_e", "s21_mag_f"};
        std::array<Series, 3> series{Series{"|g>", {}, {}}, Series{"|e>", {}, {}}, Series{"|f>", {}, {}}};
        for (std::size_t i = 0; i < sw.freqs.size(); ++i) {
            std::vector<double> row{sw.freqs[i]};
            for (int k = 0; k < 3; ++k) {
                row.push_back(std::abs(sw.s21[k][i]));
                series[k].x.push_back(sw.freqs[i]);
                series[k].y.push_back(row.back());
            }
            t.add(row);
        }
        std::array<double, 3> kappa_r{}, kappa_p{};
        for (int k = 0; k < 3; ++k) {
            const auto h = qtwin::hybridized_linewidths(chain, kStates[k], f);
            kappa_r[k] = 1e3 * h.kappa_r_eff;
            kappa_p[k] = 1e3 * h.kappa_p_eff;
        }
        ctx.write_table("spectrum", t);
        ctx.write_json("spectrum_summary.json", {{"qubit", q.id},
                                                 {"resonator_ghz", state_map(qtwin::resonator_frequencies(chain, f))},
                                                 {"kappa_r_eff_mhz", state_map(kappa_r)},
                                                 {"kappa_p_eff_mhz", state_map(kappa_p)},
                                                 {"probe_ghz", probe}});
        ctx.write_svg("spectrum.svg", line_plot({"Feedline transmission, qubit " + std::to_string(q.id),
                                                 "frequency (GHz)", "|S21|"},
                                                {series.begin(), series.end()}));
        std::printf("kappa_r/2pi (MHz): g %.3f  e %.3f  f %.3f   probe %.6f GHz\n", kappa_r[0], kappa_r[1],
                    kappa_r[2], probe);
        return kOk;
    }

    auto cfg = q.readout;
    cfg.probe_ghz = probe;
    if (ctx.seed_given) {
        cfg.seed = ctx.seed;
    }
    if (args.shots) cfg.shots = *args.shots;
    if (args.amplitude) cfg.amplitude = *args.amplitude;
    if (args.eta) cfg.eta = *args.eta;
    cfg.validate();
    const auto shots = qtwin::simulate_shots(chain, cfg, q.noise.t1_us, f);
    const auto cls = qtwin::fit_classifier(shots);
    const auto m = qtwin::assignment_matrix(shots, cls, !args.no_preselect);

    json common{{"qubit", q.id},
                {"probe_ghz", probe},
                {"seed", cfg.seed},
                {"shots_per_state", cfg.shots},
                {"amplitude_sqrt_photons", cfg.amplitude},
                {"eta", cfg.eta},
                {"sigma", shots.sigma},
                {"preselect", !args.no_preselect},
                {"mean_error", m.mean_error()},
                {"discarded_fraction", m.discarded_fraction()}};

    if (args.sub == "shots") {
        Table t;
        t.columns = {"prepared", "i", "q", "presel_i", "presel_q"};
        for (const auto& r : shots.records) {
            t.add({static_cast<double>(r.prepared), r.iq.real(), r.iq.imag(), r.presel.real(), r.presel.imag()});
        }
        // histogram along the line through the g and e cluster means
        const auto mg = cls.components[0].mean, me = cls.components[1].mean;
        Eigen::Vector2d axis = me - mg;
        axis /= axis.norm() > 0 ? axis.norm() : 1.0;
        std::vector<double> proj;
        for (const auto& r : shots.records) {
            proj.push_back((Eigen::Vector2d(r.iq.real(), r.iq.imag()) - mg).dot(axis));
        }
        const auto [lo, hi] = std::minmax_element(proj.begin(), proj.end());
        constexpr int kBins = 80;
        const double width = (*hi - *lo) / kBins + 1e-300;
        std::array<Series, 3> hist{Series{"prepared |g>", {}, {}}, Series{"prepared |e>", {}, {}},
                                   Series{"prepared |f>", {}, {}}};
        std::array<std::vector<double>, 3> counts;
        for (auto& c : counts) c.assign(kBins, 0.0);
        for (std::size_t i = 0; i < proj.size(); ++i) {
            const int b = std::min(kBins - 1, static_cast<int>((proj[i] - *lo) / width));
            counts[static_cast<int>(shots.records[i].prepared)][b] += 1.0;
        }
        for (int k = 0; k < 3; ++k) {
            for (int b = 0; b < kBins; ++b) {
                hist[k].x.push_back(*lo + (b + 0.5) * width);
                hist[k].y.push_back(counts[k][b]);
            }
        }
        ctx.write_table("shots", t);
        ctx.write_json("shots_summary.json", common);
        ctx.write_svg("shots_histogram.svg",
                      line_plot({"Integrated readout signal, qubit " + std::to_string(q.id), "projection on g-e axis",
                                 "counts"},
                                {hist.begin(), hist.end()}));
    } else if (args.sub == "matrix") {
        json rows = json::array();
        std::vector<std::vector<double>> z(3, std::vector<double>(3));
        for (int p = 0; p < 3; ++p) {
            rows.push_back({m.p(p, 0), m.p(p, 1), m.p(p, 2)});
            for (int a = 0; a < 3; ++a) {
                z[p][a] = m.p(p, a);
            }
        }
        json out = common;
        out["matrix"] = rows;
        out["discarded"] = m.discarded;
        out["retained"] = m.retained;
        ctx.write_json("assignment.json", out);
        ctx.write_svg("assignment.svg", heatmap({"Assignment probabilities, qubit " + std::to_string(q.id),
                                                 "assigned state (0 g, 1 e, 2 f)", "prepared state (0 g, 1 e, 2 f)"},
                                                {0, 1, 2}, {0, 1, 2}, z, 0.0, 1.0));
    } else {
        throw qtwin::Error(qtwin::ErrorKind::InvalidArgument, "unknown readout subcommand " + args.sub);
    }
    std::printf("mean assignment error %.3e, discarded %.3f%%\n", m.mean_error(), 100.0 * m.discarded_fraction());
    return kOk;
}

}  // namespace qpu_twin
