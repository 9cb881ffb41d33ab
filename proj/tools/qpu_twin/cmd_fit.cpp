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
#include <limits>

#include "commands.hpp"
#include "qtwin/param_fit.hpp"

namespace qpu_twin {

namespace {

double rel_error(double fitted, const std::optional<double>& ref) {
    return ref ? (fitted - *ref) / *ref : std::numeric_limits<double>::quiet_NaN();
}

double or_nan(const std::optional<double>& v) { return v.value_or(std::numeric_limits<double>::quiet_NaN()); }

}  // namespace

int cmd_fit_device(Context& ctx) {
    Table cmp;
    cmp.columns = {"qubit",           "ej_max_ghz", "ej_max_ref_ghz", "ej_max_rel_err", "ec_ghz", "ec_ref_ghz",
                   "ec_rel_err",      "g_qr_ghz",   "g_qr_ref_ghz",   "g_qr_rel_err",   "asym",   "converged",
                   "ec_constrained", "g_constrained"};
    bool all_converged = true;
    std::printf("%-6s %10s %10s %8s %8s %8s %8s %8s %8s %6s\n", "qubit", "E_J", "ref", "err%", "E_c", "ref", "g",
                "ref", "err%", "conv");
    for (const auto& q : ctx.device.qubits) {
        if (!q.observations) {
            std::printf("%-6d skipped: no spectral observations\n", q.id);
            continue;
        }
        const auto& o = *q.observations;
        const auto& c = q.chain;
        auto obs = qtwin::SpectralObservations::extremal(o.ge_max_ghz, o.ge_min_ghz, o.anharmonicity_ghz,
                                                         o.resonator_min_ghz, c.omega_r_bare, c.omega_p, c.j_rp);
        obs.kappa_p = c.kappa_p;
        obs.charge_cutoff = c.transmon.charge_cutoff;
        obs.levels_kept = c.transmon.levels_kept;
        obs.n_r = c.n_r;
        obs.n_p = c.n_p;
        qtwin::FitOptions options;
        options.seed = ctx.seed;
        const auto r = qtwin::fit_chain(obs, options);
        all_converged = all_converged && r.converged;

        const auto& f = r.fitted;
        json residuals = json::array();
        for (const auto& res : r.residuals) {
            residuals.push_back({{"observable", qtwin::observable_name(res.kind)},
                                 {"phi", res.phi},
                                 {"observed_ghz", res.observed},
                                 {"model_ghz", res.model},
                                 {"residual_ghz", res.residual}});
        }
        ctx.write_json("fit_q" + std::to_string(q.id) + ".json",
                       {{"qubit", q.id},
                        {"fitted", {{"ej_max_ghz", f.transmon.ej_max},
                                    {"ec_ghz", f.transmon.ec},
                                    {"asym", f.transmon.asym},
                                    {"g_qr_ghz", f.g_qr}}},
                        {"converged", r.converged},
                        {"ec_constrained", r.ec_constrained},
                        {"g_constrained", r.g_constrained},
                        {"objective", r.objective},
                        {"iterations", r.iterations},
                        {"evaluations", r.evaluations},
                        {"winning_restart", r.winning_restart},
                        {"residuals", residuals}});

        const auto& ref = q.reference;
        cmp.add({static_cast<double>(q.id), f.transmon.ej_max, or_nan(ref.ej_max_ghz),
                 rel_error(f.transmon.ej_max, ref.ej_max_ghz), f.transmon.ec, or_nan(ref.ec_ghz),
                 rel_error(f.transmon.ec, ref.ec_ghz), f.g_qr, or_nan(ref.g_qr_ghz), rel_error(f.g_qr, ref.g_qr_ghz),
                 f.transmon.asym, r.converged ? 1.0 : 0.0, r.ec_constrained ? 1.0 : 0.0, r.g_constrained ? 1.0 : 0.0});
        std::printf("%-6d %10.4f %10.4f %8.2f %8.4f %8.4f %8.4f %8.4f %8.2f %6s%s%s\n", q.id, f.transmon.ej_max,
                    or_nan(ref.ej_max_ghz), 100.0 * rel_error(f.transmon.ej_max, ref.ej_max_ghz), f.transmon.ec,
                    or_nan(ref.ec_ghz), f.g_qr, or_nan(ref.g_qr_ghz), 100.0 * rel_error(f.g_qr, ref.g_qr_ghz),
                    r.converged ? "yes" : "NO", r.ec_constrained ? "" : "  E_c unconstrained",
                    r.g_constrained ? "" : "  g unconstrained");
    }
    ctx.write_table("fit_comparison", cmp);
    return all_converged ? kOk : kNumerical;
}

}  // namespace qpu_twin
