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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "qtwin/error.hpp"
#include "qtwin/parallel.hpp"
#include "qtwin/rng.hpp"
#include "qtwin/simplex.hpp"

namespace qtwin {

namespace {

constexpr double kDefaultEc = 0.160;
constexpr double kDefaultG = 0.1;

bool same_flux(double a, double b) { return std::abs(a - b) < 1e-12; }

std::vector<Observation> canonical(std::vector<Observation> obs) {
    std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
        return std::tie(a.kind, a.phi, a.value, a.weight) < std::tie(b.kind, b.phi, b.value, b.weight);
    });
    return obs;
}

/// Which coordinates of (E_J, E_c, asym, g) the simplex moves.
struct FreeSet {
    bool ec = true;
    bool g = true;

    int count() const { return 2 + (ec ? 1 : 0) + (g ? 1 : 0); }
};

}  // namespace

std::string observable_name(ObservableKind kind) {
    switch (kind) {
        case ObservableKind::QubitGe: return "qubit_ge";
        case ObservableKind::Anharmonicity: return "anharmonicity";
        case ObservableKind::ResonatorG: return "resonator_g";
    }
    return "unknown";
}

SpectralObservations SpectralObservations::extremal(double ge_at_max, double ge_at_min,
                                                    std::optional<double> anharmonicity_at_max,
                                                    std::optional<double> resonator_at_min, double omega_r_bare,
                                                    double omega_p, double j_rp) {
    SpectralObservations out;
    out.observations.push_back({ObservableKind::QubitGe, 0.0, ge_at_max, 1.0});
    out.observations.push_back({ObservableKind::QubitGe, 0.5, ge_at_min, 1.0});
    if (anharmonicity_at_max) {
        out.observations.push_back({ObservableKind::Anharmonicity, 0.0, *anharmonicity_at_max, 2.0});
    }
    if (resonator_at_min) {
        out.observations.push_back({ObservableKind::ResonatorG, 0.5, *resonator_at_min, 1.0});
    }
    out.omega_r_bare = omega_r_bare;
    out.omega_p = omega_p;
    out.j_rp = j_rp;
    return out;
}

std::optional<double> SpectralObservations::find(ObservableKind kind, double phi) const {
    for (const auto& o : observations) {
        if (o.kind == kind && same_flux(o.phi, phi)) {
            return o.value;
        }
    }
    return std::nullopt;
}

void SpectralObservations::validate() const {
    const auto at_max = find(ObservableKind::QubitGe, 0.0);
    const auto at_min = find(ObservableKind::QubitGe, 0.5);
    require(at_max.has_value() && at_min.has_value(), ErrorKind::InvalidArgument,
            "ge frequencies at phi = 0 and phi = 1/2 are required");
    require(*at_max > *at_min && *at_min > 0.0, ErrorKind::InvalidArgument, "need ge_at_max > ge_at_min > 0");
    for (const auto& o : observations) {
        require(std::isfinite(o.value) && o.weight >= 0.0, ErrorKind::InvalidArgument,
                "observation values must be finite with non-negative weight");
        if (o.kind == ObservableKind::Anharmonicity) {
            require(o.value < 0.0, ErrorKind::InvalidArgument, "anharmonicity must be negative");
        }
    }
}

double FitReport::max_abs_residual() const {
    double worst = 0.0;
    for (const auto& r : residuals) {
        worst = std::max(worst, std::abs(r.residual));
    }
    return worst;
}

FittedChain seed_guess(const SpectralObservations& obs) {
    const double ge_max = obs.find(ObservableKind::QubitGe, 0.0).value();
    const double ge_min = obs.find(ObservableKind::QubitGe, 0.5).value();
    const auto alpha = obs.find(ObservableKind::Anharmonicity, 0.0);
    FittedChain out;
    out.transmon.ec = alpha ? -*alpha : kDefaultEc;
    const double ec = out.transmon.ec;
    // ge = sqrt(8 E_J E_c) - E_c inverted at both extrema.
    out.transmon.ej_max = (ge_max + ec) * (ge_max + ec) / (8.0 * ec);
    const double ej_min = (ge_min + ec) * (ge_min + ec) / (8.0 * ec);
    out.transmon.asym = std::clamp(ej_min / out.transmon.ej_max, 0.0, 0.99);
    out.transmon.charge_cutoff = obs.charge_cutoff;
    out.transmon.levels_kept = obs.levels_kept;
    out.g_qr = kDefaultG;
    return out;
}

ChainParams chain_from_fit(const SpectralObservations& obs, const FittedChain& fitted) {
    ChainParams c;
    c.transmon = fitted.transmon;
    c.transmon.charge_cutoff = obs.charge_cutoff;
    c.transmon.levels_kept = obs.levels_kept;
    c.omega_r_bare = obs.omega_r_bare;
    c.omega_p = obs.omega_p;
    c.g_qr = fitted.g_qr;
    c.j_rp = obs.j_rp;
    c.kappa_p = obs.kappa_p;
    c.n_r = obs.n_r;
    c.n_p = obs.n_p;
    return c;
}

std::vector<double> model_values(const SpectralObservations& obs, const FittedChain& fitted) {
    const ChainParams chain = chain_from_fit(obs, fitted);
    const ProductDims dims = chain_dims(chain);
    std::vector<std::pair<double, DressedSpectrum>> spectra;
    auto spectrum_at = [&](double phi) -> const DressedSpectrum& {
        for (const auto& [p, s] : spectra) {
            if (same_flux(p, phi)) {
                return s;
            }
        }
        spectra.emplace_back(phi, diagonalize(build_hamiltonian_real_gauge(chain, FluxPoint{phi}), dims));
        return spectra.back().second;
    };
    std::vector<double> out;
    out.reserve(obs.observations.size());
    for (const auto& o : obs.observations) {
        const auto& s = spectrum_at(o.phi);
        const double g = s.energy_of({0, 0, 0});
        const double e = s.energy_of({1, 0, 0});
        switch (o.kind) {
            case ObservableKind::QubitGe:
                out.push_back(e - g);
                break;
            case ObservableKind::Anharmonicity:
                out.push_back(s.energy_of({2, 0, 0}) - 2.0 * e + g);
                break;
            case ObservableKind::ResonatorG:
                out.push_back(s.energy_of({0, 1, 0}) - g);
                break;
        }
    }
    return out;
}

SpectralObservations synthesize_observations(const ChainParams& chain) {
    const auto at_max = dressed_observables(chain, FluxPoint{0.0});
    const auto at_min = dressed_observables(chain, FluxPoint{0.5});
    SpectralObservations obs = SpectralObservations::extremal(at_max.ge, at_min.ge, at_max.anharmonicity,
                                                              at_min.resonator_g, chain.omega_r_bare, chain.omega_p,
                                                              chain.j_rp);
    obs.kappa_p = chain.kappa_p;
    obs.charge_cutoff = chain.transmon.charge_cutoff;
    obs.levels_kept = chain.transmon.levels_kept;
    obs.n_r = chain.n_r;
    obs.n_p = chain.n_p;
    return obs;
}

FitReport fit_chain(const SpectralObservations& input, const FitOptions& options) {
    input.validate();
    require(options.tol > 0.0, ErrorKind::InvalidArgument, "tol must be positive");
    require(options.restarts >= 1, ErrorKind::InvalidArgument, "need at least one restart");

    SpectralObservations obs = input;
    obs.observations = canonical(input.observations);

    FreeSet free;
    free.ec = obs.find(ObservableKind::Anharmonicity, 0.0).has_value();
    free.g = !options.fixed_g_qr.has_value() && std::any_of(obs.observations.begin(), obs.observations.end(),
                                                             [](const Observation& o) {
                                                                 return o.kind == ObservableKind::ResonatorG;
                                                             });
    const auto informative = std::count_if(obs.observations.begin(), obs.observations.end(),
                                           [](const Observation& o) { return o.weight > 0.0; });
    require(informative >= free.count(), ErrorKind::DegenerateObservations,
            "fewer weighted observations than free parameters");

    FittedChain start = seed_guess(obs);
    if (options.fixed_g_qr) {
        start.g_qr = *options.fixed_g_qr;
    }

    // Coordinates are scaled so that every entry starts near 1.
    auto unpack = [&](const Eigen::VectorXd& x) {
        FittedChain p = start;
        int i = 0;
        p.transmon.ej_max = start.transmon.ej_max * x[i++];
        if (free.ec) {
            p.transmon.ec = start.transmon.ec * x[i++];
        }
        p.transmon.asym = x[i++];
        if (free.g) {
            p.g_qr = start.g_qr * x[i++];
        }
        return p;
    };

    auto objective = [&](const Eigen::VectorXd& x) {
        const FittedChain p = unpack(x);
        const auto& t = p.transmon;
        if (!(t.ej_max > 0.0 && t.ec > 0.0 && t.ej_max / t.ec > 10.0 && t.asym >= 0.0 && t.asym < 1.0 &&
              p.g_qr >= 0.0)) {
            return 1e6 + x.squaredNorm();
        }
        try {
            const auto values = model_values(obs, p);
            double sum = 0.0;
            for (std::size_t k = 0; k < values.size(); ++k) {
                const double d = values[k] - obs.observations[k].value;
                sum += obs.observations[k].weight * d * d;
            }
            return sum;
        } catch (const Error&) {
            return 1e3 + x.squaredNorm();
        }
    };

    Eigen::VectorXd x0(free.count());
    {
        int i = 0;
        x0[i++] = 1.0;
        if (free.ec) {
            x0[i++] = 1.0;
        }
        x0[i++] = start.transmon.asym;
        if (free.g) {
            x0[i++] = 1.0;
        }
    }

    SimplexOptions simplex;
    simplex.max_evaluations = options.max_iter;
    simplex.f_tolerance = 1e-2 * options.tol * options.tol;
    simplex.x_tolerance = 1e-9;
    simplex.initial_steps.assign(static_cast<std::size_t>(x0.size()), 0.03);

    std::vector<SimplexResult> runs(static_cast<std::size_t>(options.restarts));
    parallel_for(runs.size(), [&](std::size_t r) {
        Eigen::VectorXd x = x0;
        if (r > 0) {
            CounterRng rng(options.seed, r);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                x[i] *= 1.0 + 0.1 * (2.0 * rng.uniform() - 1.0);
            }
        }
        runs[r] = nelder_mead(objective, x, simplex);
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].value < runs[best].value) {
            best = r;
        }
    }

    FitReport report;
    report.fitted = unpack(runs[best].x);
    report.objective = runs[best].value;
    report.winning_restart = static_cast<int>(best);
    report.objective_history = runs[best].best_history;
    report.ec_constrained = free.ec;
    report.g_constrained = free.g || options.fixed_g_qr.has_value();
    for (const auto& run : runs) {
        report.iterations += run.iterations;
        report.evaluations += run.evaluations;
    }
    const auto values = model_values(obs, report.fitted);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& o = obs.observations[k];
        report.residuals.push_back({o.kind, o.phi, o.value, values[k], values[k] - o.value});
    }
    report.converged = report.max_abs_residual() < options.tol;
    return report;
}

}  // namespace qtwin
