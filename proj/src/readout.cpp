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

#include "qtwin/readout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtwin/error.hpp"
#include "qtwin/parallel.hpp"
#include "qtwin/rng.hpp"

namespace qtwin {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cd kI{0.0, 1.0};

int idx(QubitState s) { return static_cast<int>(s); }

QubitState swap_ge(QubitState s) {
    if (s == QubitState::G) return QubitState::E;
    if (s == QubitState::E) return QubitState::G;
    return s;
}

QubitState swap_ef(QubitState s) {
    if (s == QubitState::E) return QubitState::F;
    if (s == QubitState::F) return QubitState::E;
    return s;
}

/// State actually present after the preparation pulses act on `actual`.
QubitState prepare(QubitState target, QubitState actual) {
    switch (target) {
        case QubitState::G: return actual;
        case QubitState::E: return swap_ge(actual);
        case QubitState::F: return swap_ef(swap_ge(actual));
    }
    return actual;
}

/// Relaxation rate out of s in 1/ns; f decays to e at twice the e rate.
double decay_rate(QubitState s, double t1_ns) {
    if (s == QubitState::E) return 1.0 / t1_ns;
    if (s == QubitState::F) return 2.0 / t1_ns;
    return 0.0;
}

QubitState lower(QubitState s) { return s == QubitState::F ? QubitState::E : QubitState::G; }

cd pole(const CavityModel& m, const ReadoutConfig& r, QubitState s) {
    return kTwoPi * (0.5 * m.kappa[idx(s)] + kI * (m.omega[idx(s)] - r.probe_ghz));
}

/// Drive rate that gives a steady-state field of `amplitude` with the qubit in g.
double drive_at(const CavityModel& m, const ReadoutConfig& r, double t) {
    const double base = r.amplitude * std::abs(pole(m, r, QubitState::G));
    if (r.two_step && t < r.two_step->duration_ns) {
        return base * r.two_step->scale;
    }
    return base;
}

/// Exact evolution of da/dt = -lambda a + eps over tau with constant eps.
cd advance(cd alpha, cd lambda, double eps, double tau) {
    const cd steady = eps / lambda;
    return steady + (alpha - steady) * std::exp(-lambda * tau);
}

int sample_count(const ReadoutConfig& r) { return static_cast<int>(std::lround(r.integration_ns / r.dt_ns)); }

/// One stochastic readout. Starting in `state` with an empty cavity, returns
/// the weighted integral and leaves `state` at its value at the end.
cd stochastic_readout(const CavityModel& m, const ReadoutConfig& r, const std::vector<cd>& w, double t1_ns,
                      QubitState& state, CounterRng& rng) {
    const int n = static_cast<int>(w.size());
    double next_jump = state == QubitState::G ? INFINITY : rng.exponential(1.0 / decay_rate(state, t1_ns));
    cd alpha = 0.0;
    cd acc = 0.0;
    double t = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t_end = (k + 1) * r.dt_ns;
        // the drive is constant inside a step because the two-step boundary
        // is snapped to the grid in validate()
        const double eps = drive_at(m, r, t);
        while (next_jump < t_end) {
            alpha = advance(alpha, pole(m, r, state), eps, next_jump - t);
            t = next_jump;
            state = lower(state);
            next_jump = state == QubitState::G ? INFINITY : t + rng.exponential(1.0 / decay_rate(state, t1_ns));
        }
        alpha = advance(alpha, pole(m, r, state), eps, t_end - t);
        t = t_end;
        acc += w[static_cast<std::size_t>(k)] * alpha;
    }
    return acc * r.dt_ns;
}

/// Relaxation over an undriven wait of length tau.
void relax(QubitState& state, double tau, double t1_ns, CounterRng& rng) {
    double t = 0.0;
    while (state != QubitState::G) {
        t += rng.exponential(1.0 / decay_rate(state, t1_ns));
        if (t >= tau) {
            break;
        }
        state = lower(state);
    }
}

Eigen::Vector2d as_vec(cd v) { return {v.real(), v.imag()}; }

void regularize(Eigen::Matrix2d& cov) {
    cov.diagonal().array() += 1e-9 * cov.trace();
    const double det = cov.determinant();
    require(std::isfinite(det) && det > 1e-300 && det > 1e-14 * cov.trace() * cov.trace(),
            ErrorKind::SingularCovariance, "a mixture component collapsed to a singular covariance");
}

double log_gauss(const Eigen::Vector2d& x, const GaussianComponent& g) {
    const Eigen::Vector2d d = x - g.mean;
    const Eigen::Matrix2d inv = g.covariance.inverse();
    return -0.5 * d.dot(inv * d) - 0.5 * std::log(g.covariance.determinant()) - std::log(kTwoPi);
}

}  // namespace

char state_letter(QubitState s) { return "gef"[idx(s)]; }

QubitState state_from_letter(char c) {
    switch (c) {
        case 'g': return QubitState::G;
        case 'e': return QubitState::E;
        case 'f': return QubitState::F;
        default: throw Error(ErrorKind::InvalidArgument, std::string("unknown qubit state '") + c + "'");
    }
}

HybridizedModes hybridized_linewidths(double delta_rp, double j_rp, double kappa_p, double kappa_int) {
    require(kappa_p >= 0.0 && kappa_int >= 0.0, ErrorKind::InvalidArgument, "linewidths must be non-negative");
    Eigen::Matrix2cd m;
    m << cd(delta_rp, -0.5 * kappa_int), j_rp, j_rp, cd(0.0, -0.5 * kappa_p);
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> solver(m);
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    // The matrix is complex symmetric rather than Hermitian; weights use the
    // normalized eigenvector components.
    double w[2];
    for (int k = 0; k < 2; ++k) {
        const double a = std::norm(vecs(0, k));
        const double b = std::norm(vecs(1, k));
        w[k] = a / (a + b);
    }
    const int r = w[0] >= w[1] ? 0 : 1;
    const int p = 1 - r;
    require(!(std::abs(w[0] - 0.5) < 0.01 && std::abs(w[1] - 0.5) < 0.01), ErrorKind::ModeMixing,
            "resonator and filter modes are fully hybridized; labeling is undefined");
    HybridizedModes out;
    out.kappa_r_eff = -2.0 * vals[r].imag();
    out.kappa_p_eff = -2.0 * vals[p].imag();
    out.omega_r_like = vals[r].real();
    out.omega_p_like = vals[p].real();
    out.resonator_weight = w[r];
    if (j_rp == 0.0) {
        // exact decoupled values, free of eigen-solver rounding
        out.kappa_r_eff = kappa_int;
        out.kappa_p_eff = kappa_p;
        out.omega_r_like = delta_rp;
        out.omega_p_like = 0.0;
    }
    return out;
}

std::array<double, 3> resonator_frequencies(const ChainParams& c, FluxPoint f) {
    const auto obs = resonator_observables(c, f);
    return {obs.resonator_g, obs.resonator_e, obs.resonator_f};
}

HybridizedModes hybridized_linewidths(const ChainParams& c, QubitState s, FluxPoint f) {
    const double omega_r = resonator_frequencies(c, f)[static_cast<std::size_t>(idx(s))];
    HybridizedModes out = hybridized_linewidths(omega_r - c.omega_p, c.j_rp, c.kappa_p, c.kappa_int);
    out.omega_r_like += c.omega_p;
    out.omega_p_like += c.omega_p;
    return out;
}

cd transmission_s21(double omega, double omega_r, double omega_p, double j_rp, double kappa_p, double kappa_int) {
    const double dp = omega - omega_p;
    const double dr = omega - omega_r;
    const cd x = -kI * dp + j_rp * j_rp / cd(0.5 * kappa_int, -dr);
    const cd denom = x + 0.5 * kappa_p;
    if (std::abs(denom) == 0.0) {
        return 0.0;
    }
    return x / denom;
}

std::vector<cd> transmission_s21(const ChainParams& c, QubitState s, const std::vector<double>& freqs, FluxPoint f) {
    const double omega_r = resonator_frequencies(c, f)[static_cast<std::size_t>(idx(s))];
    std::vector<cd> out;
    out.reserve(freqs.size());
    for (double w : freqs) {
        out.push_back(transmission_s21(w, omega_r, c.omega_p, c.j_rp, c.kappa_p, c.kappa_int));
    }
    return out;
}

double optimal_probe_frequency(const std::vector<double>& freqs, const std::vector<cd>& sg, const std::vector<cd>& se,
                               const std::vector<cd>& sf) {
    require(!freqs.empty(), ErrorKind::EmptyGrid, "probe grid is empty");
    require(sg.size() == freqs.size() && se.size() == freqs.size() && sf.size() == freqs.size(),
            ErrorKind::InvalidArgument, "spectra must share the probe grid");
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        const double v = std::abs(std::abs(sg[k]) - std::abs(se[k])) + std::abs(std::abs(se[k]) - std::abs(sf[k]));
        if (v > best_value || (v == best_value && freqs[k] < freqs[best])) {
            best_value = v;
            best = k;
        }
    }
    return freqs[best];
}

void ReadoutConfig::validate() const {
    require(integration_ns > 0.0 && std::isfinite(integration_ns), ErrorKind::InvalidArgument,
            "integration time must be positive");
    require(eta > 0.0 && eta <= 1.0, ErrorKind::InvalidArgument, "efficiency must lie in (0, 1]");
    require(shots >= 100, ErrorKind::InvalidArgument, "need at least 100 shots per state");
    require(dt_ns > 0.0 && dt_ns <= integration_ns, ErrorKind::InvalidArgument, "bad trajectory step");
    require(std::abs(integration_ns / dt_ns - std::round(integration_ns / dt_ns)) < 1e-9, ErrorKind::InvalidArgument,
            "integration time must be a multiple of the trajectory step");
    require(thermal_population >= 0.0 && thermal_population < 1.0, ErrorKind::InvalidArgument,
            "thermal population must lie in [0, 1)");
    if (two_step) {
        require(two_step->duration_ns >= 0.0 && two_step->scale > 0.0, ErrorKind::InvalidArgument,
                "bad two-step segment");
        require(std::abs(two_step->duration_ns / dt_ns - std::round(two_step->duration_ns / dt_ns)) < 1e-9,
                ErrorKind::InvalidArgument, "two-step duration must be a multiple of the trajectory step");
    }
}

CavityModel cavity_model(const ChainParams& c, FluxPoint f) {
    const auto freqs = resonator_frequencies(c, f);
    CavityModel m;
    for (int s = 0; s < 3; ++s) {
        const auto h = hybridized_linewidths(freqs[static_cast<std::size_t>(s)] - c.omega_p, c.j_rp, c.kappa_p,
                                             c.kappa_int);
        m.omega[static_cast<std::size_t>(s)] = h.omega_r_like + c.omega_p;
        m.kappa[static_cast<std::size_t>(s)] = h.kappa_r_eff;
    }
    return m;
}

std::vector<cd> cavity_trajectory(const CavityModel& m, const ReadoutConfig& r, QubitState s) {
    r.validate();
    const int n = sample_count(r);
    std::vector<cd> out(static_cast<std::size_t>(n));
    cd alpha = 0.0;
    const cd lambda = pole(m, r, s);
    for (int k = 0; k < n; ++k) {
        alpha = advance(alpha, lambda, drive_at(m, r, k * r.dt_ns), r.dt_ns);
        out[static_cast<std::size_t>(k)] = alpha;
    }
    return out;
}

std::vector<cd> mean_trajectory(const CavityModel& m, const ReadoutConfig& r, QubitState s, double t1_us) {
    r.validate();
    require(t1_us > 0.0, ErrorKind::InvalidArgument, "t1 must be positive");
    const double t1_ns = t1_us * 1e3;
    // Conditional means m_k = E[alpha 1{state = k}] and populations p_k obey
    // a closed linear system because alpha is continuous across jumps.
    using State = Eigen::Matrix<cd, 6, 1>;
    const std::array<cd, 3> lam = {pole(m, r, QubitState::G), pole(m, r, QubitState::E), pole(m, r, QubitState::F)};
    const double ge = 1.0 / t1_ns;
    const double fe = 2.0 / t1_ns;
    auto rhs = [&](const State& y, double eps) {
        State d;
        d[0] = -lam[0] * y[0] + eps * y[3] + ge * y[1];
        d[1] = -lam[1] * y[1] + eps * y[4] - ge * y[1] + fe * y[2];
        d[2] = -lam[2] * y[2] + eps * y[5] - fe * y[2];
        d[3] = ge * y[4];
        d[4] = -ge * y[4] + fe * y[5];
        d[5] = -fe * y[5];
        return d;
    };
    State y = State::Zero();
    y[3 + idx(s)] = 1.0;
    const int n = sample_count(r);
    constexpr int kSub = 8;
    const double h = r.dt_ns / kSub;
    std::vector<cd> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double eps = drive_at(m, r, k * r.dt_ns);
        for (int j = 0; j < kSub; ++j) {
            const State k1 = rhs(y, eps);
            const State k2 = rhs(y + 0.5 * h * k1, eps);
            const State k3 = rhs(y + 0.5 * h * k2, eps);
            const State k4 = rhs(y + h * k3, eps);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out[static_cast<std::size_t>(k)] = y[0] + y[1] + y[2];
    }
    return out;
}

std::vector<cd> integration_weights(const CavityModel& m, const ReadoutConfig& r, double t1_us) {
    const auto mg = mean_trajectory(m, r, QubitState::G, t1_us);
    const auto me = mean_trajectory(m, r, QubitState::E, t1_us);
    std::vector<cd> w(mg.size());
    double norm = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = std::conj(me[k] - mg[k]);
        norm += std::norm(w[k]);
    }
    require(norm > 0.0, ErrorKind::InvalidArgument, "g and e responses are identical at this probe frequency");
    const double inv = 1.0 / std::sqrt(norm);
    for (auto& x : w) {
        x *= inv;
    }
    return w;
}

IQShotSet simulate_shots(const CavityModel& m, const ReadoutConfig& r, double t1_us) {
    r.validate();
    require(t1_us > 0.0, ErrorKind::InvalidArgument, "t1 must be positive");
    const double t1_ns = t1_us * 1e3;
    const auto mg = mean_trajectory(m, r, QubitState::G, t1_us);
    const auto me = mean_trajectory(m, r, QubitState::E, t1_us);
    const auto w = integration_weights(m, r, t1_us);

    // SNR^2 = 2 eta kappa T <|alpha_e - alpha_g|^2>, kappa in rad/ns.
    double sep2 = 0.0;
    cd vg = 0.0;
    cd ve = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        sep2 += std::norm(me[k] - mg[k]) * r.dt_ns;
        vg += w[k] * mg[k];
        ve += w[k] * me[k];
    }
    const double snr = std::sqrt(2.0 * r.eta * kTwoPi * m.kappa[0] * sep2);
    IQShotSet out;
    out.sigma = std::abs(ve - vg) * r.dt_ns / snr;
    const double gap = 10.0 / (kTwoPi * m.kappa[0]);

    const auto n = static_cast<std::size_t>(r.shots);
    out.records.resize(3 * n);
    parallel_for(3 * n, [&](std::size_t i) {
        CounterRng rng(r.seed, i);
        const auto target = static_cast<QubitState>(i / n);
        QubitState state = rng.bernoulli(r.thermal_population) ? QubitState::E : QubitState::G;
        IQRecord rec;
        rec.prepared = target;
        rec.presel = stochastic_readout(m, r, w, t1_ns, state, rng);
        rec.presel += out.sigma * cd(rng.normal(), rng.normal());
        relax(state, gap, t1_ns, rng);
        state = prepare(target, state);
        rec.iq = stochastic_readout(m, r, w, t1_ns, state, rng);
        rec.iq += out.sigma * cd(rng.normal(), rng.normal());
        out.records[i] = rec;
    });
    return out;
}

IQShotSet simulate_shots(const ChainParams& c, const ReadoutConfig& r, double t1_us, FluxPoint f) {
    return simulate_shots(cavity_model(c, f), r, t1_us);
}

std::array<double, 3> Classifier::log_joint(cd v) const {
    const Eigen::Vector2d x = as_vec(v);
    std::array<double, 3> out{};
    for (std::size_t k = 0; k < 3; ++k) {
        out[k] = std::log(components[k].weight) + log_gauss(x, components[k]);
    }
    return out;
}

QubitState Classifier::classify(cd v) const {
    const auto lj = log_joint(v);
    const auto best = std::max_element(lj.begin(), lj.end()) - lj.begin();
    return static_cast<QubitState>(best);
}

Classifier fit_classifier(const IQShotSet& shots, int max_iter, double tol) {
    std::array<std::vector<Eigen::Vector2d>, 3> by_state;
    std::vector<Eigen::Vector2d> pooled;
    pooled.reserve(shots.records.size());
    for (const auto& rec : shots.records) {
        by_state[static_cast<std::size_t>(idx(rec.prepared))].push_back(as_vec(rec.iq));
        pooled.push_back(as_vec(rec.iq));
    }
    Classifier c;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& pts = by_state[k];
        require(!pts.empty(), ErrorKind::EmptyClass, "no shots for a prepared state");
        require(pts.size() >= 100, ErrorKind::InvalidArgument, "need at least 100 shots per prepared state");
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const auto& p : pts) mean += p;
        mean /= static_cast<double>(pts.size());
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
        cov /= static_cast<double>(pts.size());
        regularize(cov);
        c.components[k] = {mean, cov, static_cast<double>(pts.size()) / static_cast<double>(pooled.size())};
    }

    const std::size_t n = pooled.size();
    std::vector<std::array<double, 3>> resp(n);
    double previous = -INFINITY;
    for (int it = 0; it < max_iter; ++it) {
        // E step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, 3> lj{};
            for (std::size_t k = 0; k < 3; ++k) {
                lj[k] = std::log(c.components[k].weight) + log_gauss(pooled[i], c.components[k]);
            }
            const double top = *std::max_element(lj.begin(), lj.end());
            double sum = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                resp[i][k] = std::exp(lj[k] - top);
                sum += resp[i][k];
            }
            for (auto& x : resp[i]) x /= sum;
            ll += top + std::log(sum);
        }
        c.log_likelihood = ll;
        c.iterations = it + 1;
        if (std::abs(ll - previous) <= tol * std::max(1.0, std::abs(ll))) {
            break;
        }
        previous = ll;
        // M step
        for (std::size_t k = 0; k < 3; ++k) {
            double nk = 0.0;
            Eigen::Vector2d mean = Eigen::Vector2d::Zero();
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i][k];
                mean += resp[i][k] * pooled[i];
            }
            require(nk > 0.0, ErrorKind::SingularCovariance, "a mixture component lost all responsibility");
            mean /= nk;
            Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
            for (std::size_t i = 0; i < n; ++i) {
                const Eigen::Vector2d d = pooled[i] - mean;
                cov += resp[i][k] * d * d.transpose();
            }
            cov /= nk;
            regularize(cov);
            c.components[k] = {mean, cov, nk / static_cast<double>(n)};
        }
    }
    return c;
}

AssignmentMatrix assignment_matrix(const IQShotSet& shots, const Classifier& c, bool preselect) {
    AssignmentMatrix out;
    Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
    std::array<int, 3> total{};
    for (const auto& rec : shots.records) {
        const int p = idx(rec.prepared);
        ++total[static_cast<std::size_t>(p)];
        if (preselect && c.classify(rec.presel) != QubitState::G) {
            continue;
        }
        counts(p, idx(c.classify(rec.iq))) += 1.0;
    }
    for (int p = 0; p < 3; ++p) {
        const double kept = counts.row(p).sum();
        require(kept > 0.0, ErrorKind::EmptyClass, "every shot of a prepared state was discarded");
        out.retained[static_cast<std::size_t>(p)] = static_cast<int>(kept);
        out.discarded[static_cast<std::size_t>(p)] = 1.0 - kept / total[static_cast<std::size_t>(p)];
        out.p.row(p) = counts.row(p) / kept;
        // push the rounding residue into the largest entry so the row sums to 1 exactly
        for (int it = 0; it < 4 && out.p.row(p).sum() != 1.0; ++it) {
            Eigen::Index k = 0;
            out.p.row(p).maxCoeff(&k);
            out.p(p, k) += 1.0 - out.p.row(p).sum();
        }
    }
    return out;
}

}  // namespace qtwin
