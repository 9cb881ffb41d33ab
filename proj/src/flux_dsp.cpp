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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "qtwin/error.hpp"
#include "qtwin/rng.hpp"
#include "qtwin/simplex.hpp"

namespace qtwin {

namespace {

constexpr double kPi = std::numbers::pi;

void require_same_rate(double a, double b) {
    require(std::abs(a - b) <= 1e-12 * std::max(a, b), ErrorKind::SampleRateMismatch,
            "waveform and filter sample periods differ");
}

std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& h) {
    if (h.size() == 1 && h[0] == 1.0) {
        return x;
    }
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
        double acc = 0.0;
        const std::size_t top = std::min(h.size(), n + 1);
        for (std::size_t j = 0; j < top; ++j) {
            acc += h[j] * x[n - j];
        }
        y[n] = acc;
    }
    return y;
}

/// Coefficients of prod_j (1 - r_j w), lowest order first.
std::vector<double> poly_from_roots(const std::vector<double>& r) {
    std::vector<double> p{1.0};
    for (double root : r) {
        std::vector<double> q(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            q[i] += p[i];
            q[i + 1] -= root * p[i];
        }
        p = std::move(q);
    }
    return p;
}

}  // namespace

void TransferFunction::validate() const {
    require(dt_ns > 0.0 && std::isfinite(dt_ns), ErrorKind::InvalidArgument, "sample period must be positive");
    require(std::isfinite(gain) && gain != 0.0, ErrorKind::InvalidArgument, "gain must be finite and nonzero");
    for (const auto& t : iir) {
        require(std::abs(t.amplitude) < 1.0, ErrorKind::InvalidArgument, "iir amplitudes must satisfy |a| < 1");
        require(t.tau_ns > 0.0 && std::isfinite(t.tau_ns), ErrorKind::InvalidArgument, "iir tau must be positive");
    }
    require(!fir.empty(), ErrorKind::InvalidArgument, "fir taps must not be empty");
    double sum = 0.0;
    for (double h : fir) sum += h;
    require(std::isfinite(sum) && sum != 0.0, ErrorKind::InvalidArgument, "fir taps must have a finite nonzero sum");
}

TransferFunction TransferFunction::identity(double dt_ns) {
    TransferFunction tf;
    tf.dt_ns = dt_ns;
    return tf;
}

TransferFunction TransferFunction::default_synthetic(double dt_ns) {
    TransferFunction tf;
    tf.dt_ns = dt_ns;
    tf.iir = {{0.03, 1000.0}, {0.01, 20000.0}};
    tf.fir = {0.92, 0.10, -0.04, 0.02};
    return tf;
}

void PulseWaveform::validate() const {
    require(!samples.empty(), ErrorKind::InvalidArgument, "waveform is empty");
    require(dt_ns > 0.0, ErrorKind::InvalidArgument, "sample period must be positive");
    for (double s : samples) {
        require(std::isfinite(s), ErrorKind::InvalidArgument, "waveform samples must be finite");
    }
}

PulseWaveform apply_transfer(const PulseWaveform& w, const TransferFunction& tf) {
    w.validate();
    tf.validate();
    require_same_rate(w.dt_ns, tf.dt_ns);
    const std::vector<double> x = fir_filter(w.samples, tf.fir);
    std::vector<double> lambda;
    for (const auto& t : tf.iir) lambda.push_back(std::exp(-tf.dt_ns / t.tau_ns));
    std::vector<double> z(tf.iir.size(), 0.0);
    PulseWaveform out = w;
    double previous = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double dx = x[n] - previous;
        previous = x[n];
        double acc = x[n];
        for (std::size_t k = 0; k < z.size(); ++k) {
            z[k] = lambda[k] * z[k] + dx;
            acc += tf.iir[k].amplitude * z[k];
        }
        out.samples[n] = tf.gain * acc;
    }
    return out;
}

PulseWaveform apply_correction(const PulseWaveform& w, const CorrectionFilter& c) {
    w.validate();
    require_same_rate(w.dt_ns, c.dt_ns);
    std::vector<double> x = w.samples;
    for (const auto& s : c.sections) {
        double x_prev = 0.0;
        double y_prev = 0.0;
        for (double& v : x) {
            const double y = s.b0 * v + s.b1 * x_prev + s.a1 * y_prev;
            x_prev = v;
            y_prev = y;
            v = y;
        }
    }
    PulseWaveform out = w;
    out.samples = fir_filter(x, c.fir);
    return out;
}

CorrectionFilter invert_iir(const std::vector<IirTerm>& terms, double dt_ns) {
    require(dt_ns > 0.0, ErrorKind::InvalidArgument, "sample period must be positive");
    CorrectionFilter out;
    out.dt_ns = dt_ns;
    std::vector<double> a;
    std::vector<double> lambda;
    for (const auto& t : terms) {
        require(t.amplitude > -1.0, ErrorKind::UnstableTerm, "iir amplitude <= -1 has no stable inverse");
        require(t.tau_ns > 0.0, ErrorKind::InvalidArgument, "iir tau must be positive");
        if (t.amplitude == 0.0) continue;
        a.push_back(t.amplitude);
        lambda.push_back(std::exp(-dt_ns / t.tau_ns));
    }
    const std::size_t k_terms = a.size();
    if (k_terms == 0) {
        return out;
    }
    // Numerator of 1 + sum_k a_k (1 - w) / (1 - lambda_k w) in w = z^-1.
    std::vector<double> num = poly_from_roots(lambda);
    for (std::size_t k = 0; k < k_terms; ++k) {
        std::vector<double> others;
        for (std::size_t j = 0; j < k_terms; ++j) {
            if (j != k) others.push_back(lambda[j]);
        }
        auto part = poly_from_roots(others);
        // times a_k (1 - w)
        for (std::size_t i = 0; i < part.size(); ++i) {
            num[i] += a[k] * part[i];
            num[i + 1] -= a[k] * part[i];
        }
    }
    const double c0 = num[0];
    std::vector<double> mu;
    if (k_terms == 1) {
        mu.push_back(-num[1] / c0);
    } else {
        // num(w) = c0 prod(1 - mu_i w): the mu_i are the roots of the reversed
        // polynomial c0 x^K + num1 x^(K-1) + ... + numK.
        const auto n = static_cast<Eigen::Index>(k_terms);
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            companion(0, i) = -num[static_cast<std::size_t>(i) + 1] / c0;
            if (i > 0) companion(i, i - 1) = 1.0;
        }
        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);
        require(solver.info() == Eigen::Success, ErrorKind::UnstableTerm, "could not factor the iir inverse");
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto v = solver.eigenvalues()[i];
            require(std::abs(v.imag()) <= 1e-12, ErrorKind::UnstableTerm,
                    "iir terms produce a complex pole pair in the inverse");
            mu.push_back(v.real());
        }
    }
    std::sort(mu.begin(), mu.end());
    std::sort(lambda.begin(), lambda.end());
    for (std::size_t k = 0; k < k_terms; ++k) {
        require(std::abs(mu[k]) < 1.0, ErrorKind::UnstableTerm, "iir inverse has a pole outside the unit circle");
        const double scale = k == 0 ? 1.0 / c0 : 1.0;
        out.sections.push_back({scale, -scale * lambda[k], mu[k]});
    }
    return out;
}

std::vector<double> design_fir_inverse(const std::vector<double>& s, int n_taps, double ridge) {
    require(n_taps >= 1, ErrorKind::InvalidArgument, "need at least one tap");
    require(s.size() >= static_cast<std::size_t>(n_taps), ErrorKind::InvalidArgument,
            "step response shorter than the filter");
    require(ridge >= 0.0, ErrorKind::InvalidArgument, "ridge must be non-negative");
    const double gain = s.back();
    require(std::isfinite(gain) && gain != 0.0, ErrorKind::IllConditioned, "step response settles to zero");
    const auto l = static_cast<Eigen::Index>(s.size());
    const Eigen::Index n = n_taps;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(l, n);
    for (Eigen::Index r = 0; r < l; ++r) {
        for (Eigen::Index j = 0; j <= std::min(r, n - 1); ++j) {
            m(r, j) = s[static_cast<std::size_t>(r - j)];
        }
    }
    const Eigen::MatrixXd normal = m.transpose() * m;
    // ridge is relative to the mean diagonal so it does not depend on scale
    const double lam = ridge * normal.trace() / static_cast<double>(n);
    Eigen::VectorXd prior = Eigen::VectorXd::Zero(n);
    prior[0] = 1.0 / gain;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = normal + lam * Eigen::MatrixXd::Identity(n, n);
    kkt.block(0, n, n, 1).setOnes();
    kkt.block(n, 0, 1, n).setOnes();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = m.transpose() * Eigen::VectorXd::Ones(l) + lam * prior;
    rhs[n] = 1.0 / gain;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    require(lu.isInvertible() && lu.rcond() > 1e-14, ErrorKind::IllConditioned,
            "regularized normal equations are singular");
    const Eigen::VectorXd sol = lu.solve(rhs);
    return {sol.data(), sol.data() + n};
}

double FluxMap::frequency(double phi) const {
    const double x = kPi * std::abs(std::remainder(phi, 1.0));
    const double c = std::cos(x);
    const double s = std::sin(x);
    return (f_max + ec) * std::sqrt(std::sqrt(c * c + asym * asym * s * s)) - ec;
}

double FluxMap::derivative(double phi) const {
    const double r = std::remainder(phi, 1.0);
    const double sign = r < 0.0 ? -1.0 : 1.0;
    const double x = kPi * std::abs(r);
    const double c = std::cos(x);
    const double s = std::sin(x);
    const double e2 = c * c + asym * asym * s * s;
    // d/dx e2^(1/4) = (1/4) e2^(-3/4) * 2 (asym^2 - 1) s c
    return sign * kPi * (f_max + ec) * 0.5 * (asym * asym - 1.0) * s * c * std::pow(e2, -0.75);
}

double FluxMap::flux_for(double freq) const {
    const double top = frequency(0.0);
    const double bottom = frequency(0.5);
    require(freq <= top + 1e-12 && freq >= bottom - 1e-12, ErrorKind::InvalidArgument,
            "frequency outside the tunable range");
    double lo = 0.0;
    double hi = 0.5;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (frequency(mid) > freq) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

FluxMap FluxMap::from_chain(const ChainParams& c) {
    FluxMap m;
    m.f_max = dressed_qubit_frequency(c, FluxPoint{0.0});
    m.ec = c.transmon.ec;
    m.asym = c.transmon.asym;
    return m;
}

std::vector<double> cryoscope_phases(const PulseWaveform& flux, const FluxMap& map, double phi_idle) {
    flux.validate();
    const double f0 = map.frequency(phi_idle);
    std::vector<double> phases(flux.samples.size() + 1, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < flux.samples.size(); ++k) {
        acc += 2.0 * kPi * flux.dt_ns * (map.frequency(phi_idle + flux.samples[k]) - f0);
        phases[k + 1] = acc;
    }
    return phases;
}

CryoscopeTrace cryoscope_reconstruct(const std::vector<double>& phases, double dt_ns, double t0_ns) {
    require(phases.size() >= 3, ErrorKind::InvalidArgument, "need at least three truncation times");
    require(dt_ns > 0.0, ErrorKind::InvalidArgument, "truncation spacing must be positive");
    const std::size_t n = phases.size();
    std::vector<double> unwrapped(n);
    unwrapped[0] = phases[0];
    double last_step = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double step = std::remainder(phases[k] - phases[k - 1], 2.0 * kPi);
        require(k == 1 || std::abs(step - last_step) <= kPi, ErrorKind::UnwrapFailure,
                "adjacent phase steps differ by more than pi; truncation grid too coarse");
        unwrapped[k] = unwrapped[k - 1] + step;
        last_step = step;
    }
    std::vector<double> raw(n);
    const double to_mhz = 1e3 / (2.0 * kPi);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0) {
            raw[k] = (unwrapped[1] - unwrapped[0]) / dt_ns;
        } else if (k == n - 1) {
            raw[k] = (unwrapped[k] - unwrapped[k - 1]) / dt_ns;
        } else {
            raw[k] = (unwrapped[k + 1] - unwrapped[k - 1]) / (2.0 * dt_ns);
        }
        raw[k] *= to_mhz;
    }
    CryoscopeTrace out;
    out.times_ns.resize(n);
    out.freq_mhz.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.times_ns[k] = t0_ns + dt_ns * static_cast<double>(k);
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = std::min(n - 1, k + 1);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum += raw[j];
        out.freq_mhz[k] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

std::vector<double> cryoscope_flux(const CryoscopeTrace& trace, const FluxMap& map, double phi_idle) {
    const double f0 = map.frequency(phi_idle);
    const double idle = std::abs(std::remainder(phi_idle, 1.0));
    std::vector<double> out;
    out.reserve(trace.freq_mhz.size());
    const double top = map.frequency(0.0);
    const double bottom = map.frequency(0.5);
    for (double df : trace.freq_mhz) {
        const double target = std::clamp(f0 + 1e-3 * df, bottom, top);
        double phi = map.flux_for(target);
        // polish on the local linearization
        for (int it = 0; it < 3; ++it) {
            const double d = map.derivative(phi);
            if (std::abs(d) < 1e-9) break;
            phi -= (map.frequency(phi) - target) / d;
        }
        out.push_back(phi - idle);
    }
    return out;
}

PulseWaveform net_zero_pulse(double amplitude, double half_ns, double dt_ns) {
    require(dt_ns > 0.0 && std::isfinite(amplitude), ErrorKind::InvalidArgument, "bad pulse parameters");
    const auto half = static_cast<std::size_t>(std::llround(half_ns / dt_ns));
    require(half >= 2, ErrorKind::InvalidArgument, "half duration must span at least two samples");
    // Trim the amplitude so every partial sum k * A is exact; the sample sum
    // is then exactly zero in any summation order.
    const int spare = static_cast<int>(std::ceil(std::log2(static_cast<double>(2 * half)))) + 1;
    int exponent = 0;
    const double mant = std::frexp(amplitude, &exponent);
    const double scale = std::ldexp(1.0, 53 - spare);
    const double trimmed = std::ldexp(std::round(mant * scale) / scale, exponent);
    PulseWaveform out;
    out.dt_ns = dt_ns;
    out.samples.assign(2 * half, trimmed);
    std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(half), out.samples.end(), -trimmed);
    return out;
}

PulseWaveform square_pulse(double amplitude, double length_ns, double dt_ns, double tail_ns) {
    require(dt_ns > 0.0 && length_ns > 0.0 && tail_ns >= 0.0, ErrorKind::InvalidArgument, "bad pulse parameters");
    const auto on = static_cast<std::size_t>(std::llround(length_ns / dt_ns));
    const auto off = static_cast<std::size_t>(std::llround(tail_ns / dt_ns));
    require(on >= 1, ErrorKind::InvalidArgument, "pulse shorter than one sample");
    PulseWaveform out;
    out.dt_ns = dt_ns;
    out.samples.assign(on + off, 0.0);
    std::fill(out.samples.begin(), out.samples.begin() + static_cast<std::ptrdiff_t>(on), amplitude);
    return out;
}

std::vector<double> fit_short_response(const CryoscopeTrace& measured, const PulseWaveform& played,
                                       const FluxMap& map, double phi_idle, int n_taps) {
    require(n_taps >= 1, ErrorKind::InvalidArgument, "need at least one tap");
    require(measured.freq_mhz.size() == played.samples.size() + 1, ErrorKind::InvalidArgument,
            "trace does not match the played waveform");
    const auto n = static_cast<Eigen::Index>(n_taps);
    const auto rows = static_cast<Eigen::Index>(measured.freq_mhz.size());
    auto residual = [&](const Eigen::VectorXd& r) {
        PulseWaveform out = played;
        out.samples = fir_filter(played.samples, std::vector<double>(r.data(), r.data() + r.size()));
        const auto trace = cryoscope_reconstruct(cryoscope_phases(out, map, phi_idle), played.dt_ns);
        Eigen::VectorXd e(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            e[i] = trace.freq_mhz[static_cast<std::size_t>(i)] - measured.freq_mhz[static_cast<std::size_t>(i)];
        }
        return e;
    };
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    r[0] = 1.0;
    Eigen::VectorXd e = residual(r);
    double damping = 1e-6;
    for (int it = 0; it < 50; ++it) {
        Eigen::MatrixXd jac(rows, n);
        constexpr double kStep = 1e-7;
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd rp = r;
            rp[j] += kStep;
            jac.col(j) = (residual(rp) - e) / kStep;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jte = jac.transpose() * e;
        bool improved = false;
        for (int tries = 0; tries < 10 && !improved; ++tries) {
            Eigen::MatrixXd lhs = jtj;
            lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = lhs.ldlt().solve(-jte);
            const Eigen::VectorXd trial = r + step;
            const Eigen::VectorXd et = residual(trial);
            if (et.squaredNorm() < e.squaredNorm()) {
                const double gain = e.squaredNorm() - et.squaredNorm();
                r = trial;
                e = et;
                damping = std::max(damping / 10.0, 1e-12);
                improved = true;
                if (gain < 1e-24 || step.norm() < 1e-13) it = 50;
            } else {
                damping *= 10.0;
            }
        }
        if (!improved) break;
    }
    return {r.data(), r.data() + n};
}

ExponentialFit fit_exponentials(const std::vector<double>& s, double dt_ns, double t_start_ns, int n_terms) {
    require(n_terms >= 1 && dt_ns > 0.0 && t_start_ns >= 0.0, ErrorKind::InvalidArgument, "bad fit request");
    const auto first = static_cast<std::size_t>(std::ceil(t_start_ns / dt_ns));
    require(s.size() > first + 10 * static_cast<std::size_t>(n_terms), ErrorKind::InvalidArgument,
            "step response too short for the requested fit");
    // Log-spaced sample indices weight every time scale about equally.
    std::vector<std::size_t> picks;
    const double lo = std::log(static_cast<double>(std::max<std::size_t>(first, 1)));
    const double hi = std::log(static_cast<double>(s.size() - 1));
    constexpr int kPoints = 3000;
    for (int i = 0; i < kPoints; ++i) {
        const auto k = static_cast<std::size_t>(std::llround(std::exp(lo + (hi - lo) * i / (kPoints - 1))));
        if (k >= first && (picks.empty() || k != picks.back())) picks.push_back(k);
    }
    const auto rows = static_cast<Eigen::Index>(picks.size());
    Eigen::VectorXd t(rows);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        t[i] = dt_ns * static_cast<double>(picks[static_cast<std::size_t>(i)]);
        y[i] = s[picks[static_cast<std::size_t>(i)]];
    }
    auto solve = [&](const Eigen::VectorXd& log_tau, Eigen::VectorXd& coef) {
        Eigen::MatrixXd basis(rows, n_terms + 1);
        basis.col(0).setOnes();
        for (int k = 0; k < n_terms; ++k) {
            basis.col(k + 1) = (-t.array() / std::exp(log_tau[k])).exp().matrix();
        }
        coef = basis.colPivHouseholderQr().solve(y);
        return (basis * coef - y).squaredNorm();
    };
    const double t_end = dt_ns * static_cast<double>(s.size() - 1);
    Eigen::VectorXd start(n_terms);
    const double a = std::log(std::max(3.0 * t_start_ns, 10.0 * dt_ns));
    const double b = std::log(t_end / 5.0);
    for (int k = 0; k < n_terms; ++k) {
        start[k] = n_terms == 1 ? 0.5 * (a + b) : a + (b - a) * k / (n_terms - 1);
    }
    auto objective = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd coef;
        return solve(x, coef);
    };
    SimplexOptions opts;
    opts.initial_steps.assign(static_cast<std::size_t>(n_terms), 0.5);
    opts.max_evaluations = 4000;
    opts.f_tolerance = 1e-30;
    opts.x_tolerance = 1e-10;
    SimplexResult r = nelder_mead(objective, start, opts);
    // one restart from the best point shakes off a collapsed simplex
    r = nelder_mead(objective, r.x, opts);
    Eigen::VectorXd coef;
    const double ss = solve(r.x, coef);
    ExponentialFit out;
    out.gain = coef[0];
    for (int k = 0; k < n_terms; ++k) {
        out.terms.push_back({coef[k + 1] / coef[0], std::exp(r.x[k])});
    }
    std::sort(out.terms.begin(), out.terms.end(), [](const IirTerm& p, const IirTerm& q) { return p.tau_ns < q.tau_ns; });
    out.rms = std::sqrt(ss / static_cast<double>(rows));
    return out;
}

namespace {

/// Plays `flux` through the line and reads it back through the qubit map, as
/// a frequency-resolved measurement would.
std::vector<double> measured_flux(const PulseWaveform& flux, const TransferFunction& line, const FluxMap& map,
                                  double phi_idle) {
    const auto out = apply_transfer(flux, line);
    const double idle = std::abs(std::remainder(phi_idle, 1.0));
    std::vector<double> r(out.samples.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] = map.flux_for(map.frequency(phi_idle + out.samples[k])) - idle;
    }
    return r;
}

}  // namespace

PredistortResult predistort(const TransferFunction& line, const FluxMap& map, double phi_idle,
                            const PredistortOptions& o) {
    line.validate();
    PredistortResult res;
    const double idle = std::abs(std::remainder(phi_idle, 1.0));
    res.pulse_flux = map.flux_for(map.frequency(phi_idle) - o.detuning_ghz) - idle;
    const double dt = line.dt_ns;

    // Long step, normalized by the programmed amplitude.
    const auto long_step = square_pulse(res.pulse_flux, o.long_step_ns, dt);
    auto s_long = measured_flux(long_step, line, map, phi_idle);
    for (double& v : s_long) v /= res.pulse_flux;
    res.long_fit = fit_exponentials(s_long, dt, o.fit_start_ns, o.n_terms);
    res.correction = invert_iir(res.long_fit.terms, dt);

    // Short response through the IIR stage, reconstructed by the cryoscope.
    // A few idle samples ahead of the edge let the reconstruction see it.
    auto lead = [&](PulseWaveform w) {
        w.samples.insert(w.samples.begin(), 10, 0.0);
        return w;
    };
    const auto nominal = lead(square_pulse(res.pulse_flux, o.cryoscope_ns, dt));
    const auto probe = apply_correction(nominal, res.correction);
    const auto line_out = apply_transfer(probe, line);
    auto phases = cryoscope_phases(line_out, map, phi_idle);
    if (o.phase_noise_rad > 0.0) {
        CounterRng rng(o.seed, 0);
        for (double& p : phases) p += o.phase_noise_rad * rng.normal();
    }
    res.short_trace = cryoscope_reconstruct(phases, dt);
    const auto r = fit_short_response(res.short_trace, nominal, map, phi_idle, o.response_taps);
    std::vector<double> step(static_cast<std::size_t>(std::max(4 * o.fir_taps, 4 * o.response_taps)), 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < step.size(); ++k) {
        if (k < r.size()) acc += r[k];
        step[k] = acc;
    }
    res.correction.fir = design_fir_inverse(step, o.fir_taps, o.ridge);
    return res;
}

VerifyReport verify_pulse(const TransferFunction& line, const CorrectionFilter* correction, const FluxMap& map,
                          double phi_idle, double pulse_flux, double pulse_ns, double budget_mhz) {
    constexpr std::size_t kLead = 10;
    auto ideal = square_pulse(pulse_flux, pulse_ns, line.dt_ns, 20.0);
    ideal.samples.insert(ideal.samples.begin(), kLead, 0.0);
    const std::size_t on = static_cast<std::size_t>(std::llround(pulse_ns / line.dt_ns));
    auto played = ideal;
    if (correction != nullptr) {
        played = apply_correction(played, *correction);
    }
    const auto out = apply_transfer(played, line);
    const auto seen = cryoscope_reconstruct(cryoscope_phases(out, map, phi_idle), line.dt_ns);
    const auto want = cryoscope_reconstruct(cryoscope_phases(ideal, map, phi_idle), line.dt_ns);
    const double target = map.frequency(phi_idle + pulse_flux);
    VerifyReport r;
    for (std::size_t k = kLead; k < kLead + on; ++k) {
        // trace point k + 1 sits at the end of sample k
        const double dev = seen.freq_mhz[k + 1] - want.freq_mhz[k + 1];
        r.deviation_mhz.push_back(dev);
        r.times_ns.push_back(line.dt_ns * static_cast<double>(k - kLead));
        r.max_abs_mhz = std::max(r.max_abs_mhz, std::abs(dev));
        const double true_dev = 1e3 * (map.frequency(phi_idle + out.samples[k]) - target);
        r.true_deviation_mhz.push_back(true_dev);
        r.max_abs_true_mhz = std::max(r.max_abs_true_mhz, std::abs(true_dev));
    }
    r.within_budget = r.max_abs_true_mhz < budget_mhz;
    return r;
}

}  // namespace qtwin
