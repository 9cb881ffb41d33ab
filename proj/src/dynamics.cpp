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


#include "qtwin/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "qtwin/error.hpp"
#include "qtwin/lsq.hpp"
#include "qtwin/parallel.hpp"
#include "qtwin/rng.hpp"
#include "qtwin/simplex.hpp"

namespace qtwin {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::complex<double> kI{0.0, 1.0};
// Largest phase 2 pi dt ||H|| accepted per step. Beyond it the eigenphase
// round-off per step (~1e-16 x phase) stops being negligible against the
// 1e-9 norm budget over ~1e4 steps.
constexpr double kMaxStepPhase = 100.0;

double wrap_phase(double x) {
    double w = std::remainder(x, kTwoPi);
    if (w <= -std::numbers::pi) {
        w += kTwoPi;
    }
    return w;
}

Eigen::MatrixXd lowering(int levels) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(levels, levels);
    for (int n = 1; n < levels; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Liouvillian pieces on column-stacked vectors: vec(A X B) = (B^T kron A) vec X.
Eigen::MatrixXcd commutator_super(const Eigen::MatrixXcd& h) {
    const auto n = h.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    return -kI * kTwoPi * (kron(id, h) - kron(Eigen::MatrixXcd(h.transpose()), id));
}

Eigen::MatrixXcd dissipator_super(const Eigen::MatrixXcd& c) {
    const auto n = c.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd cdc = c.adjoint() * c;
    return kron(Eigen::MatrixXcd(c.conjugate()), c) - 0.5 * kron(id, cdc) -
           0.5 * kron(Eigen::MatrixXcd(cdc.transpose()), id);
}

// Static pieces of the pair model in the common frame.
struct PairModel {
    int dim = 0;
    double omega_c = 0.0;
    Eigen::VectorXd n1, n2;
    Eigen::VectorXd static_diag;
    Eigen::MatrixXd exchange;
    Eigen::MatrixXd a1, a2;
    // Zero-flux eigenbasis, columns ordered and signed to follow the bare
    // states they connect to.
    Eigen::MatrixXd idle_vectors;
    Eigen::VectorXd idle_energies;

    explicit PairModel(const DuffingPair& pair) {
        const int l1 = pair.q[0].levels;
        const int l2 = pair.q[1].levels;
        dim = l1 * l2;
        omega_c = 0.5 * (pair.q[0].idle_ghz + pair.q[1].idle_ghz);
        a1 = kron(lowering(l1), Eigen::MatrixXd::Identity(l2, l2));
        a2 = kron(Eigen::MatrixXd::Identity(l1, l1), lowering(l2));
        n1.resize(dim);
        n2.resize(dim);
        static_diag.resize(dim);
        for (int i = 0; i < l1; ++i) {
            for (int k = 0; k < l2; ++k) {
                const int idx = i * l2 + k;
                n1[idx] = i;
                n2[idx] = k;
                static_diag[idx] = (pair.q[0].idle_ghz - omega_c) * i + (pair.q[1].idle_ghz - omega_c) * k + 0.5 * pair.q[0].anharmonicity_ghz * i * (i - 1) +
                                   0.5 * pair.q[1].anharmonicity_ghz * k * (k - 1);
            }
        }
        exchange = pair.j_qq * (a1.transpose() * a2 + a2.transpose() * a1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian(0.0, 0.0));
        idle_vectors.resize(dim, dim);
        idle_energies.resize(dim);
        std::vector<bool> taken(static_cast<std::size_t>(dim), false);
        for (int b = 0; b < dim; ++b) {
            int pick = -1;
            for (int c = 0; c < dim; ++c) {
                if (!taken[c] && (pick < 0 || std::abs(es.eigenvectors()(b, c)) > std::abs(es.eigenvectors()(b, pick)))) {
                    pick = c;
                }
            }
            taken[pick] = true;
            const double sign = es.eigenvectors()(b, pick) < 0.0 ? -1.0 : 1.0;
            idle_vectors.col(b) = sign * es.eigenvectors().col(pick);
            idle_energies[b] = es.eigenvalues()[pick];
        }
    }

    Eigen::MatrixXd hamiltonian(double d1, double d2) const {
        Eigen::MatrixXd h = exchange;
        h.diagonal() += static_diag + d1 * n1 + d2 * n2;
        return h;
    }

    // exp(i 2 pi H0 t): maps the common frame to the idle interaction frame.
    Eigen::MatrixXcd frame(double t_ns) const {
        Eigen::VectorXcd ph(dim);
        for (int i = 0; i < dim; ++i) {
            ph[i] = std::exp(kI * (kTwoPi * idle_energies[i] * t_ns));
        }
        const Eigen::MatrixXcd v = idle_vectors.cast<std::complex<double>>();
        return v * ph.asDiagonal() * v.transpose();
    }
};

void check_trajectories(const PulseWaveform& f1, const PulseWaveform& f2) {
    f1.validate();
    f2.validate();
    require(f1.dt_ns == f2.dt_ns, ErrorKind::SampleRateMismatch, "flux trajectories differ in sample period");
    require(f1.samples.size() == f2.samples.size(), ErrorKind::InvalidArgument,
            "flux trajectories differ in length");
}

Eigen::MatrixXcd step_unitary(const Eigen::MatrixXd& h, double dt) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const double spread = es.eigenvalues().cwiseAbs().maxCoeff();
    require(kTwoPi * dt * spread <= kMaxStepPhase, ErrorKind::StepTooLarge,
            "sample period too long for the Hamiltonian norm");
    Eigen::VectorXcd phases(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        phases[i] = std::exp(-kI * (kTwoPi * es.eigenvalues()[i] * dt));
    }
    const Eigen::MatrixXcd v = es.eigenvectors().cast<std::complex<double>>();
    return v * phases.asDiagonal() * v.transpose();
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m) { return m.exp(); }

// m^n by repeated squaring; runs of identical samples (buffers, square
// pulses, long idles) then cost log n products instead of n.
Eigen::MatrixXcd matrix_power(const Eigen::MatrixXcd& m, std::size_t n) {
    Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    Eigen::MatrixXcd base = m;
    while (n > 0) {
        if (n & 1u) {
            result = base * result;
        }
        n >>= 1u;
        if (n > 0) {
            base = base * base;
        }
    }
    return result;
}

// Length of the run of identical (flux1, flux2) samples starting at k.
std::size_t run_length(const PulseWaveform& f1, const PulseWaveform& f2, std::size_t k) {
    std::size_t n = 1;
    while (k + n < f1.samples.size() && f1.samples[k + n] == f1.samples[k] && f2.samples[k + n] == f2.samples[k]) {
        ++n;
    }
    return n;
}

}  // namespace

double DuffingMode::detuning(double flux_offset) const {
    return map.frequency(phi_idle + flux_offset) - map.frequency(phi_idle);
}

double DuffingMode::offset_for(double freq_ghz) const {
    // Frequency relative to the map's own idle value, so that a map that is
    // slightly off the nominal idle frequency still hits the target detuning.
    const double target = map.frequency(phi_idle) + (freq_ghz - idle_ghz);
    return map.flux_for(target) - phi_idle;
}

void DuffingPair::validate() const {
    for (const auto& m : q) {
        require(m.levels >= 3, ErrorKind::InvalidArgument, "Duffing modes need at least three levels");
        require(m.anharmonicity_ghz < 0.0, ErrorKind::InvalidArgument, "anharmonicity must be negative");
        require(m.idle_ghz > 0.0, ErrorKind::InvalidArgument, "idle frequency must be positive");
    }
    require(j_qq >= 0.0, ErrorKind::InvalidArgument, "j_qq must be non-negative");
    require(interaction_ghz > 0.0, ErrorKind::InvalidArgument, "interaction frequency must be positive");
}

DuffingPair DuffingPair::device_a() {
    DuffingPair p;
    // asym chosen so that the map's minimum equals the measured ge at 1/2.
    p.q[0].idle_ghz = 4.421;
    p.q[0].anharmonicity_ghz = -0.159;
    p.q[0].map = FluxMap{5.415, 0.154, std::pow((4.421 + 0.154) / (5.415 + 0.154), 2)};
    p.q[0].phi_idle = 0.5;
    p.q[1].idle_ghz = 5.662;
    p.q[1].anharmonicity_ghz = -0.158;
    p.q[1].map = FluxMap{5.662, 0.154, std::pow((4.736 + 0.154) / (5.662 + 0.154), 2)};
    p.q[1].phi_idle = 0.0;
    p.j_qq = 0.0067;
    p.interaction_ghz = 5.0;
    return p;
}

void QubitNoise::validate() const {
    require(t1_us > 0.0 && t2_star_us > 0.0 && t2_echo_us > 0.0, ErrorKind::InvalidArgument,
            "coherence times must be positive");
    require(t2_star_us <= 2.0 * t1_us && t2_echo_us <= 2.0 * t1_us, ErrorKind::InvalidArgument,
            "t2 cannot exceed 2 t1");
}

double QubitNoise::dephasing_rate(T2Kind kind) const {
    const double t2 = kind == T2Kind::Star ? t2_star_us : t2_echo_us;
    return std::max(0.0, 1.0 / (t2 * 1e3) - 0.5 / (t1_us * 1e3));
}

void NoiseParams::validate() const {
    for (const auto& n : q) {
        n.validate();
    }
}

NoiseParams NoiseParams::device_a() {
    NoiseParams n;
    n.q[0] = QubitNoise{83.0, 63.0, 109.0};
    n.q[1] = QubitNoise{50.0, 50.0, 77.0};
    return n;
}

Eigen::MatrixXcd pair_propagator(const DuffingPair& pair, const PulseWaveform& flux1, const PulseWaveform& flux2) {
    pair.validate();
    check_trajectories(flux1, flux2);
    const PairModel model(pair);
    const double dt = flux1.dt_ns;
    std::map<std::pair<double, double>, Eigen::MatrixXcd> cache;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(model.dim, model.dim);
    for (std::size_t k = 0; k < flux1.samples.size();) {
        const auto key = std::make_pair(flux1.samples[k], flux2.samples[k]);
        auto it = cache.find(key);
        if (it == cache.end()) {
            const double d1 = pair.q[0].detuning(key.first);
            const double d2 = pair.q[1].detuning(key.second);
            it = cache.emplace(key, step_unitary(model.hamiltonian(d1, d2), dt)).first;
        }
        const std::size_t n = run_length(flux1, flux2, k);
        u = (n == 1 ? it->second : matrix_power(it->second, n)) * u;
        k += n;
    }
    const double t0 = flux1.t0_ns;
    const double t1 = t0 + dt * static_cast<double>(flux1.samples.size());
    return model.frame(t1) * u * model.frame(t0).adjoint();
}

Eigen::VectorXcd propagate(const DuffingPair& pair, const PulseWaveform& flux1, const PulseWaveform& flux2,
                           const Eigen::VectorXcd& psi0) {
    require(psi0.size() == pair.dim(), ErrorKind::InvalidArgument, "state dimension mismatch");
    require(std::abs(psi0.norm() - 1.0) < 1e-9, ErrorKind::InvalidArgument, "initial state not normalized");
    return pair_propagator(pair, flux1, flux2) * psi0;
}

Eigen::MatrixXcd pair_superoperator(const DuffingPair& pair, const PulseWaveform& flux1,
                                    const PulseWaveform& flux2, const NoiseParams& noise) {
    pair.validate();
    noise.validate();
    check_trajectories(flux1, flux2);
    const PairModel model(pair);
    const double dt = flux1.dt_ns;
    const Eigen::MatrixXcd a1 = model.a1.cast<std::complex<double>>();
    const Eigen::MatrixXcd a2 = model.a2.cast<std::complex<double>>();
    const Eigen::MatrixXcd n1 = model.n1.cast<std::complex<double>>().asDiagonal();
    const Eigen::MatrixXcd n2 = model.n2.cast<std::complex<double>>().asDiagonal();
    const Eigen::MatrixXcd relax = noise.q[0].relaxation_rate() * dissipator_super(a1) +
                                   noise.q[1].relaxation_rate() * dissipator_super(a2);
    const Eigen::MatrixXcd deph1 = 2.0 * dissipator_super(n1);
    const Eigen::MatrixXcd deph2 = 2.0 * dissipator_super(n2);

    const auto d2 = static_cast<Eigen::Index>(model.dim) * model.dim;
    std::map<std::pair<double, double>, Eigen::MatrixXcd> cache;
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(d2, d2);
    for (std::size_t k = 0; k < flux1.samples.size();) {
        const auto key = std::make_pair(flux1.samples[k], flux2.samples[k]);
        auto it = cache.find(key);
        if (it == cache.end()) {
            const Eigen::MatrixXd h =
                model.hamiltonian(pair.q[0].detuning(key.first), pair.q[1].detuning(key.second));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
            require(kTwoPi * dt * es.eigenvalues().cwiseAbs().maxCoeff() <= kMaxStepPhase,
                    ErrorKind::StepTooLarge, "sample period too long for the Hamiltonian norm");
            const double g1 = noise.q[0].dephasing_rate(key.first != 0.0 ? noise.pulse_t2 : noise.idle_t2);
            const double g2 = noise.q[1].dephasing_rate(key.second != 0.0 ? noise.pulse_t2 : noise.idle_t2);
            const Eigen::MatrixXcd l =
                commutator_super(h.cast<std::complex<double>>()) + relax + g1 * deph1 + g2 * deph2;
            it = cache.emplace(key, expm(l * dt)).first;
        }
        const std::size_t n = run_length(flux1, flux2, k);
        s = (n == 1 ? it->second : matrix_power(it->second, n)) * s;
        k += n;
    }
    const double t0 = flux1.t0_ns;
    const double t1 = t0 + dt * static_cast<double>(flux1.samples.size());
    // rho -> W rho W^dagger is (conj(W) kron W) on vec(rho).
    const Eigen::MatrixXcd w0 = model.frame(t0).adjoint();
    const Eigen::MatrixXcd w1 = model.frame(t1);
    return kron(Eigen::MatrixXcd(w1.conjugate()), w1) * s * kron(Eigen::MatrixXcd(w0.conjugate()), w0);
}

Eigen::MatrixXcd lindblad_propagate(const DuffingPair& pair, const PulseWaveform& flux1,
                                    const PulseWaveform& flux2, const NoiseParams& noise,
                                    const Eigen::MatrixXcd& rho0) {
    const int d = pair.dim();
    require(rho0.rows() == d && rho0.cols() == d, ErrorKind::InvalidArgument, "density matrix dimension mismatch");
    require(std::abs(rho0.trace() - 1.0) < 1e-9, ErrorKind::InvalidArgument, "density matrix trace must be 1");
    const Eigen::MatrixXcd s = pair_superoperator(pair, flux1, flux2, noise);
    const Eigen::VectorXcd v = s * Eigen::Map<const Eigen::VectorXcd>(rho0.data(), rho0.size());
    Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
    return rho;
}

SpectroscopyResult spectroscopy_lines(const DuffingPair& pair, double flux1_offset,
                                      const std::vector<double>& flux2_offsets, double noise_ghz,
                                      std::uint64_t seed) {
    pair.validate();
    require(flux2_offsets.size() >= 8, ErrorKind::EmptyGrid, "spectroscopy needs at least 8 flux points");
    SpectroscopyResult out;
    out.flux = flux2_offsets;
    const std::size_t n = flux2_offsets.size();
    out.lower_ghz.resize(n);
    out.upper_ghz.resize(n);
    const double w1 = pair.q[0].idle_ghz + pair.q[0].detuning(flux1_offset);
    CounterRng rng(seed, 0x5bec);
    for (std::size_t i = 0; i < n; ++i) {
        const double w2 = pair.q[1].idle_ghz + pair.q[1].detuning(flux2_offsets[i]);
        const double mean = 0.5 * (w1 + w2);
        const double half = std::hypot(0.5 * (w1 - w2), pair.j_qq);
        out.lower_ghz[i] = mean - half + noise_ghz * rng.normal();
        out.upper_ghz[i] = mean + half + noise_ghz * rng.normal();
    }

    std::size_t imin = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (out.upper_ghz[i] - out.lower_ghz[i] < out.upper_ghz[imin] - out.lower_ghz[imin]) {
            imin = i;
        }
    }
    require(imin != 0 && imin + 1 != n, ErrorKind::NoCrossing, "minimum branch separation at sweep edge");

    // Qubit 1 is constant, so the branch sum gives qubit 2 directly:
    // w2 = upper + lower - w1. A cubic in scaled flux seeds the detuning.
    const double c0 = 0.5 * (out.upper_ghz[imin] + out.lower_ghz[imin]);
    const double mid = 0.5 * (flux2_offsets.front() + flux2_offsets.back());
    const double span = std::max(0.5 * std::abs(flux2_offsets.back() - flux2_offsets.front()), 1e-12);
    Eigen::MatrixXd basis(n, 4);
    Eigen::VectorXd target(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (flux2_offsets[i] - mid) / span;
        basis.row(i) << 1.0, u, u * u, u * u * u;
        target[i] = out.upper_ghz[i] + out.lower_ghz[i] - 2.0 * c0;
    }
    const Eigen::VectorXd poly = basis.colPivHouseholderQr().solve(target);

    Eigen::VectorXd start(6);
    start << c0, poly[0], poly[1], poly[2], poly[3],
        std::max(out.upper_ghz[imin] - out.lower_ghz[imin], 1e-6);
    auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = basis.row(i).dot(p.segment<4>(1));
            const double half = 0.5 * std::hypot(delta, p[5]);
            r[2 * i] = p[0] + 0.5 * delta - half - out.lower_ghz[i];
            r[2 * i + 1] = p[0] + 0.5 * delta + half - out.upper_ghz[i];
        }
        return r;
    };
    const auto fit = levenberg_marquardt(residuals, start, true);
    require(fit.params.allFinite(), ErrorKind::FitDivergence, "hyperbola fit diverged");
    out.two_j_ghz = std::abs(fit.params[5]);
    out.two_j_stderr_ghz = fit.stderr_of(5);
    return out;
}

std::array<double, 2> interaction_offsets(const DuffingPair& pair) {
    pair.validate();
    return {pair.q[0].offset_for(pair.interaction_ghz),
            pair.q[1].offset_for(pair.interaction_ghz - pair.q[1].anharmonicity_ghz)};
}

ChevronMap chevron_scan(const DuffingPair& pair, const std::vector<double>& durations_ns,
                        const std::vector<double>& amplitudes, double dt_ns) {
    pair.validate();
    require(!durations_ns.empty() && !amplitudes.empty(), ErrorKind::EmptyGrid, "chevron grids must be non-empty");
    require(dt_ns > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
    const PairModel model(pair);
    const double a1 = interaction_offsets(pair)[0];
    ChevronMap out;
    out.durations_ns = durations_ns;
    out.amplitudes = amplitudes;
    out.p_g.assign(amplitudes.size(), std::vector<double>(durations_ns.size(), 0.0));
    const int ee = pair.index(1, 1);
    const int l2 = pair.q[1].levels;
    parallel_for(amplitudes.size(), [&](std::size_t a) {
        // A square pulse is one constant Hamiltonian, so every duration
        // follows from a single eigendecomposition.
        const Eigen::MatrixXd h = model.hamiltonian(pair.q[0].detuning(a1), pair.q[1].detuning(amplitudes[a]));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const Eigen::MatrixXd& v = es.eigenvectors();
        const Eigen::VectorXd c = v.row(ee).transpose();
        for (std::size_t d = 0; d < durations_ns.size(); ++d) {
            const double t = dt_ns * std::round(durations_ns[d] / dt_ns);
            Eigen::VectorXcd coeff(model.dim);
            for (int i = 0; i < model.dim; ++i) {
                coeff[i] = c[i] * std::exp(-kI * (kTwoPi * es.eigenvalues()[i] * t));
            }
            const Eigen::VectorXcd psi = v.cast<std::complex<double>>() * coeff;
            double pg = 0.0;
            for (int k = 0; k < l2; ++k) {
                pg += std::norm(psi[k]);
            }
            out.p_g[a][d] = pg;
        }
    });
    return out;
}

std::array<PulseWaveform, 2> CzPulse::waveforms() const {
    require(half_ns > 0.0 && dt_ns > 0.0 && buffer_ns >= 0.0 && ramp_ns >= 0.0 && mid_ns >= 0.0,
            ErrorKind::InvalidArgument,
            "CZ pulse timing must be positive");
    const double ramp = std::min(ramp_ns, 0.5 * half_ns);
    auto half_shape = [&](double t) {
        if (t <= 0.0 || t >= half_ns) {
            return 0.0;
        }
        if (ramp <= 0.0) {
            return 1.0;
        }
        const double edge = std::min(t, half_ns - t);
        if (edge < ramp) {
            return 0.5 * (1.0 - std::cos(std::numbers::pi * edge / ramp));
        }
        return 1.0;
    };
    constexpr int kSubsamples = 64;
    const auto nb = static_cast<std::size_t>(std::llround(buffer_ns / dt_ns));
    const double length = 2.0 * half_ns + mid_ns;
    const auto np = static_cast<std::size_t>(std::ceil(length / dt_ns - 1e-9));
    std::array<PulseWaveform, 2> out;
    for (int q = 0; q < 2; ++q) {
        out[q].dt_ns = dt_ns;
        out[q].samples.assign(2 * nb + np, 0.0);
        for (std::size_t k = 0; k < np; ++k) {
            // Interval average rather than a point sample, so the waveform
            // (and every calibration objective) varies smoothly with half_ns.
            double s = 0.0;
            for (int m = 0; m < kSubsamples; ++m) {
                const double t = (static_cast<double>(k) + (m + 0.5) / kSubsamples) * dt_ns;
                s += t < half_ns ? half_shape(t) : -half_shape(t - half_ns - mid_ns);
            }
            out[q].samples[nb + k] = amplitude[q] * s / kSubsamples;
        }
    }
    return out;
}

Eigen::MatrixXcd idle_frame(const DuffingPair& pair, double t_ns) {
    pair.validate();
    return PairModel(pair).frame(t_ns);
}

Eigen::MatrixXd idle_eigenbasis(const DuffingPair& pair) {
    pair.validate();
    return PairModel(pair).idle_vectors;
}

Eigen::Matrix4cd computational_block(const DuffingPair& pair, const Eigen::MatrixXcd& u,
                                     const std::array<double, 2>& virtual_z) {
    const Eigen::MatrixXcd v = idle_eigenbasis(pair).cast<std::complex<double>>();
    const Eigen::MatrixXcd ud = v.transpose() * u * v;
    const std::array<int, 4> idx{pair.index(0, 0), pair.index(0, 1), pair.index(1, 0), pair.index(1, 1)};
    const std::array<double, 4> frame{0.0, virtual_z[1], virtual_z[0], virtual_z[0] + virtual_z[1]};
    Eigen::Matrix4cd out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            out(r, c) = std::exp(kI * frame[r]) * ud(idx[r], idx[c]);
        }
    }
    return out;
}

GateReport evaluate_cz(const DuffingPair& pair, const CzPulse& pulse) {
    const auto w = pulse.waveforms();
    const Eigen::MatrixXcd u = pair_propagator(pair, w[0], w[1]);
    const Eigen::Matrix4cd b = computational_block(pair, u, {0.0, 0.0});
    GateReport r;
    const double gg = std::arg(b(0, 0));
    const double ge = std::arg(b(1, 1));
    const double eg = std::arg(b(2, 2));
    const double ee = std::arg(b(3, 3));
    r.dynamic_phase = {wrap_phase(eg - gg), wrap_phase(ge - gg)};
    r.conditional_phase = wrap_phase(ee - eg - ge + gg);
    r.leakage = std::clamp(1.0 - 0.25 * b.cwiseAbs2().sum(), 0.0, 1.0);
    r.swap = std::clamp(0.25 * (b.cwiseAbs2().sum() - b.diagonal().cwiseAbs2().sum()), 0.0, 1.0);
    r.total_ns = pulse.total_ns();
    return r;
}

GateReport evaluate_cz(const DuffingPair& pair, const CzPulse& pulse, const NoiseParams& noise) {
    GateReport r = evaluate_cz(pair, pulse);
    const auto w = pulse.waveforms();
    const Eigen::MatrixXcd v = idle_eigenbasis(pair).cast<std::complex<double>>();
    const Eigen::MatrixXcd vt = v.transpose();
    const Eigen::MatrixXcd s = kron(vt, vt) * pair_superoperator(pair, w[0], w[1], noise) * kron(v, v);
    const int d = pair.dim();
    const std::array<int, 4> idx{pair.index(0, 0), pair.index(0, 1), pair.index(1, 0), pair.index(1, 1)};
    const std::array<double, 4> vz{0.0, -r.dynamic_phase[1], -r.dynamic_phase[0],
                                   -r.dynamic_phase[0] - r.dynamic_phase[1]};
    const std::array<double, 4> target{1.0, 1.0, 1.0, -1.0};
    // Process fidelity against CZ on the computational subspace; leaked
    // population simply counts as error.
    std::complex<double> acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const Eigen::Index col = idx[i] + static_cast<Eigen::Index>(idx[j]) * d;
            acc += target[i] * target[j] * std::exp(kI * (vz[i] - vz[j])) * s(col, col);
        }
    }
    const double f_pro = acc.real() / 16.0;
    r.gate_error = 1.0 - (4.0 * f_pro + 1.0) / 5.0;
    return r;
}

CzCalibration calibrate_cz(const DuffingPair& pair, const std::optional<NoiseParams>& noise,
                           const CzCalibrationOptions& options) {
    pair.validate();
    require(options.coarse_points >= 2, ErrorKind::InvalidArgument, "coarse grid needs at least two points");
    const double j_ang = kTwoPi * pair.j_qq;
    const double t_swap = j_ang > 0.0 ? std::numbers::pi / (std::sqrt(2.0) * j_ang) : INFINITY;
    require(t_swap < 2000.0, ErrorKind::CalibrationFailed, "no entangling interaction available (j_qq too small)");

    const auto offsets = interaction_offsets(pair);
    const auto& q2 = pair.q[1];
    const double ef_target = pair.interaction_ghz;
    // Qubit 2's amplitude is searched as a detuning of its ef transition from
    // the interaction frequency, in units of j_qq.
    auto amp2_for = [&](double detune_j) {
        return q2.offset_for(ef_target + detune_j * pair.j_qq - q2.anharmonicity_ghz);
    };
    auto make_pulse = [&](double detune_j, double half, double mid) {
        CzPulse p;
        p.amplitude = {offsets[0], amp2_for(detune_j)};
        p.half_ns = half;
        p.mid_ns = mid;
        p.ramp_ns = options.ramp_ns;
        p.buffer_ns = options.buffer_ns;
        p.dt_ns = options.dt_ns;
        return p;
    };
    auto feasible = [&](double detune_j, double half, double mid) {
        return half > options.dt_ns && std::abs(detune_j) <= 20.0 && mid >= 0.0;
    };
    auto objective = [&](double detune_j, double half, double mid) {
        if (!feasible(detune_j, half, mid)) {
            return 1e6;
        }
        const GateReport r = evaluate_cz(pair, make_pulse(detune_j, half, mid));
        const double dphi = wrap_phase(r.conditional_phase - std::numbers::pi);
        return options.phase_weight * dphi * dphi + options.leakage_weight * r.leakage +
               options.swap_weight * r.swap;
    };

    // Stage 1: leakage alone on a grid around the chevron's first recovery,
    // each half carrying one full |ee> -> |gf> transfer.
    const int m = options.coarse_points;
    const double h_lo = 0.5 * t_swap;
    const double h_hi = 0.5 * t_swap + 2.0 * options.ramp_ns;
    auto grid_point = [&](std::size_t k) {
        return std::make_pair(-2.0 + 4.0 * static_cast<double>(k / m) / (m - 1),
                              h_lo + (h_hi - h_lo) * static_cast<double>(k % m) / (m - 1));
    };
    std::vector<double> grid(static_cast<std::size_t>(m * m));
    parallel_for(grid.size(), [&](std::size_t k) {
        const auto [dj, h] = grid_point(k);
        grid[k] = evaluate_cz(pair, make_pulse(dj, h, 0.0)).leakage;
    });
    const auto best = static_cast<std::size_t>(std::min_element(grid.begin(), grid.end()) - grid.begin());
    const auto [dj0, h0] = grid_point(best);

    // Stage 2: the dwell between the halves over one period of the idle
    // |gf> - |ee> splitting, which spans every intermediate phase.
    const double split = std::abs(pair.q[1].idle_ghz + pair.q[1].anharmonicity_ghz - pair.q[0].idle_ghz);
    const double period = 1.0 / std::max(split, 0.05);
    std::vector<double> dwell(static_cast<std::size_t>(2 * m));
    parallel_for(dwell.size(), [&](std::size_t k) {
        dwell[k] = objective(dj0, h0, period * static_cast<double>(k) / static_cast<double>(dwell.size()));
    });
    const auto kbest = static_cast<std::size_t>(std::min_element(dwell.begin(), dwell.end()) - dwell.begin());
    const double mid0 = period * static_cast<double>(kbest) / static_cast<double>(dwell.size());

    // Stage 3: simplex in (detuning / j, half / 10 ns, dwell / 1 ns).
    SimplexOptions so;
    so.initial_steps = {4.0 / (m - 1), 0.2 * options.ramp_ns / (m - 1), period / static_cast<double>(dwell.size())};
    so.max_evaluations = options.max_evaluations;
    so.f_tolerance = 1e-16;
    so.x_tolerance = 1e-10;
    // A stalled simplex is restarted from its best vertex with fresh edges.
    Eigen::VectorXd start = Eigen::Vector3d(dj0, h0 / 10.0, mid0);
    SimplexResult res;
    int simplex_evaluations = 0;
    double previous = INFINITY;
    for (int restart = 0; restart < 4; ++restart) {
        res = nelder_mead([&](const Eigen::VectorXd& x) { return objective(x[0], 10.0 * x[1], x[2]); }, start, so);
        simplex_evaluations += res.evaluations;
        start = res.x;
        if (res.value <= 1e-3 * options.threshold || res.value > 0.9 * previous) {
            break;
        }
        previous = res.value;
    }

    CzCalibration out;
    out.pulse = make_pulse(res.x[0], 10.0 * res.x[1], res.x[2]);
    out.objective = res.value;
    out.evaluations = static_cast<int>(grid.size() + dwell.size()) + simplex_evaluations;
    require(out.objective <= options.threshold, ErrorKind::CalibrationFailed,
            "objective " + std::to_string(out.objective) + " above threshold after search");
    out.report = noise ? evaluate_cz(pair, out.pulse, *noise) : evaluate_cz(pair, out.pulse);
    out.virtual_z = {-out.report.dynamic_phase[0], -out.report.dynamic_phase[1]};
    return out;
}

SingleQubitGate single_qubit_gate(double angle, double phase, double duration_ns, double dt_ns) {
    require(duration_ns > 0.0 && dt_ns > 0.0, ErrorKind::InvalidArgument, "gate duration must be positive");
    SingleQubitGate g;
    g.angle = angle;
    g.phase = phase;
    g.duration_ns = duration_ns;
    g.dt_ns = dt_ns;
    const auto n = static_cast<std::size_t>(std::max<long long>(1, std::llround(duration_ns / dt_ns)));
    g.envelope.resize(n);
    double area = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::sin(std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(n));
        g.envelope[k] = s * s;
        area += g.envelope[k];
    }
    const double scale = angle / (kTwoPi * dt_ns * area);
    for (auto& e : g.envelope) {
        e *= scale;
    }
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    g.ideal << c, -kI * s * std::exp(-kI * phase), -kI * s * std::exp(kI * phase), c;
    return g;
}

Eigen::Matrix2cd virtual_z(double theta) {
    Eigen::Matrix2cd z = Eigen::Matrix2cd::Zero();
    z(0, 0) = std::exp(-0.5 * kI * theta);
    z(1, 1) = std::exp(0.5 * kI * theta);
    return z;
}

namespace {

Eigen::MatrixXcd drive_hamiltonian(const DuffingMode& mode, double rabi, double phase, double detuning = 0.0) {
    const int l = mode.levels;
    const Eigen::MatrixXcd a = lowering(l).cast<std::complex<double>>();
    Eigen::MatrixXcd h = 0.5 * rabi * (std::exp(kI * phase) * a.adjoint() + std::exp(-kI * phase) * a);
    for (int n = 0; n < l; ++n) {
        h(n, n) += detuning * n + 0.5 * mode.anharmonicity_ghz * n * (n - 1);
    }
    return h;
}

Eigen::MatrixXcd mode_liouvillian(const DuffingMode& mode, const Eigen::MatrixXcd& h, const QubitNoise& noise,
                                  T2Kind kind) {
    const int l = mode.levels;
    const Eigen::MatrixXcd a = lowering(l).cast<std::complex<double>>();
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(l, l);
    for (int k = 0; k < l; ++k) {
        n(k, k) = k;
    }
    return commutator_super(h) + noise.relaxation_rate() * dissipator_super(a) +
           2.0 * noise.dephasing_rate(kind) * dissipator_super(n);
}

}  // namespace

Eigen::MatrixXcd single_qubit_propagator(const DuffingMode& mode, const SingleQubitGate& gate) {
    require(mode.levels >= 2, ErrorKind::InvalidArgument, "mode needs at least two levels");
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(mode.levels, mode.levels);
    for (double rabi : gate.envelope) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(drive_hamiltonian(mode, rabi, gate.phase));
        require(kTwoPi * gate.dt_ns * es.eigenvalues().cwiseAbs().maxCoeff() <= kMaxStepPhase,
                ErrorKind::StepTooLarge, "sample period too long for the Hamiltonian norm");
        Eigen::VectorXcd ph(mode.levels);
        for (int i = 0; i < mode.levels; ++i) {
            ph[i] = std::exp(-kI * (kTwoPi * es.eigenvalues()[i] * gate.dt_ns));
        }
        u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint() * u;
    }
    return u;
}

Eigen::MatrixXcd single_qubit_superoperator(const DuffingMode& mode, const SingleQubitGate& gate,
                                            const QubitNoise& noise, T2Kind kind, double idle_after_ns) {
    noise.validate();
    const int l = mode.levels;
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(l * l, l * l);
    for (double rabi : gate.envelope) {
        s = expm(mode_liouvillian(mode, drive_hamiltonian(mode, rabi, gate.phase), noise, kind) * gate.dt_ns) * s;
    }
    if (idle_after_ns > 0.0) {
        s = expm(mode_liouvillian(mode, drive_hamiltonian(mode, 0.0, 0.0), noise, kind) * idle_after_ns) * s;
    }
    return s;
}

RelaxometryResult relaxometry(RelaxometryKind kind, const std::vector<double>& times_us, const QubitNoise& noise,
                              double detuning_mhz, double anharmonicity_ghz) {
    noise.validate();
    require(times_us.size() >= 4, ErrorKind::EmptyGrid, "relaxometry needs at least four times");
    require(std::is_sorted(times_us.begin(), times_us.end()) && times_us.front() >= 0.0,
            ErrorKind::InvalidArgument, "times must be ascending and non-negative");
    DuffingMode mode;
    mode.anharmonicity_ghz = anharmonicity_ghz;
    const int l = mode.levels;
    const Eigen::MatrixXcd gen =
        mode_liouvillian(mode, drive_hamiltonian(mode, 0.0, 0.0, 1e-3 * detuning_mhz), noise, T2Kind::Star);

    // Ideal pulses act on the g-e block only.
    auto pulse = [&](double angle) {
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(l, l);
        u.topLeftCorner<2, 2>() = single_qubit_gate(angle, 0.0).ideal;
        return Eigen::MatrixXcd(kron(Eigen::MatrixXcd(u.conjugate()), u));
    };
    const Eigen::MatrixXcd x90 = pulse(0.5 * std::numbers::pi);
    const Eigen::MatrixXcd x180 = pulse(std::numbers::pi);

    RelaxometryResult out;
    out.times_us = times_us;
    out.population.resize(times_us.size());
    const Eigen::Index ee = 1 + l;
    parallel_for(times_us.size(), [&](std::size_t i) {
        const double t = times_us[i] * 1e3;
        Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(l * l);
        switch (kind) {
            case RelaxometryKind::T1:
                rho[ee] = 1.0;
                rho = expm(gen * t) * rho;
                break;
            case RelaxometryKind::Ramsey:
                rho[0] = 1.0;
                rho = x90 * expm(gen * t) * x90 * rho;
                break;
            case RelaxometryKind::Echo: {
                rho[0] = 1.0;
                const Eigen::MatrixXcd half = expm(gen * (0.5 * t));
                rho = x90 * half * x180 * half * x90 * rho;
                break;
            }
        }
        out.population[i] = rho[ee].real();
    });

    const auto n = static_cast<Eigen::Index>(times_us.size());
    const Eigen::Map<const Eigen::VectorXd> t(times_us.data(), n);
    const Eigen::Map<const Eigen::VectorXd> y(out.population.data(), n);
    const double span = times_us.back() - times_us.front();
    require(span > 0.0, ErrorKind::InvalidArgument, "times must span a positive interval");

    LeastSquaresResult fit;
    if (kind == RelaxometryKind::Ramsey) {
        // Periodogram seed for the fringe frequency.
        const double nyquist = 0.5 * static_cast<double>(n - 1) / span;
        const double mean = y.mean();
        double best_f = 0.0;
        double best_power = -1.0;
        const int nf = 4 * static_cast<int>(n);
        for (int k = 0; k <= nf; ++k) {
            const double f = nyquist * k / nf;
            std::complex<double> acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += (y[i] - mean) * std::exp(-kI * (kTwoPi * f * t[i]));
            }
            if (std::norm(acc) > best_power) {
                best_power = std::norm(acc);
                best_f = f;
            }
        }
        Eigen::VectorXd p0(5);
        p0 << 0.5, span / 2.0, best_f, 0.0, 0.5;
        auto model = [&](const Eigen::VectorXd& p) {
            return Eigen::VectorXd(
                (p[0] * (-t.array() / p[1]).exp() * (kTwoPi * p[2] * t.array() + p[3]).cos() + p[4]).matrix() - y);
        };
        fit = levenberg_marquardt(model, p0, true);
        require(fit.params.allFinite() && fit.params[1] > 0.0, ErrorKind::FitDivergence, "Ramsey fit diverged");
        out.fringe_mhz = std::abs(fit.params[2]);
    } else {
        Eigen::VectorXd p0(3);
        p0 << y[0] - y[n - 1], span / 2.0, y[n - 1];
        auto model = [&](const Eigen::VectorXd& p) {
            return Eigen::VectorXd((p[0] * (-t.array() / p[1]).exp() + p[2]).matrix() - y);
        };
        fit = levenberg_marquardt(model, p0, true);
        require(fit.params.allFinite() && fit.params[1] > 0.0, ErrorKind::FitDivergence, "decay fit diverged");
    }
    out.fitted_us = fit.params[1];
    out.fitted_stderr_us = fit.stderr_of(1);
    return out;
}

}  // namespace qtwin
