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

#include "qtwin/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qtwin/error.hpp"

namespace qtwin {

void TransmonParams::validate() const {
    require(ej_max > 0.0, ErrorKind::InvalidArgument, "ej_max must be positive");
    require(ec > 0.0, ErrorKind::InvalidArgument, "ec must be positive");
    require(ej_max / ec > 10.0, ErrorKind::InvalidArgument, "ej_max / ec must exceed 10 (transmon regime)");
    require(asym >= 0.0 && asym < 1.0, ErrorKind::InvalidArgument, "asym must lie in [0, 1)");
    require(charge_cutoff >= 10, ErrorKind::InvalidArgument, "charge_cutoff must be at least 10");
    require(levels_kept >= 3, ErrorKind::InvalidArgument, "levels_kept must be at least 3");
    require(levels_kept <= 2 * charge_cutoff + 1, ErrorKind::Truncation,
            "levels_kept exceeds the charge-basis dimension");
}

void ChainParams::validate() const {
    transmon.validate();
    require(omega_r_bare >= 0.0 && omega_p >= 0.0 && g_qr >= 0.0 && j_rp >= 0.0 && kappa_p >= 0.0 &&
                kappa_int >= 0.0,
            ErrorKind::InvalidArgument, "chain rates and frequencies must be non-negative");
    require(n_r >= 3 && n_p >= 3, ErrorKind::InvalidArgument, "photon truncations must be at least 3");
}

double DressedSpectrum::energy_of(const BareLabel& label) const {
    const int bare = dims.index(label);
    const int k = eigen_index_by_bare.at(static_cast<std::size_t>(bare));
    if (k < 0 || overlaps[static_cast<std::size_t>(k)] <= 0.5) {
        std::ostringstream msg;
        msg << "state |" << label.transmon << "," << label.resonator << "," << label.filter
            << "> has no eigenstate with overlap above 1/2";
        throw Error(ErrorKind::LabelAmbiguity, msg.str());
    }
    return energies[k];
}

double DressedSpectrum::overlap_of(const BareLabel& label) const {
    const int k = eigen_index_by_bare.at(static_cast<std::size_t>(dims.index(label)));
    return k < 0 ? 0.0 : overlaps[static_cast<std::size_t>(k)];
}

TransmonLevels transmon_levels(double ej, double ec, int charge_cutoff, int levels) {
    require(levels <= 2 * charge_cutoff + 1, ErrorKind::Truncation, "levels exceed the charge-basis dimension");
    const int dim = 2 * charge_cutoff + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double n = i - charge_cutoff;
        h(i, i) = 4.0 * ec * n * n;
        if (i + 1 < dim) {
            h(i, i + 1) = -0.5 * ej;
            h(i + 1, i) = -0.5 * ej;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    const Eigen::MatrixXd vecs = solver.eigenvectors().leftCols(levels);
    const Eigen::VectorXd n_diag = Eigen::VectorXd::LinSpaced(dim, -charge_cutoff, charge_cutoff);

    TransmonLevels out;
    out.energies = solver.eigenvalues().head(levels).array() - solver.eigenvalues()[0];
    out.charge = vecs.transpose() * n_diag.asDiagonal() * vecs;
    return out;
}

ProductDims chain_dims(const ChainParams& c) { return {c.transmon.levels_kept, c.n_r, c.n_p}; }

namespace {

Eigen::MatrixXcd assemble(const TransmonLevels& q, const ChainParams& c, const ProductDims& dims) {
    using cd = std::complex<double>;
    const int dim = dims.size();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const BareLabel s = dims.label(i);
        h(i, i) = q.energies[s.transmon] + c.omega_r_bare * s.resonator + c.omega_p * s.filter;
    }
    // i g n (a^dag - a): raising the resonator gives +i g n_jk sqrt(r+1).
    if (c.g_qr != 0.0) {
        for (int j = 0; j < dims.levels; ++j) {
            for (int k = 0; k < dims.levels; ++k) {
                const double njk = q.charge(j, k);
                if (njk == 0.0) {
                    continue;
                }
                for (int r = 0; r + 1 < dims.n_r; ++r) {
                    for (int p = 0; p < dims.n_p; ++p) {
                        const int row = dims.index({j, r + 1, p});
                        const int col = dims.index({k, r, p});
                        const cd element(0.0, c.g_qr * njk * std::sqrt(r + 1.0));
                        h(row, col) += element;
                        h(col, row) += std::conj(element);
                    }
                }
            }
        }
    }
    // -J (a - a^dag)(b - b^dag) = -J (ab - a b^dag - a^dag b + a^dag b^dag).
    if (c.j_rp != 0.0) {
        for (int j = 0; j < dims.levels; ++j) {
            for (int r = 0; r < dims.n_r; ++r) {
                for (int p = 0; p < dims.n_p; ++p) {
                    const int col = dims.index({j, r, p});
                    if (r + 1 < dims.n_r && p + 1 < dims.n_p) {
                        const int row = dims.index({j, r + 1, p + 1});
                        const double v = -c.j_rp * std::sqrt((r + 1.0) * (p + 1.0));
                        h(row, col) += v;
                        h(col, row) += v;
                    }
                    if (r + 1 < dims.n_r && p > 0) {
                        const int row = dims.index({j, r + 1, p - 1});
                        const double v = c.j_rp * std::sqrt((r + 1.0) * p);
                        h(row, col) += v;
                        h(col, row) += v;
                    }
                }
            }
        }
    }
    return h;
}

// The same operator after the diagonal gauge a -> -i a, b -> -i b, which maps
// i g n (a^dag - a) to -g n (a + a^dag) and -J (a - a^dag)(b - b^dag) to
// J (a + a^dag)(b + b^dag). Eigenvalues and overlap magnitudes are unchanged
// and the matrix is real symmetric.
Eigen::MatrixXd assemble_real(const TransmonLevels& q, const ChainParams& c, const ProductDims& dims) {
    const int dim = dims.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const BareLabel s = dims.label(i);
        h(i, i) = q.energies[s.transmon] + c.omega_r_bare * s.resonator + c.omega_p * s.filter;
    }
    for (int j = 0; j < dims.levels; ++j) {
        for (int k = 0; k < dims.levels; ++k) {
            const double njk = q.charge(j, k);
            if (njk == 0.0 || c.g_qr == 0.0) {
                continue;
            }
            for (int r = 0; r + 1 < dims.n_r; ++r) {
                for (int p = 0; p < dims.n_p; ++p) {
                    const int row = dims.index({j, r + 1, p});
                    const int col = dims.index({k, r, p});
                    const double v = -c.g_qr * njk * std::sqrt(r + 1.0);
                    h(row, col) += v;
                    h(col, row) += v;
                }
            }
        }
    }
    if (c.j_rp != 0.0) {
        for (int j = 0; j < dims.levels; ++j) {
            for (int r = 0; r + 1 < dims.n_r; ++r) {
                for (int p = 0; p < dims.n_p; ++p) {
                    const int col = dims.index({j, r, p});
                    if (p + 1 < dims.n_p) {
                        const int row = dims.index({j, r + 1, p + 1});
                        const double v = c.j_rp * std::sqrt((r + 1.0) * (p + 1.0));
                        h(row, col) += v;
                        h(col, row) += v;
                    }
                    if (p > 0) {
                        const int row = dims.index({j, r + 1, p - 1});
                        const double v = c.j_rp * std::sqrt((r + 1.0) * p);
                        h(row, col) += v;
                        h(col, row) += v;
                    }
                }
            }
        }
    }
    return h;
}

TransmonLevels chain_transmon(const ChainParams& c, FluxPoint f) {
    c.validate();
    const auto& t = c.transmon;
    return transmon_levels(josephson_energy(t, f), t.ec, t.charge_cutoff, t.levels_kept);
}

}  // namespace

Eigen::MatrixXd build_hamiltonian_real_gauge(const ChainParams& c, FluxPoint f) {
    return assemble_real(chain_transmon(c, f), c, chain_dims(c));
}

Eigen::MatrixXcd build_hamiltonian(const ChainParams& c, FluxPoint f) {
    return assemble(chain_transmon(c, f), c, chain_dims(c));
}

template <typename Scalar>
DressedSpectrum diagonalize(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& h, const ProductDims& dims) {
    require(h.rows() == h.cols() && h.rows() == dims.size(), ErrorKind::InvalidArgument,
            "Hamiltonian size does not match the product dimensions");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(h);
    const int dim = dims.size();

    DressedSpectrum out;
    out.dims = dims;
    out.energies = solver.eigenvalues().array() - solver.eigenvalues()[0];
    out.labels.assign(static_cast<std::size_t>(dim), BareLabel{});
    out.overlaps.assign(static_cast<std::size_t>(dim), 0.0);
    out.eigen_index_by_bare.assign(static_cast<std::size_t>(dim), -1);

    const Eigen::MatrixXd weight = solver.eigenvectors().cwiseAbs2();
    struct Candidate {
        double overlap;
        int bare;
        int eigen;
    };
    // Descending overlap; ties resolved by bare index then eigen index.
    auto by_overlap = [](const Candidate& x, const Candidate& y) {
        if (x.overlap != y.overlap) {
            return x.overlap > y.overlap;
        }
        if (x.bare != y.bare) {
            return x.bare < y.bare;
        }
        return x.eigen < y.eigen;
    };
    std::vector<char> eigen_used(static_cast<std::size_t>(dim), 0);
    int assigned = 0;
    auto greedy = [&](std::vector<Candidate>& candidates) {
        std::sort(candidates.begin(), candidates.end(), by_overlap);
        for (const auto& cand : candidates) {
            if (assigned == dim) {
                break;
            }
            auto& slot = out.eigen_index_by_bare[static_cast<std::size_t>(cand.bare)];
            if (slot >= 0 || eigen_used[static_cast<std::size_t>(cand.eigen)]) {
                continue;
            }
            slot = cand.eigen;
            eigen_used[static_cast<std::size_t>(cand.eigen)] = 1;
            out.labels[static_cast<std::size_t>(cand.eigen)] = dims.label(cand.bare);
            out.overlaps[static_cast<std::size_t>(cand.eigen)] = cand.overlap;
            ++assigned;
        }
    };

    // Pairs are visited in global descending order. The small-overlap tail
    // is only sorted when large pairs leave some label unassigned; visiting it
    // afterwards preserves the order because every pair in it is smaller.
    constexpr double kTail = 1e-4;
    std::vector<Candidate> head;
    std::vector<Candidate> tail;
    head.reserve(static_cast<std::size_t>(dim) * 8);
    for (int e = 0; e < dim; ++e) {
        for (int b = 0; b < dim; ++b) {
            const double w = weight(b, e);
            (w >= kTail ? head : tail).push_back({w, b, e});
        }
    }
    greedy(head);
    if (assigned < dim) {
        greedy(tail);
    }
    return out;
}

template DressedSpectrum diagonalize(const Eigen::MatrixXd&, const ProductDims&);
template DressedSpectrum diagonalize(const Eigen::MatrixXcd&, const ProductDims&);

namespace {

DressedObservables read_observables(const DressedSpectrum& s) {
    DressedObservables o;
    const double g0 = s.energy_of({0, 0, 0});
    const double e0 = s.energy_of({1, 0, 0});
    const double f0 = s.energy_of({2, 0, 0});
    o.ge = e0 - g0;
    o.ef = f0 - e0;
    o.anharmonicity = o.ef - o.ge;
    o.resonator_g = s.energy_of({0, 1, 0}) - g0;
    o.resonator_e = s.energy_of({1, 1, 0}) - e0;
    o.resonator_f = s.energy_of({2, 1, 0}) - f0;
    o.two_chi = o.resonator_e - o.resonator_g;
    return o;
}

}  // namespace

DressedObservables dressed_observables(const ChainParams& c, FluxPoint f) {
    return read_observables(diagonalize(build_hamiltonian_real_gauge(c, f), chain_dims(c)));
}

DressedObservables resonator_observables(const ChainParams& c, FluxPoint f) {
    ChainParams isolated = c;
    isolated.j_rp = 0.0;
    const ProductDims dims{c.transmon.levels_kept, c.n_r, 1};
    return read_observables(diagonalize(assemble_real(chain_transmon(c, f), isolated, dims), dims));
}

double dressed_qubit_frequency(const ChainParams& c, FluxPoint f) {
    const auto s = diagonalize(build_hamiltonian_real_gauge(c, f), chain_dims(c));
    return s.energy_of({1, 0, 0}) - s.energy_of({0, 0, 0});
}

std::optional<std::string> dispersive_warning(const ChainParams& c, FluxPoint f) {
    const TransmonLevels q = chain_transmon(c, f);
    const double detuning = std::abs(c.omega_r_bare - q.energies[1]);
    if (c.g_qr < detuning) {
        return std::nullopt;
    }
    std::ostringstream msg;
    msg << "g_qr = " << c.g_qr << " GHz is not below the qubit-resonator detuning " << detuning
        << " GHz at phi = " << f.phi << "; dispersive labeling may be unreliable";
    return msg.str();
}

}  // namespace qtwin
