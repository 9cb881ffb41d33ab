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

#pragma once

#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qtwin {

/// Flux-tunable transmon. Energies are E/h in GHz.
struct TransmonParams {
    double ej_max = 25.0;
    double ec = 0.16;
    /// Junction asymmetry (E_J1 - E_J2) / (E_J1 + E_J2).
    double asym = 0.0;
    /// Charge basis spans -charge_cutoff .. +charge_cutoff.
    int charge_cutoff = 20;
    /// Transmon eigenlevels retained in the product space.
    int levels_kept = 5;

    void validate() const;
    bool operator==(const TransmonParams&) const = default;
};

/// Transmon coupled to a readout resonator, which is in turn coupled to a
/// Purcell filter. All entries are ordinary frequencies (omega / 2 pi) in GHz.
struct ChainParams {
    TransmonParams transmon;
    double omega_r_bare = 7.0;
    double omega_p = 7.0;
    double g_qr = 0.1;
    double j_rp = 0.02;
    double kappa_p = 0.03;
    double kappa_int = 0.0;
    int n_r = 5;
    int n_p = 5;

    void validate() const;
    bool operator==(const ChainParams&) const = default;
};

/// Reduced flux Phi / Phi_0; every flux-dependent quantity has period 1.
struct FluxPoint {
    double phi = 0.0;

    bool operator==(const FluxPoint&) const = default;
};

/// Bare product state |transmon level, resonator photons, filter photons>.
struct BareLabel {
    int transmon = 0;
    int resonator = 0;
    int filter = 0;

    auto operator<=>(const BareLabel&) const = default;
};

struct ProductDims {
    int levels = 1;
    int n_r = 1;
    int n_p = 1;

    int size() const { return levels * n_r * n_p; }
    int index(const BareLabel& label) const { return (label.transmon * n_r + label.resonator) * n_p + label.filter; }
    BareLabel label(int index) const { return {index / (n_r * n_p), (index / n_p) % n_r, index % n_p}; }
};

/// Eigenvalues of a product-space Hamiltonian with their bare-state labels.
struct DressedSpectrum {
    ProductDims dims;
    /// Level frequencies in GHz relative to the lowest level; ascending.
    Eigen::VectorXd energies;
    /// labels[k] is the bare state assigned to eigenvalue k.
    std::vector<BareLabel> labels;
    /// |<label|eigenvector>|^2 of each assignment.
    std::vector<double> overlaps;

    /// Energy of the eigenstate labeled by `label`. Throws LabelAmbiguity if
    /// the assignment overlap is not above 1/2.
    double energy_of(const BareLabel& label) const;
    /// Overlap of the assignment for `label` (0 if unassigned).
    double overlap_of(const BareLabel& label) const;

    std::vector<int> eigen_index_by_bare;
};

/// Transmon eigenproblem in the charge basis.
struct TransmonLevels {
    /// Level energies relative to the ground level, GHz.
    Eigen::VectorXd energies;
    /// <j| n |k> between the retained levels (real symmetric).
    Eigen::MatrixXd charge;
};

/// E_J of an asymmetric SQUID:
/// ej_max |cos(pi phi)| sqrt(1 + asym^2 tan^2(pi phi)).
/// phi is first reduced to [0, 1/2] so the result is exactly periodic and even
/// whenever phi + 1 is itself representable.
template <typename Scalar>
Scalar josephson_energy(const TransmonParams& t, Scalar phi) {
    using std::abs;
    using std::cos;
    using std::remainder;
    using std::sin;
    using std::sqrt;
    const Scalar reduced = abs(remainder(phi, Scalar(1)));
    const Scalar pi_phi = Scalar(3.14159265358979323846) * reduced;
    const Scalar c = cos(pi_phi);
    const Scalar s = sin(pi_phi);
    // sqrt(cos^2 + asym^2 sin^2) is the same expression without the tan pole.
    return Scalar(t.ej_max) * sqrt(c * c + Scalar(t.asym * t.asym) * s * s);
}

inline double josephson_energy(const TransmonParams& t, FluxPoint f) { return josephson_energy<double>(t, f.phi); }

/// Diagonalizes 4 E_c n^2 - E_J cos(phi) in the charge basis at the given E_J
/// and keeps `levels` eigenstates.
TransmonLevels transmon_levels(double ej, double ec, int charge_cutoff, int levels);

/// Product-space Hamiltonian of the transmon-resonator-filter chain at flux f:
///   sum_k E_k |k><k| + omega_r a^dag a + omega_p b^dag b
///   + i g_qr n (a^dag - a) - j_rp (a - a^dag)(b - b^dag).
/// Basis order is transmon-major, filter-minor (see ProductDims).
Eigen::MatrixXcd build_hamiltonian(const ChainParams& c, FluxPoint f);

ProductDims chain_dims(const ChainParams& c);

/// The chain Hamiltonian in the gauge a -> -i a, b -> -i b, where it is real
/// symmetric. Same spectrum and bare-state overlaps as build_hamiltonian.
Eigen::MatrixXd build_hamiltonian_real_gauge(const ChainParams& c, FluxPoint f);

/// Hermitian eigendecomposition with greedy maximum-overlap labeling.
/// Instantiated for real symmetric and complex Hermitian matrices.
template <typename Scalar>
DressedSpectrum diagonalize(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& h, const ProductDims& dims);

/// Dressed quantities read off the labeled spectrum of the full chain.
struct DressedObservables {
    double ge = 0.0;
    double ef = 0.0;
    double anharmonicity = 0.0;
    /// Resonator-like frequency with the transmon in g, e, f.
    double resonator_g = 0.0;
    double resonator_e = 0.0;
    double resonator_f = 0.0;
    /// 2 chi = resonator_e - resonator_g.
    double two_chi = 0.0;
};

DressedObservables dressed_observables(const ChainParams& c, FluxPoint f);

/// Same as dressed_observables, but with the Purcell filter decoupled and
/// removed from the product space. These are the qubit-state-dependent
/// resonator frequencies that enter the two-mode readout model.
DressedObservables resonator_observables(const ChainParams& c, FluxPoint f);

/// Returns a message when g_qr is not small compared to the qubit-resonator
/// detuning at the given flux.
std::optional<std::string> dispersive_warning(const ChainParams& c, FluxPoint f);

/// Dressed ge frequency as a function of flux, for flux-map inversion.
double dressed_qubit_frequency(const ChainParams& c, FluxPoint f);

}  // namespace qtwin
