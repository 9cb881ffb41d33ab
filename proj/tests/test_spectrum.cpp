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

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "gtest/gtest.h"

#include "qtwin/error.hpp"

using namespace qtwin;

namespace {

ChainParams table_c1_qubit(int qubit) {
    ChainParams c;
    switch (qubit) {
        case 1:
            c.transmon = {25.44, 0.154, 0.67, 20, 5};
            c.omega_r_bare = 6.636;
            c.omega_p = 6.699;
            c.g_qr = 0.108;
            c.j_rp = 0.0246;
            break;
        case 2:
            c.transmon = {27.79, 0.154, 0.70, 20, 5};
            c.omega_r_bare = 7.022;
            c.omega_p = 7.107;
            c.g_qr = 0.117;
            c.j_rp = 0.0177;
            break;
        default:
            c.transmon = {25.94, 0.161, 0.63, 20, 5};
            c.omega_r_bare = 6.826;
            c.omega_p = 6.883;
            c.g_qr = 0.115;
            c.j_rp = 0.020;
            break;
    }
    return c;
}

}  // namespace

TEST(josephson_energy, extremal_values) {
    const TransmonParams t{25.44, 0.154, 0.3, 20, 5};
    EXPECT_DOUBLE_EQ(josephson_energy(t, FluxPoint{0.0}), 25.44);
    EXPECT_NEAR(josephson_energy(t, FluxPoint{0.5}), 7.632, 1e-12);
}

TEST(josephson_energy, periodic_and_even_exactly) {
    const TransmonParams t{25.44, 0.154, 0.37, 20, 5};
    for (int k = -64; k <= 64; ++k) {
        const double phi = k / 64.0;
        const double e = josephson_energy(t, FluxPoint{phi});
        EXPECT_EQ(e, josephson_energy(t, FluxPoint{phi + 1.0}));
        EXPECT_EQ(e, josephson_energy(t, FluxPoint{-phi}));
        EXPECT_LE(e, t.ej_max);
        EXPECT_GE(e, t.ej_max * t.asym * (1 - 1e-15));
    }
}

TEST(transmon, asymptotic_ge_frequency) {
    const auto q = transmon_levels(25.44, 0.154, 20, 5);
    const double asymptotic = std::sqrt(8.0 * 25.44 * 0.154) - 0.154;
    EXPECT_NEAR(asymptotic, 5.444, 1e-3);
    EXPECT_NEAR(q.energies[1], asymptotic, 0.010);
}

TEST(build_hamiltonian, hermitian) {
    for (int qubit = 1; qubit <= 3; ++qubit) {
        const auto c = table_c1_qubit(qubit);
        for (double phi : {0.0, 0.21, 0.5}) {
            const Eigen::MatrixXcd h = build_hamiltonian(c, FluxPoint{phi});
            const double scale = h.cwiseAbs().maxCoeff();
            EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * scale);
        }
    }
}

TEST(build_hamiltonian, separable_limit) {
    ChainParams c = table_c1_qubit(1);
    c.g_qr = 0.0;
    c.j_rp = 0.0;
    const auto h = build_hamiltonian(c, FluxPoint{0.0});
    const auto q = transmon_levels(c.transmon.ej_max, c.transmon.ec, 20, 5);
    const auto s = diagonalize(h, chain_dims(c));
    for (int j = 0; j < 5; ++j) {
        for (int r = 0; r < 5; ++r) {
            for (int p = 0; p < 5; ++p) {
                const double expected = q.energies[j] + r * c.omega_r_bare + p * c.omega_p;
                EXPECT_NEAR(s.energy_of({j, r, p}), expected, 1e-9);
            }
        }
    }
}

TEST(build_hamiltonian, truncation_error) {
    ChainParams c = table_c1_qubit(1);
    c.transmon.charge_cutoff = 10;
    c.transmon.levels_kept = 22;
    try {
        build_hamiltonian(c, FluxPoint{0.0});
        FAIL() << "expected Truncation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Truncation);
    }
}

TEST(build_hamiltonian, real_gauge_has_same_spectrum) {
    const auto c = table_c1_qubit(2);
    const Eigen::MatrixXcd h = build_hamiltonian(c, FluxPoint{0.3});
    const Eigen::MatrixXd hr = build_hamiltonian_real_gauge(c, FluxPoint{0.3});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> a(h, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(hr, Eigen::EigenvaluesOnly);
    EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(build_hamiltonian, table_c1_qubit1_ge) {
    const auto o = dressed_observables(table_c1_qubit(1), FluxPoint{0.0});
    EXPECT_NEAR(o.ge, 5.415, 0.003);
}

TEST(diagonalize, diagonal_input) {
    const ProductDims dims{3, 2, 1};
    Eigen::VectorXd d(6);
    d << 0.0, 3.0, 1.0, 4.0, 2.0, 5.0;
    const auto s = diagonalize(Eigen::MatrixXd(d.asDiagonal()), dims);
    for (int i = 0; i < 6; ++i) {
        EXPECT_NEAR(s.energies[i], i, 1e-14);
        EXPECT_NEAR(s.overlaps[i], 1.0, 1e-14);
        EXPECT_NEAR(s.energy_of(dims.label(i)), d[i], 1e-14);
    }
}

TEST(diagonalize, resonant_two_level_splitting) {
    const double g = 0.0123;
    Eigen::Matrix2cd h;
    h << 5.0, std::complex<double>(0.0, g), std::complex<double>(0.0, -g), 5.0;
    const auto s = diagonalize(Eigen::MatrixXcd(h), ProductDims{2, 1, 1});
    EXPECT_NEAR(s.energies[1] - s.energies[0], 2.0 * g, 1e-14);
    EXPECT_NEAR(s.overlaps[0], 0.5, 1e-12);
}

TEST(diagonalize, label_ambiguity_when_fully_mixed) {
    // Three degenerate bare states coupled all-to-all: the symmetric
    // eigenvector has weight 1/3 on each.
    Eigen::Matrix3d h = Eigen::Matrix3d::Constant(-0.01);
    h.diagonal().setConstant(5.0);
    const auto s = diagonalize(Eigen::MatrixXd(h), ProductDims{3, 1, 1});
    try {
        for (int i = 0; i < 3; ++i) {
            s.energy_of({i, 0, 0});
        }
        FAIL() << "expected LabelAmbiguity";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LabelAmbiguity);
    }
}

TEST(diagonalize, rotated_basis_copy_has_same_eigenvalues) {
    const auto c = table_c1_qubit(1);
    const Eigen::MatrixXcd h = build_hamiltonian(c, FluxPoint{0.0});
    std::mt19937_64 gen(7);
    std::normal_distribution<double> normal;
    Eigen::MatrixXcd z(h.rows(), h.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = {normal(gen), normal(gen)};
    }
    const Eigen::MatrixXcd u = Eigen::HouseholderQR<Eigen::MatrixXcd>(z).householderQ();
    const Eigen::MatrixXcd rotated = u * h * u.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> a(h, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> b(Eigen::MatrixXcd(0.5 * (rotated + rotated.adjoint())),
                                                      Eigen::EigenvaluesOnly);
    EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
    const auto s = diagonalize(h, chain_dims(c));
    for (Eigen::Index i = 1; i < s.energies.size(); ++i) {
        EXPECT_LE(s.energies[i - 1], s.energies[i]);
    }
    EXPECT_EQ(s.energies[0], 0.0);
}

TEST(diagonalize, table_c1_qubit2_within_rounding_of_tabulated_ec) {
    // E_c is tabulated to three digits; 0.5 MHz of E_c moves the ge line by
    // about 9 MHz, so the 1 MHz match is checked over the rounding interval.
    const auto c = table_c1_qubit(2);
    const double at_table = dressed_qubit_frequency(c, FluxPoint{0.0});
    EXPECT_NEAR(at_table, 5.662, 0.006);
    double best = 1.0;
    for (double ec = 0.1535; ec <= 0.1545 + 1e-12; ec += 0.0001) {
        ChainParams trial = c;
        trial.transmon.ec = ec;
        best = std::min(best, std::abs(dressed_qubit_frequency(trial, FluxPoint{0.0}) - 5.662));
    }
    EXPECT_LT(best, 0.001);
}

TEST(dressed_observables, zero_coupling_gives_zero_chi) {
    ChainParams c = table_c1_qubit(1);
    c.g_qr = 0.0;
    const auto o = dressed_observables(c, FluxPoint{0.0});
    EXPECT_NEAR(o.two_chi, 0.0, 1e-12);
    EXPECT_NEAR(o.resonator_g, o.resonator_f, 1e-12);
}

TEST(dressed_observables, perturbative_dispersive_shift) {
    // Oracle: 2 chi = 2 g01^2 alpha / (Delta (Delta + alpha)) with
    // g01 = g_qr <0|n|1> and bare transmon alpha, Delta.
    for (double g : {0.02, 0.04}) {
        ChainParams c;
        c.transmon = {25.0, 0.16, 0.0, 20, 5};
        c.omega_r_bare = 6.0;
        c.g_qr = g;
        c.j_rp = 0.0;
        const auto q = transmon_levels(25.0, 0.16, 20, 5);
        const double g01 = g * std::abs(q.charge(0, 1));
        const double alpha = q.energies[2] - 2.0 * q.energies[1];
        const double delta = q.energies[1] - c.omega_r_bare;
        ASSERT_GT(std::abs(delta), 8.0 * g01);
        const double oracle = 2.0 * g01 * g01 * alpha / (delta * (delta + alpha));
        const double full = resonator_observables(c, FluxPoint{0.0}).two_chi;
        EXPECT_NEAR(full / oracle, 1.0, 0.15);
    }
}

TEST(dressed_observables, table_c1_qubit3_anharmonicity) {
    const auto o = dressed_observables(table_c1_qubit(3), FluxPoint{0.0});
    EXPECT_NEAR(o.anharmonicity, -0.165, 0.003);
}

TEST(dressed_observables, chi_negative_below_resonator) {
    for (int qubit = 1; qubit <= 3; ++qubit) {
        for (double phi : {0.0, 0.25, 0.5}) {
            const auto c = table_c1_qubit(qubit);
            const auto o = dressed_observables(c, FluxPoint{phi});
            ASSERT_LT(o.ge, o.resonator_g);
            ASSERT_LT(std::abs(o.anharmonicity), std::abs(o.resonator_g - o.ge));
            EXPECT_LT(o.two_chi, 0.0);
        }
    }
}

TEST(dressed_observables, converged_in_truncation) {
    const auto c = table_c1_qubit(1);
    ChainParams bigger = c;
    bigger.transmon.charge_cutoff += 2;
    bigger.transmon.levels_kept += 2;
    bigger.n_r += 2;
    bigger.n_p += 2;
    for (double phi : {0.0, 0.5}) {
        const auto a = dressed_observables(c, FluxPoint{phi});
        const auto b = dressed_observables(bigger, FluxPoint{phi});
        EXPECT_LT(std::abs(a.ge - b.ge), 1e-4);
        EXPECT_LT(std::abs(a.ef - b.ef), 1e-4);
        EXPECT_LT(std::abs(a.resonator_g - b.resonator_g), 1e-4);
        EXPECT_LT(std::abs(a.resonator_e - b.resonator_e), 1e-4);
        EXPECT_LT(std::abs(a.resonator_f - b.resonator_f), 1e-4);
    }
}

TEST(dispersive_warning, flags_strong_coupling) {
    ChainParams c = table_c1_qubit(1);
    EXPECT_FALSE(dispersive_warning(c, FluxPoint{0.0}).has_value());
    c.omega_r_bare = 5.45;
    EXPECT_TRUE(dispersive_warning(c, FluxPoint{0.0}).has_value());
}
