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

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "qtwin/dynamics.hpp"

namespace qtwin {

enum class PrimitiveKind { X90, X180, VirtualZ, CZ };

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::X90;
    int qubit = 0;
    /// Virtual-Z angle, radians.
    double angle = 0.0;

    bool operator==(const Primitive&) const = default;
};

/// Ideal unitary of a circuit (time order) on n qubits, qubit 0 major.
Eigen::MatrixXcd circuit_unitary(const std::vector<Primitive>& circuit, int n_qubits);

/// Images of the Pauli generators X_q, Z_q under U P U^dagger, packed as
/// (x bits, z bits, sign) per generator. Equal keys mean equal Cliffords up
/// to global phase. Throws InvalidArgument for a non-Clifford U.
std::uint32_t tableau_key(const Eigen::MatrixXcd& u, int n_qubits);

struct CliffordElement {
    int n_qubits = 1;
    std::uint32_t key = 0;
    std::vector<Primitive> circuit;
    /// Unitary of the circuit; matched against the tableau on construction.
    Eigen::MatrixXcd unitary;

    int physical_pulses() const;
    int cz_count() const;
};

/// Enumerated Clifford group with key lookup. Products are formed from the
/// stored unitaries and mapped back to a canonical element, so long
/// sequences never accumulate rounding.
class CliffordGroup {
public:
    static const CliffordGroup& c1();
    static const CliffordGroup& c2();

    int n_qubits() const { return n_qubits_; }
    std::size_t size() const { return elements_.size(); }
    const CliffordElement& element(std::size_t i) const { return elements_[i]; }
    std::size_t index_of(std::uint32_t key) const;
    /// Element equal to applying a, then b.
    std::size_t compose(std::size_t a, std::size_t b) const;
    std::size_t inverse(std::size_t a) const;
    /// 0 single-qubit, 1 CZ-like, 2 iSWAP-like, 3 SWAP-like (C2 only).
    int class_of(std::size_t i) const { return classes_.empty() ? 0 : classes_[i]; }
    std::size_t identity() const { return identity_; }
    /// Index of the element whose circuit is a single CZ (C2 only).
    std::size_t cz() const { return cz_; }
    double mean_pulses() const;
    double mean_cz() const;

private:
    CliffordGroup() = default;
    void add(CliffordElement e, int cls);
    void finish();

    int n_qubits_ = 1;
    std::vector<CliffordElement> elements_;
    std::vector<int> classes_;
    std::unordered_map<std::uint32_t, std::size_t> lookup_;
    std::size_t identity_ = 0;
    std::size_t cz_ = 0;

    friend CliffordGroup build_c1();
    friend CliffordGroup build_c2();
};

/// All 24 single-qubit Cliffords, each compiled as Z X90 Z X90 Z with
/// stages elided (at most two X90 pulses).
std::vector<CliffordElement> clifford_group_c1();

/// Uniform draw over the 11520 two-qubit Cliffords; the four classes have
/// 576, 5184, 5184 and 576 members.
CliffordElement sample_c2(std::uint64_t seed, std::uint64_t stream = 0);

struct RbSequence {
    int n_qubits = 1;
    /// Group indices in time order; the last is the recovery element.
    std::vector<std::size_t> cliffords;
    /// Interleaved gate (a group index) applied after each random element.
    std::optional<std::size_t> interleaved;
    int length() const { return static_cast<int>(cliffords.size()) - 1; }
    /// Flattened primitive circuit.
    std::vector<Primitive> circuit(const CliffordGroup& group) const;
};

RbSequence generate_sequence(int m, const CliffordGroup& group, std::optional<std::size_t> interleave,
                             std::uint64_t seed, std::uint64_t stream = 0);

/// Depolarizing channel with parameter lambda after every group element
/// (and interleaved_lambda after each interleaved gate).
struct DepolarizingModel {
    double lambda = 1.0;
    double interleaved_lambda = 1.0;
};

/// Superoperators (column-stacked, full register of `levels` per qubit) for
/// each physical primitive; virtual Z is exact frame bookkeeping. Empty
/// matrices mean the primitive is unavailable.
struct ChannelModel {
    int n_qubits = 1;
    int levels = 2;
    std::array<Eigen::MatrixXcd, 2> x90;
    std::array<Eigen::MatrixXcd, 2> x180;
    Eigen::MatrixXcd cz;

    int dim() const;
    static ChannelModel ideal(int n_qubits, int levels = 2);
};

struct DynamicsModelOptions {
    double pulse_ns = 40.0;
    /// Idle time after each single-qubit pulse.
    double spacing_ns = 10.0;
    double dt_ns = 0.5;
    T2Kind single_qubit_t2 = T2Kind::Star;
};

/// Single-qubit channel model from three-level dynamics for one mode.
ChannelModel dynamics_channel_model(const DuffingMode& mode, const QubitNoise& noise,
                                    const DynamicsModelOptions& options = {});

/// Two-qubit channel model: single-qubit slots from three-level dynamics
/// (the other qubit idles for the slot), CZ from the Lindblad propagation of
/// the calibrated pulse in the dressed idle basis with its virtual-Z frame
/// updates.
ChannelModel dynamics_channel_model(const DuffingPair& pair, const NoiseParams& noise, const CzCalibration& cz,
                                    const DynamicsModelOptions& options = {});

using NoiseModel = std::variant<DepolarizingModel, ChannelModel>;

struct SequenceOutcome {
    /// Exact probability of returning to the ground state.
    double p_ground = 0.0;
    /// Binomial estimate from the shots.
    double survival = 0.0;
    /// Population outside the computational subspace.
    double leaked = 0.0;
};

/// Runs sequences against a noise model. Throws ModelMismatch when the model
/// cannot execute a primitive or has the wrong register size.
std::vector<SequenceOutcome> execute(const std::vector<RbSequence>& sequences, const CliffordGroup& group,
                                     const NoiseModel& model, int shots, std::uint64_t seed);

struct DecayFit {
    double a = 0.0;
    double p = 0.0;
    double b = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    /// p landed within 1e-6 above 1 and was clamped to 1.
    bool clamped = false;

    double p_stderr() const;
};

/// Weighted least squares on A p^m + B with B started at 1/dimension.
/// Throws FitDivergence for p > 1 beyond rounding or a failed fit.
DecayFit fit_decay(const std::vector<int>& lengths, const std::vector<double>& survivals,
                   const std::vector<double>& stddevs, int dimension);

struct ErrorRates {
    double epc = 0.0;
    std::optional<double> epg;
    /// p_irb > p_rb: epg is negative and must not be trusted.
    bool ratio_out_of_range = false;
};

ErrorRates error_rates(double p_rb, std::optional<double> p_irb, int dimension,
                       std::optional<double> divisor = std::nullopt);

struct LeakageEstimate {
    double per_gate = 0.0;
    double per_gate_stderr = 0.0;
    double l_inf = 0.0;
    double gamma = 1.0;
};

/// Fits L(m) = L_inf (1 - gamma^m) to leaked populations; the per-step rate
/// L_inf (1 - gamma) is divided by gates_per_step.
LeakageEstimate leakage_estimate(const std::vector<int>& lengths, const std::vector<double>& leaked,
                                 double gates_per_step = 1.0);

struct RbOptions {
    std::vector<int> lengths{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    int randomizations = 30;
    int shots = 1000;
    std::uint64_t seed = 1;
    std::optional<std::size_t> interleave;
    /// Gates per Clifford for a single-qubit error per gate.
    std::optional<double> divisor;
};

struct RBResult {
    std::vector<int> lengths;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<int> count;
    std::vector<double> leaked_mean;
    DecayFit fit;
    double epc = 0.0;
    /// epc / divisor when a divisor was given.
    std::optional<double> epg;
    /// Leakage per CZ (per Clifford when there are none); only for models
    /// with levels above the qubit subspace.
    std::optional<LeakageEstimate> leakage;
};

RBResult run_rb(const CliffordGroup& group, const NoiseModel& model, const RbOptions& options);

struct SimultaneousOptions {
    /// Static ZZ rate; zero runs the two qubits independently.
    double zz_mhz = 0.0;
    /// Duration of one physical-pulse slot, for the ZZ phase.
    double slot_ns = 50.0;
};

/// Independent C1 sequences on both qubits at once, one result per qubit.
/// With a ZZ rate both qubits share one register: the k-th physical pulses
/// of the two sequences share slot k (a qubit without a pulse idles
/// noiselessly) and each slot adds the phase exp(-i 2 pi zz t n1 n2). The
/// ZZ path needs single-qubit channel models with equal truncation.
std::array<RBResult, 2> run_simultaneous_rb(const std::array<NoiseModel, 2>& models, const RbOptions& options,
                                            const SimultaneousOptions& sim = {});

struct CoherenceSegment {
    double duration_ns = 0.0;
    /// Per qubit (t1, t2) in microseconds; t2 is whichever applies to the
    /// segment.
    std::vector<std::pair<double, double>> t1_t2_us;
};

/// First-order average gate infidelity from amplitude damping and pure
/// dephasing, eps = t/(d(d+1)) sum_k [d Tr(L_k^dag L_k) - |Tr L_k|^2],
/// summed over segments.
double coherence_limit(const std::vector<CoherenceSegment>& segments);

struct CoherenceCdf {
    std::vector<double> sorted;
    double median = 0.0;
    double operator()(double x) const;
};

CoherenceCdf coherence_cdf(std::vector<double> samples);

}  // namespace qtwin
