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


#include "qtwin/benchmarking.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "qtwin/error.hpp"
#include "qtwin/lsq.hpp"
#include "qtwin/parallel.hpp"
#include "qtwin/rng.hpp"

namespace qtwin {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr cd kI{0.0, 1.0};

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// i^(xz) X^x Z^z, Hermitian.
Eigen::Matrix2cd single_pauli(int code) {
    const int x = code >> 1;
    const int z = code & 1;
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    if (x != 0) {
        m = Eigen::Matrix2cd{{0, 1}, {1, 0}} * m;
    }
    if (z != 0) {
        m = m * Eigen::Matrix2cd{{1, 0}, {0, -1}};
    }
    return (x != 0 && z != 0) ? Eigen::Matrix2cd(kI * m) : m;
}

// Pauli string with qubit 0 as the most significant base-4 digit.
Eigen::MatrixXcd pauli_string(int code, int n) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = 0; q < n; ++q) {
        out = kron(out, single_pauli((code >> (2 * (n - 1 - q))) & 3));
    }
    return out;
}

const std::vector<Eigen::MatrixXcd>& pauli_table(int n) {
    static const std::array<std::vector<Eigen::MatrixXcd>, 3> tables = [] {
        std::array<std::vector<Eigen::MatrixXcd>, 3> t;
        for (int k = 1; k <= 2; ++k) {
            for (int c = 0; c < (1 << (2 * k)); ++c) {
                t[k].push_back(pauli_string(c, k));
            }
        }
        return t;
    }();
    return tables[n];
}

Eigen::MatrixXcd embed_single(const Eigen::Matrix2cd& g, int qubit, int n) {
    if (n == 1) {
        return g;
    }
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
    return qubit == 0 ? kron(g, id) : kron(id, g);
}

Eigen::MatrixXcd primitive_unitary(const Primitive& p, int n) {
    require(p.qubit >= 0 && p.qubit < n, ErrorKind::InvalidArgument, "primitive qubit out of range");
    switch (p.kind) {
        case PrimitiveKind::X90:
            return embed_single(single_qubit_gate(0.5 * kPi, 0.0).ideal, p.qubit, n);
        case PrimitiveKind::X180:
            return embed_single(single_qubit_gate(kPi, 0.0).ideal, p.qubit, n);
        case PrimitiveKind::VirtualZ:
            return embed_single(virtual_z(p.angle), p.qubit, n);
        case PrimitiveKind::CZ: {
            require(n == 2, ErrorKind::InvalidArgument, "CZ needs two qubits");
            Eigen::MatrixXcd cz = Eigen::MatrixXcd::Identity(4, 4);
            cz(3, 3) = -1.0;
            return cz;
        }
    }
    return {};
}

std::vector<Primitive> on_qubit(std::vector<Primitive> circuit, int qubit) {
    for (auto& p : circuit) {
        p.qubit = qubit;
    }
    return circuit;
}

void append(std::vector<Primitive>& dst, const std::vector<Primitive>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Eigen::MatrixXcd circuit_unitary(const std::vector<Primitive>& circuit, int n_qubits) {
    require(n_qubits == 1 || n_qubits == 2, ErrorKind::InvalidArgument, "one or two qubits supported");
    const int d = 1 << n_qubits;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    for (const auto& p : circuit) {
        u = primitive_unitary(p, n_qubits) * u;
    }
    return u;
}

std::uint32_t tableau_key(const Eigen::MatrixXcd& u, int n_qubits) {
    require(n_qubits == 1 || n_qubits == 2, ErrorKind::InvalidArgument, "one or two qubits supported");
    const int d = 1 << n_qubits;
    require(u.rows() == d && u.cols() == d, ErrorKind::InvalidArgument, "unitary size mismatch");
    const auto& paulis = pauli_table(n_qubits);
    const int bits = 2 * n_qubits + 1;
    std::uint32_t key = 0;
    for (int g = 0; g < 2 * n_qubits; ++g) {
        // Generator X_q for even g, Z_q for odd g.
        const int q = g / 2;
        const int code = ((g % 2 == 0) ? 2 : 1) << (2 * (n_qubits - 1 - q));
        const Eigen::MatrixXcd image = u * paulis[code] * u.adjoint();
        int found = -1;
        int sign = 0;
        for (int s = 1; s < static_cast<int>(paulis.size()); ++s) {
            const cd c = (paulis[s] * image).trace() / static_cast<double>(d);
            if (std::abs(std::abs(c) - 1.0) < 1e-6) {
                require(std::abs(c.imag()) < 1e-6, ErrorKind::InvalidArgument, "not a Clifford unitary");
                found = s;
                sign = c.real() < 0.0 ? 1 : 0;
                break;
            }
        }
        require(found > 0, ErrorKind::InvalidArgument, "not a Clifford unitary");
        key |= static_cast<std::uint32_t>((found << 1) | sign) << (bits * g);
    }
    return key;
}

int CliffordElement::physical_pulses() const {
    return static_cast<int>(std::count_if(circuit.begin(), circuit.end(), [](const Primitive& p) {
        return p.kind == PrimitiveKind::X90 || p.kind == PrimitiveKind::X180;
    }));
}

int CliffordElement::cz_count() const {
    return static_cast<int>(
        std::count_if(circuit.begin(), circuit.end(), [](const Primitive& p) { return p.kind == PrimitiveKind::CZ; }));
}

void CliffordGroup::add(CliffordElement e, int cls) {
    const auto [it, inserted] = lookup_.emplace(e.key, elements_.size());
    require(inserted, ErrorKind::InvalidArgument, "duplicate Clifford in group construction");
    elements_.push_back(std::move(e));
    if (n_qubits_ == 2) {
        classes_.push_back(cls);
    }
}

void CliffordGroup::finish() {
    const int d = 1 << n_qubits_;
    identity_ = index_of(tableau_key(Eigen::MatrixXcd::Identity(d, d), n_qubits_));
    if (n_qubits_ == 2) {
        cz_ = index_of(tableau_key(circuit_unitary({{PrimitiveKind::CZ}}, 2), 2));
    }
}

std::size_t CliffordGroup::index_of(std::uint32_t key) const {
    const auto it = lookup_.find(key);
    require(it != lookup_.end(), ErrorKind::InvalidArgument, "key not in group");
    return it->second;
}

std::size_t CliffordGroup::compose(std::size_t a, std::size_t b) const {
    return index_of(tableau_key(elements_.at(b).unitary * elements_.at(a).unitary, n_qubits_));
}

std::size_t CliffordGroup::inverse(std::size_t a) const {
    return index_of(tableau_key(elements_.at(a).unitary.adjoint(), n_qubits_));
}

double CliffordGroup::mean_pulses() const {
    double total = 0.0;
    for (const auto& e : elements_) {
        total += e.physical_pulses();
    }
    return total / static_cast<double>(elements_.size());
}

double CliffordGroup::mean_cz() const {
    double total = 0.0;
    for (const auto& e : elements_) {
        total += e.cz_count();
    }
    return total / static_cast<double>(elements_.size());
}

CliffordGroup build_c1() {
    // Z(a) X90 Z(b) X90 Z(c) with every stage optional; the first circuit
    // found for a tableau with the fewest pulses, then fewest Z's, wins.
    const std::array<double, 4> angles{0.0, 0.5 * kPi, kPi, -0.5 * kPi};
    struct Candidate {
        std::vector<Primitive> circuit;
        int pulses;
        int zs;
    };
    std::vector<std::pair<std::uint32_t, Candidate>> best;
    auto consider = [&](const std::vector<double>& zs, int pulses) {
        std::vector<Primitive> c;
        int nz = 0;
        for (std::size_t k = 0; k < zs.size(); ++k) {
            if (zs[k] != 0.0) {
                c.push_back({PrimitiveKind::VirtualZ, 0, zs[k]});
                ++nz;
            }
            if (static_cast<int>(k) < pulses) {
                c.push_back({PrimitiveKind::X90, 0, 0.0});
            }
        }
        const std::uint32_t key = tableau_key(circuit_unitary(c, 1), 1);
        auto it = std::find_if(best.begin(), best.end(), [&](const auto& b) { return b.first == key; });
        if (it == best.end()) {
            best.push_back({key, {c, pulses, nz}});
        } else if (std::pair(pulses, nz) < std::pair(it->second.pulses, it->second.zs)) {
            it->second = {c, pulses, nz};
        }
    };
    for (double a : angles) {
        consider({a}, 0);
        for (double b : angles) {
            consider({a, b}, 1);
            for (double c : angles) {
                consider({a, b, c}, 2);
            }
        }
    }
    CliffordGroup g;
    g.n_qubits_ = 1;
    for (auto& [key, cand] : best) {
        CliffordElement e;
        e.n_qubits = 1;
        e.key = key;
        e.unitary = circuit_unitary(cand.circuit, 1);
        e.circuit = std::move(cand.circuit);
        g.add(std::move(e), 0);
    }
    require(g.size() == 24, ErrorKind::InvalidArgument, "single-qubit Clifford enumeration incomplete");
    g.finish();
    return g;
}

namespace {

// Compiled circuit of the single-qubit Clifford equal to u.
std::vector<Primitive> c1_circuit(const Eigen::Matrix2cd& u) {
    const auto& c1 = CliffordGroup::c1();
    return c1.element(c1.index_of(tableau_key(u, 1))).circuit;
}

Eigen::Matrix2cd rotation(double angle, double nx, double ny, double nz) {
    const Eigen::Matrix2cd x{{0, 1}, {1, 0}};
    const Eigen::Matrix2cd y{{0, -kI}, {kI, 0}};
    const Eigen::Matrix2cd z{{1, 0}, {0, -1}};
    const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
    return std::cos(0.5 * angle) * Eigen::Matrix2cd::Identity() -
           kI * std::sin(0.5 * angle) * (nx * x + ny * y + nz * z) / norm;
}

}  // namespace

CliffordGroup build_c2() {
    const auto& c1 = CliffordGroup::c1();
    // Coset representatives {I, R, R^2}, R the 2 pi/3 turn about (1,1,1).
    const Eigen::Matrix2cd r = rotation(2.0 * kPi / 3.0, 1, 1, 1);
    const std::array<std::vector<Primitive>, 3> s1{std::vector<Primitive>{}, c1_circuit(r), c1_circuit(r * r)};
    const std::vector<Primitive> cz{{PrimitiveKind::CZ}};
    const auto h = c1_circuit(rotation(kPi, 1, 0, 1));
    const auto y90 = c1_circuit(rotation(0.5 * kPi, 0, 1, 0));
    const auto xm90 = c1_circuit(rotation(-0.5 * kPi, 1, 0, 0));

    // Entangling cores in time order; each is followed by a C1 x C1 layer.
    std::vector<std::pair<int, std::vector<Primitive>>> cores;
    cores.push_back({0, {}});
    for (int cls = 1; cls <= 2; ++cls) {
        for (const auto& sa : s1) {
            for (const auto& sb : s1) {
                std::vector<Primitive> core = on_qubit(sa, 0);
                append(core, on_qubit(sb, 1));
                append(core, cz);
                if (cls == 2) {
                    append(core, on_qubit(y90, 0));
                    append(core, on_qubit(xm90, 1));
                    append(core, cz);
                }
                cores.push_back({cls, std::move(core)});
            }
        }
    }
    {
        // Three CZ-compiled CNOTs: control 0, control 1, control 0.
        std::vector<Primitive> core = on_qubit(h, 1);
        append(core, cz);
        append(core, on_qubit(h, 0));
        append(core, on_qubit(h, 1));
        append(core, cz);
        append(core, on_qubit(h, 0));
        append(core, on_qubit(h, 1));
        append(core, cz);
        cores.push_back({3, std::move(core)});
    }

    CliffordGroup g;
    g.n_qubits_ = 2;
    g.elements_.reserve(11520);
    for (const auto& [cls, core] : cores) {
        const Eigen::MatrixXcd u_core = circuit_unitary(core, 2);
        for (std::size_t a = 0; a < c1.size(); ++a) {
            for (std::size_t b = 0; b < c1.size(); ++b) {
                CliffordElement e;
                e.n_qubits = 2;
                e.circuit = core;
                append(e.circuit, on_qubit(c1.element(a).circuit, 0));
                append(e.circuit, on_qubit(c1.element(b).circuit, 1));
                e.unitary = kron(c1.element(a).unitary, c1.element(b).unitary) * u_core;
                e.key = tableau_key(e.unitary, 2);
                g.add(std::move(e), cls);
            }
        }
    }
    require(g.size() == 11520, ErrorKind::InvalidArgument, "two-qubit Clifford enumeration incomplete");
    g.finish();
    return g;
}

const CliffordGroup& CliffordGroup::c1() {
    static const CliffordGroup group = build_c1();
    return group;
}

const CliffordGroup& CliffordGroup::c2() {
    static const CliffordGroup group = build_c2();
    return group;
}

std::vector<CliffordElement> clifford_group_c1() {
    const auto& g = CliffordGroup::c1();
    std::vector<CliffordElement> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.push_back(g.element(i));
    }
    return out;
}

CliffordElement sample_c2(std::uint64_t seed, std::uint64_t stream) {
    const auto& g = CliffordGroup::c2();
    CounterRng rng(seed, stream);
    return g.element(rng.below(g.size()));
}

std::vector<Primitive> RbSequence::circuit(const CliffordGroup& group) const {
    std::vector<Primitive> out;
    for (std::size_t k = 0; k < cliffords.size(); ++k) {
        append(out, group.element(cliffords[k]).circuit);
        if (interleaved && k + 1 < cliffords.size()) {
            append(out, group.element(*interleaved).circuit);
        }
    }
    return out;
}

RbSequence generate_sequence(int m, const CliffordGroup& group, std::optional<std::size_t> interleave,
                             std::uint64_t seed, std::uint64_t stream) {
    require(m >= 0, ErrorKind::InvalidArgument, "sequence length must be non-negative");
    require(!interleave || *interleave < group.size(), ErrorKind::InvalidArgument, "interleaved gate not in group");
    CounterRng rng(seed, stream);
    RbSequence seq;
    seq.n_qubits = group.n_qubits();
    seq.interleaved = interleave;
    seq.cliffords.reserve(static_cast<std::size_t>(m) + 1);
    std::size_t product = group.identity();
    for (int k = 0; k < m; ++k) {
        const std::size_t c = rng.below(group.size());
        seq.cliffords.push_back(c);
        product = group.compose(product, c);
        if (interleave) {
            product = group.compose(product, *interleave);
        }
    }
    seq.cliffords.push_back(group.inverse(product));
    return seq;
}

// ---------------------------------------------------------------- execution

int ChannelModel::dim() const {
    int d = 1;
    for (int q = 0; q < n_qubits; ++q) {
        d *= levels;
    }
    return d;
}

namespace {

// Unitary on `levels` per qubit: the qubit gate on the lowest two levels,
// identity above.
Eigen::MatrixXcd padded(const Eigen::MatrixXcd& u2, int n, int levels) {
    const int d2 = 1 << n;
    int d = 1;
    for (int q = 0; q < n; ++q) {
        d *= levels;
    }
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    auto full_index = [&](int k) {
        int idx = 0;
        for (int q = 0; q < n; ++q) {
            idx = idx * levels + ((k >> (n - 1 - q)) & 1);
        }
        return idx;
    };
    for (int i = 0; i < d2; ++i) {
        for (int j = 0; j < d2; ++j) {
            u(full_index(i), full_index(j)) = u2(i, j);
        }
    }
    return u;
}

Eigen::MatrixXcd unitary_superop(const Eigen::MatrixXcd& u) {
    return kron(Eigen::MatrixXcd(u.conjugate()), u);
}

// Superoperator of independent channels on a two-mode register.
Eigen::MatrixXcd tensor_superop(const Eigen::MatrixXcd& s1, const Eigen::MatrixXcd& s2, int l1, int l2) {
    const int d = l1 * l2;
    Eigen::MatrixXcd out(d * d, d * d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const int row = r + c * d;
            const int a_row = (r / l2) + (c / l2) * l1;
            const int b_row = (r % l2) + (c % l2) * l2;
            for (int rp = 0; rp < d; ++rp) {
                for (int cp = 0; cp < d; ++cp) {
                    out(row, rp + cp * d) =
                        s1(a_row, (rp / l2) + (cp / l2) * l1) * s2(b_row, (rp % l2) + (cp % l2) * l2);
                }
            }
        }
    }
    return out;
}

// Excitation number of `qubit` in register index k.
int level_of(int k, int qubit, int n, int levels) {
    for (int q = n - 1; q > qubit; --q) {
        k /= levels;
    }
    return k % levels;
}

void apply_virtual_z(Eigen::VectorXcd& rho, int qubit, double angle, int n, int levels, int d) {
    for (int r = 0; r < d; ++r) {
        const int nr = level_of(r, qubit, n, levels);
        for (int c = 0; c < d; ++c) {
            const int nc = level_of(c, qubit, n, levels);
            if (nr != nc) {
                rho[r + c * d] *= std::polar(1.0, angle * (nr - nc));
            }
        }
    }
}

bool computational(int k, int n, int levels) {
    for (int q = 0; q < n; ++q) {
        if (level_of(k, q, n, levels) > 1) {
            return false;
        }
    }
    return true;
}

SequenceOutcome run_depolarizing(const RbSequence& seq, const CliffordGroup& group, const DepolarizingModel& m) {
    require(m.lambda >= 0.0 && m.lambda <= 1.0 && m.interleaved_lambda >= 0.0 && m.interleaved_lambda <= 1.0,
            ErrorKind::InvalidArgument, "depolarizing parameters must lie in [0, 1]");
    const int d = 1 << seq.n_qubits;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
    rho(0, 0) = 1.0;
    auto step = [&](std::size_t idx, double lambda) {
        const auto& u = group.element(idx).unitary;
        rho = u * rho * u.adjoint();
        rho = lambda * rho;
        rho.diagonal().array() += (1.0 - lambda) / d;
    };
    for (std::size_t k = 0; k < seq.cliffords.size(); ++k) {
        step(seq.cliffords[k], m.lambda);
        if (seq.interleaved && k + 1 < seq.cliffords.size()) {
            step(*seq.interleaved, m.interleaved_lambda);
        }
    }
    return {rho(0, 0).real(), 0.0, 0.0};
}

SequenceOutcome run_channel(const RbSequence& seq, const CliffordGroup& group, const ChannelModel& m) {
    const int n = m.n_qubits;
    const int d = m.dim();
    Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(d * d);
    rho[0] = 1.0;
    auto apply = [&](const Eigen::MatrixXcd& s, const char* what) {
        if (s.rows() != d * d || s.cols() != d * d) {
            throw Error(ErrorKind::ModelMismatch, std::string("channel model lacks ") + what);
        }
        rho = s * rho;
    };
    for (const auto& p : seq.circuit(group)) {
        if (p.qubit < 0 || p.qubit >= n) {
            throw Error(ErrorKind::ModelMismatch, "primitive addresses a qubit the model does not have");
        }
        switch (p.kind) {
            case PrimitiveKind::X90:
                apply(m.x90[p.qubit], "X90");
                break;
            case PrimitiveKind::X180:
                apply(m.x180[p.qubit], "X180");
                break;
            case PrimitiveKind::VirtualZ:
                apply_virtual_z(rho, p.qubit, p.angle, n, m.levels, d);
                break;
            case PrimitiveKind::CZ:
                apply(m.cz, "CZ");
                break;
        }
    }
    SequenceOutcome out;
    out.p_ground = rho[0].real();
    double comp = 0.0;
    for (int k = 0; k < d; ++k) {
        if (computational(k, n, m.levels)) {
            comp += rho[k + k * d].real();
        }
    }
    out.leaked = std::max(0.0, 1.0 - comp);
    return out;
}

SequenceOutcome run_one(const RbSequence& seq, const CliffordGroup& group, const NoiseModel& model, int shots,
                        std::uint64_t seed, std::uint64_t stream) {
    if (seq.n_qubits != group.n_qubits()) {
        throw Error(ErrorKind::ModelMismatch, "sequence and group qubit counts differ");
    }
    SequenceOutcome out;
    if (const auto* dep = std::get_if<DepolarizingModel>(&model)) {
        out = run_depolarizing(seq, group, *dep);
    } else {
        const auto& ch = std::get<ChannelModel>(model);
        if (ch.n_qubits != seq.n_qubits) {
            throw Error(ErrorKind::ModelMismatch, "channel model register size differs from the sequence");
        }
        out = run_channel(seq, group, ch);
    }
    const double p = std::clamp(out.p_ground, 0.0, 1.0);
    if (shots > 0) {
        CounterRng rng(seed, stream);
        out.survival = static_cast<double>(rng.binomial(static_cast<std::uint64_t>(shots), p)) / shots;
    } else {
        out.survival = p;
    }
    return out;
}

void validate_model(const ChannelModel& m) {
    require(m.n_qubits == 1 || m.n_qubits == 2, ErrorKind::InvalidArgument, "one or two qubits supported");
    require(m.levels >= 2, ErrorKind::InvalidArgument, "at least two levels per qubit");
}

}  // namespace

ChannelModel ChannelModel::ideal(int n_qubits, int levels) {
    ChannelModel m;
    m.n_qubits = n_qubits;
    m.levels = levels;
    validate_model(m);
    for (int q = 0; q < n_qubits; ++q) {
        m.x90[q] = unitary_superop(padded(circuit_unitary({{PrimitiveKind::X90, q}}, n_qubits), n_qubits, levels));
        m.x180[q] = unitary_superop(padded(circuit_unitary({{PrimitiveKind::X180, q}}, n_qubits), n_qubits, levels));
    }
    if (n_qubits == 2) {
        m.cz = unitary_superop(padded(circuit_unitary({{PrimitiveKind::CZ}}, 2), 2, levels));
    }
    return m;
}

ChannelModel dynamics_channel_model(const DuffingMode& mode, const QubitNoise& noise,
                                    const DynamicsModelOptions& options) {
    require(options.pulse_ns > 0.0 && options.spacing_ns >= 0.0, ErrorKind::InvalidArgument,
            "pulse duration must be positive and spacing non-negative");
    ChannelModel m;
    m.n_qubits = 1;
    m.levels = mode.levels;
    m.x90[0] = single_qubit_superoperator(mode, single_qubit_gate(0.5 * kPi, 0.0, options.pulse_ns, options.dt_ns),
                                          noise, options.single_qubit_t2, options.spacing_ns);
    m.x180[0] = single_qubit_superoperator(mode, single_qubit_gate(kPi, 0.0, options.pulse_ns, options.dt_ns), noise,
                                           options.single_qubit_t2, options.spacing_ns);
    return m;
}

ChannelModel dynamics_channel_model(const DuffingPair& pair, const NoiseParams& noise, const CzCalibration& cz,
                                    const DynamicsModelOptions& options) {
    pair.validate();
    noise.validate();
    const int l = pair.q[0].levels;
    require(pair.q[1].levels == l, ErrorKind::InvalidArgument, "both modes need the same truncation");
    ChannelModel m;
    m.n_qubits = 2;
    m.levels = l;
    const double slot = options.pulse_ns + options.spacing_ns;
    std::array<Eigen::MatrixXcd, 2> idle;
    std::array<ChannelModel, 2> single;
    for (int q = 0; q < 2; ++q) {
        idle[q] = single_qubit_superoperator(pair.q[q], SingleQubitGate{}, noise.q[q], options.single_qubit_t2, slot);
        single[q] = dynamics_channel_model(pair.q[q], noise.q[q], options);
    }
    m.x90[0] = tensor_superop(single[0].x90[0], idle[1], l, l);
    m.x90[1] = tensor_superop(idle[0], single[1].x90[0], l, l);
    m.x180[0] = tensor_superop(single[0].x180[0], idle[1], l, l);
    m.x180[1] = tensor_superop(idle[0], single[1].x180[0], l, l);

    // CZ in the dressed idle basis, then the calibrated frame updates.
    const auto waves = cz.pulse.waveforms();
    const Eigen::MatrixXcd s_bare = pair_superoperator(pair, waves[0], waves[1], noise);
    const Eigen::MatrixXcd v = idle_eigenbasis(pair).cast<cd>();
    const Eigen::MatrixXcd s = kron(Eigen::MatrixXcd(v.transpose()), Eigen::MatrixXcd(v.transpose())) * s_bare *
                               kron(v, v);
    const int d = l * l;
    Eigen::VectorXcd phase(d);
    for (int k = 0; k < d; ++k) {
        phase[k] = std::polar(1.0, cz.virtual_z[0] * (k / l) + cz.virtual_z[1] * (k % l));
    }
    Eigen::VectorXcd frame(d * d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            frame[r + c * d] = phase[r] * std::conj(phase[c]);
        }
    }
    m.cz = frame.asDiagonal() * s;
    return m;
}

std::vector<SequenceOutcome> execute(const std::vector<RbSequence>& sequences, const CliffordGroup& group,
                                     const NoiseModel& model, int shots, std::uint64_t seed) {
    require(shots >= 0, ErrorKind::InvalidArgument, "shots must be non-negative");
    std::vector<SequenceOutcome> out(sequences.size());
    parallel_for(sequences.size(),
                 [&](std::size_t i) { out[i] = run_one(sequences[i], group, model, shots, seed, i); });
    return out;
}

// ---------------------------------------------------------------- analysis

double DecayFit::p_stderr() const {
    const double v = covariance(1, 1);
    return std::isfinite(v) && v > 0.0 ? std::sqrt(v) : 0.0;
}

DecayFit fit_decay(const std::vector<int>& lengths, const std::vector<double>& survivals,
                   const std::vector<double>& stddevs, int dimension) {
    const std::size_t n = lengths.size();
    require(n >= 3, ErrorKind::EmptyGrid, "decay fit needs at least three lengths");
    require(survivals.size() == n && stddevs.size() == n, ErrorKind::InvalidArgument, "fit input sizes differ");
    require(dimension >= 2, ErrorKind::InvalidArgument, "dimension must be at least 2");
    for (std::size_t i = 0; i < n; ++i) {
        require(lengths[i] >= 0 && std::isfinite(survivals[i]) && std::isfinite(stddevs[i]) && stddevs[i] >= 0.0,
                ErrorKind::InvalidArgument, "bad fit input");
    }
    const double b0 = 1.0 / dimension;
    double a0 = survivals.front() - b0;
    if (a0 <= 1e-6) {
        a0 = 1.0 - b0;
    }
    // Start p from the point whose normalized decay is closest to 1/e.
    double p0 = 0.99;
    double best = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = (survivals[i] - b0) / a0;
        if (lengths[i] > 0 && ratio > 0.0 && ratio < 1.0 && std::abs(ratio - std::exp(-1.0)) < best) {
            best = std::abs(ratio - std::exp(-1.0));
            p0 = std::pow(ratio, 1.0 / lengths[i]);
        }
    }
    if (best == 1e300) {
        p0 = 1.0 - 1e-6;
    }
    std::vector<double> weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = 1.0 / std::max(stddevs[i], 1e-6);
    }
    auto residuals = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            r[static_cast<Eigen::Index>(i)] =
                (x[0] * std::pow(x[1], lengths[i]) + x[2] - survivals[i]) * weight[i];
        }
        return r;
    };
    const auto lm = levenberg_marquardt(residuals, Eigen::Vector3d(a0, p0, b0), true);
    DecayFit fit;
    fit.a = lm.params[0];
    fit.p = lm.params[1];
    fit.b = lm.params[2];
    if (!lm.params.allFinite() || fit.p <= 0.0) {
        throw Error(ErrorKind::FitDivergence, "decay fit did not produce a valid p");
    }
    if (fit.p > 1.0 + 1e-6) {
        throw Error(ErrorKind::FitDivergence, "fitted p exceeds 1");
    }
    if (fit.p > 1.0) {
        fit.p = 1.0;
        fit.clamped = true;
    }
    fit.covariance = lm.covariance;
    return fit;
}

ErrorRates error_rates(double p_rb, std::optional<double> p_irb, int dimension, std::optional<double> divisor) {
    require(dimension >= 2, ErrorKind::InvalidArgument, "dimension must be at least 2");
    require(p_rb > 0.0 && p_rb <= 1.0, ErrorKind::InvalidArgument, "p_rb must lie in (0, 1]");
    const double scale = (dimension - 1.0) / dimension;
    ErrorRates out;
    out.epc = scale * (1.0 - p_rb);
    if (p_irb) {
        require(*p_irb > 0.0 && *p_irb <= 1.0, ErrorKind::InvalidArgument, "p_irb must lie in (0, 1]");
        out.epg = scale * (1.0 - *p_irb / p_rb);
        out.ratio_out_of_range = *p_irb > p_rb;
    } else if (divisor) {
        require(*divisor > 0.0, ErrorKind::InvalidArgument, "divisor must be positive");
        out.epg = out.epc / *divisor;
    }
    return out;
}

LeakageEstimate leakage_estimate(const std::vector<int>& lengths, const std::vector<double>& leaked,
                                 double gates_per_step) {
    const std::size_t n = lengths.size();
    require(n >= 3, ErrorKind::EmptyGrid, "leakage fit needs at least three lengths");
    require(leaked.size() == n, ErrorKind::InvalidArgument, "leakage input sizes differ");
    require(gates_per_step > 0.0, ErrorKind::InvalidArgument, "gates per step must be positive");
    LeakageEstimate out;
    const double peak = *std::max_element(leaked.begin(), leaked.end());
    if (peak < 1e-12) {
        return out;
    }
    // Seed: initial slope from the shortest length, saturation above the peak.
    std::size_t first = 0;
    while (first < n && lengths[first] <= 0) {
        ++first;
    }
    require(first < n, ErrorKind::InvalidArgument, "need a positive length");
    const double slope = std::max(leaked[first] / lengths[first], 1e-12);
    const double linf0 = std::min(1.0, 2.0 * peak);
    const double gamma0 = std::clamp(1.0 - slope / linf0, 0.0, 1.0 - 1e-12);
    auto residuals = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            r[static_cast<Eigen::Index>(i)] = x[0] * (1.0 - std::pow(x[1], lengths[i])) - leaked[i];
        }
        return r;
    };
    const auto lm = levenberg_marquardt(residuals, Eigen::Vector2d(linf0, gamma0), true);
    if (!lm.params.allFinite()) {
        throw Error(ErrorKind::FitDivergence, "leakage fit diverged");
    }
    out.l_inf = lm.params[0];
    out.gamma = lm.params[1];
    const Eigen::Vector2d grad(1.0 - out.gamma, -out.l_inf);
    out.per_gate = out.l_inf * (1.0 - out.gamma) / gates_per_step;
    const double var = grad.dot(lm.covariance * grad);
    out.per_gate_stderr = (std::isfinite(var) && var > 0.0 ? std::sqrt(var) : 0.0) / gates_per_step;
    return out;
}

namespace {

// Pairwise summation keeps the reduction independent of how the slots were
// filled and tight in rounding.
double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += x[i];
        }
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

void validate_rb_options(const RbOptions& options) {
    require(!options.lengths.empty(), ErrorKind::EmptyGrid, "no sequence lengths");
    require(std::is_sorted(options.lengths.begin(), options.lengths.end()) && options.lengths.front() >= 0,
            ErrorKind::InvalidArgument, "lengths must be ascending and non-negative");
    require(options.randomizations >= 1, ErrorKind::InvalidArgument, "need at least one randomization");
    require(options.shots >= 0, ErrorKind::InvalidArgument, "shots must be non-negative");
}

// outcomes[li * nr + r]
RBResult summarize(const std::vector<SequenceOutcome>& outcomes, const RbOptions& options, int dimension,
                   bool has_leakage, double gates_per_step) {
    const std::size_t nl = options.lengths.size();
    const std::size_t nr = static_cast<std::size_t>(options.randomizations);
    RBResult out;
    out.lengths = options.lengths;
    std::vector<double> surv(nr);
    std::vector<double> leak(nr);
    std::vector<double> sem(nl);
    for (std::size_t li = 0; li < nl; ++li) {
        for (std::size_t r = 0; r < nr; ++r) {
            surv[r] = outcomes[li * nr + r].survival;
            leak[r] = outcomes[li * nr + r].leaked;
        }
        const double mean = pairwise_sum(surv.data(), nr) / static_cast<double>(nr);
        for (auto& v : surv) {
            v = (v - mean) * (v - mean);
        }
        const double var = nr > 1 ? pairwise_sum(surv.data(), nr) / static_cast<double>(nr - 1) : 0.0;
        out.mean.push_back(mean);
        out.stddev.push_back(std::sqrt(var));
        out.count.push_back(static_cast<int>(nr));
        out.leaked_mean.push_back(pairwise_sum(leak.data(), nr) / static_cast<double>(nr));
        sem[li] = out.stddev.back() / std::sqrt(static_cast<double>(nr));
    }
    out.fit = fit_decay(out.lengths, out.mean, sem, dimension);
    const auto rates = error_rates(out.fit.p, std::nullopt, dimension, options.divisor);
    out.epc = rates.epc;
    out.epg = rates.epg;
    if (has_leakage) {
        out.leakage = leakage_estimate(out.lengths, out.leaked_mean, gates_per_step);
    }
    return out;
}

bool model_has_leakage(const NoiseModel& model) {
    const auto* ch = std::get_if<ChannelModel>(&model);
    return ch != nullptr && ch->levels > 2;
}

struct Slot {
    std::vector<Primitive> zs;
    std::optional<PrimitiveKind> pulse;
};

// Virtual Zs ride with the next physical pulse; trailing Zs form a final
// pulse-free slot.
std::vector<Slot> slots_of(const std::vector<Primitive>& circuit) {
    std::vector<Slot> out(1);
    for (const auto& p : circuit) {
        if (p.kind == PrimitiveKind::VirtualZ) {
            out.back().zs.push_back(p);
        } else {
            require(p.kind != PrimitiveKind::CZ, ErrorKind::ModelMismatch, "CZ in a single-qubit sequence");
            out.back().pulse = p.kind;
            out.emplace_back();
        }
    }
    return out;
}

std::array<SequenceOutcome, 2> run_joint(const std::array<RbSequence, 2>& seqs,
                                         const std::array<Eigen::MatrixXcd, 3>& ops0,
                                         const std::array<Eigen::MatrixXcd, 3>& ops1, int levels,
                                         const SimultaneousOptions& sim) {
    const int l = levels;
    const int d = l * l;
    const auto& c1 = CliffordGroup::c1();
    const std::array<std::vector<Slot>, 2> slots{slots_of(seqs[0].circuit(c1)), slots_of(seqs[1].circuit(c1))};
    const double zz_phase = -2.0 * kPi * 1e-3 * sim.zz_mhz * sim.slot_ns;
    Eigen::VectorXcd zz(d * d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            zz[r + c * d] = std::polar(1.0, zz_phase * ((r / l) * (r % l) - (c / l) * (c % l)));
        }
    }
    auto op_index = [](const std::optional<PrimitiveKind>& k) {
        return !k ? 0 : (*k == PrimitiveKind::X90 ? 1 : 2);
    };
    std::array<std::array<Eigen::MatrixXcd, 3>, 3> joint;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            joint[a][b] = tensor_superop(ops0[a], ops1[b], l, l);
        }
    }
    Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(d * d);
    rho[0] = 1.0;
    const std::size_t n_slots = std::max(slots[0].size(), slots[1].size());
    for (std::size_t k = 0; k < n_slots; ++k) {
        std::array<int, 2> op{0, 0};
        bool pulse = false;
        for (int q = 0; q < 2; ++q) {
            if (k < slots[q].size()) {
                for (const auto& z : slots[q][k].zs) {
                    apply_virtual_z(rho, q, z.angle, 2, l, d);
                }
                op[q] = op_index(slots[q][k].pulse);
                pulse = pulse || op[q] != 0;
            }
        }
        if (pulse) {
            rho = joint[op[0]][op[1]] * rho;
            rho = rho.cwiseProduct(zz);
        }
    }
    std::array<SequenceOutcome, 2> out;
    for (int q = 0; q < 2; ++q) {
        double ground = 0.0;
        double comp = 0.0;
        for (int k = 0; k < d; ++k) {
            const double pop = rho[k + k * d].real();
            const int level = q == 0 ? k / l : k % l;
            ground += level == 0 ? pop : 0.0;
            comp += level <= 1 ? pop : 0.0;
        }
        out[q].p_ground = ground;
        out[q].leaked = std::max(0.0, 1.0 - comp);
    }
    return out;
}

}  // namespace

RBResult run_rb(const CliffordGroup& group, const NoiseModel& model, const RbOptions& options) {
    validate_rb_options(options);
    require(!options.interleave || *options.interleave < group.size(), ErrorKind::InvalidArgument,
            "interleaved gate not in group");
    const std::size_t nl = options.lengths.size();
    const std::size_t nr = static_cast<std::size_t>(options.randomizations);
    const std::uint64_t seq_seed = derive_seed(options.seed, 0x5E9);
    const std::uint64_t shot_seed = derive_seed(options.seed, 0x5407);
    std::vector<SequenceOutcome> outcomes(nl * nr);
    parallel_for(nl * nr, [&](std::size_t t) {
        const auto seq = generate_sequence(options.lengths[t / nr], group, options.interleave, seq_seed, t);
        outcomes[t] = run_one(seq, group, model, options.shots, shot_seed, t);
    });
    double per_step = group.mean_cz();
    if (options.interleave) {
        per_step += group.element(*options.interleave).cz_count();
    }
    return summarize(outcomes, options, 1 << group.n_qubits(), model_has_leakage(model),
                     per_step > 0.0 ? per_step : 1.0);
}

std::array<RBResult, 2> run_simultaneous_rb(const std::array<NoiseModel, 2>& models, const RbOptions& options,
                                            const SimultaneousOptions& sim) {
    validate_rb_options(options);
    std::array<RBResult, 2> out;
    if (sim.zz_mhz == 0.0) {
        for (int q = 0; q < 2; ++q) {
            RbOptions o = options;
            o.seed = derive_seed(options.seed, 0x51u + static_cast<std::uint64_t>(q));
            out[q] = run_rb(CliffordGroup::c1(), models[q], o);
        }
        return out;
    }
    require(std::isfinite(sim.zz_mhz) && sim.slot_ns > 0.0, ErrorKind::InvalidArgument, "bad ZZ settings");
    std::array<std::array<Eigen::MatrixXcd, 3>, 2> ops;
    int levels = 0;
    for (int q = 0; q < 2; ++q) {
        const auto* ch = std::get_if<ChannelModel>(&models[q]);
        if (ch == nullptr || ch->n_qubits != 1) {
            throw Error(ErrorKind::ModelMismatch, "ZZ simultaneous RB needs single-qubit channel models");
        }
        if (q == 1 && ch->levels != levels) {
            throw Error(ErrorKind::ModelMismatch, "channel models differ in truncation");
        }
        levels = ch->levels;
        const int d2 = ch->dim() * ch->dim();
        if (ch->x90[0].rows() != d2 || ch->x180[0].rows() != d2) {
            throw Error(ErrorKind::ModelMismatch, "channel model lacks single-qubit pulses");
        }
        ops[q] = {Eigen::MatrixXcd::Identity(d2, d2), ch->x90[0], ch->x180[0]};
    }
    const std::size_t nl = options.lengths.size();
    const std::size_t nr = static_cast<std::size_t>(options.randomizations);
    const std::uint64_t seq_seed = derive_seed(options.seed, 0x5E9);
    const std::uint64_t shot_seed = derive_seed(options.seed, 0x5407);
    const auto& c1 = CliffordGroup::c1();
    std::array<std::vector<SequenceOutcome>, 2> outcomes{std::vector<SequenceOutcome>(nl * nr),
                                                         std::vector<SequenceOutcome>(nl * nr)};
    parallel_for(nl * nr, [&](std::size_t t) {
        const int m = options.lengths[t / nr];
        const std::array<RbSequence, 2> seqs{generate_sequence(m, c1, options.interleave, seq_seed, 2 * t),
                                             generate_sequence(m, c1, options.interleave, seq_seed, 2 * t + 1)};
        auto joint = run_joint(seqs, ops[0], ops[1], levels, sim);
        for (int q = 0; q < 2; ++q) {
            const double p = std::clamp(joint[q].p_ground, 0.0, 1.0);
            if (options.shots > 0) {
                CounterRng rng(shot_seed, 2 * t + static_cast<std::uint64_t>(q));
                joint[q].survival =
                    static_cast<double>(rng.binomial(static_cast<std::uint64_t>(options.shots), p)) / options.shots;
            } else {
                joint[q].survival = p;
            }
            outcomes[q][t] = joint[q];
        }
    });
    for (int q = 0; q < 2; ++q) {
        out[q] = summarize(outcomes[q], options, 2, levels > 2, 1.0);
    }
    return out;
}

double coherence_limit(const std::vector<CoherenceSegment>& segments) {
    double eps = 0.0;
    for (const auto& seg : segments) {
        const int n = static_cast<int>(seg.t1_t2_us.size());
        require(n >= 1 && n <= 2, ErrorKind::InvalidArgument, "one or two qubits per segment");
        require(seg.duration_ns >= 0.0, ErrorKind::InvalidArgument, "segment duration must be non-negative");
        const int d = 1 << n;
        // Jump operators embedded in the d-dimensional qubit space.
        double sum = 0.0;
        for (int q = 0; q < n; ++q) {
            const auto [t1, t2] = seg.t1_t2_us[q];
            require(t1 > 0.0 && t2 > 0.0 && t2 <= 2.0 * t1 * (1.0 + 1e-12), ErrorKind::InvalidArgument,
                    "need 0 < t2 <= 2 t1");
            const double gamma = 1e-3 / t1;
            const double gphi = std::max(0.0, 1e-3 / t2 - 0.5e-3 / t1);
            const Eigen::Matrix2cd lower{{0, 1}, {0, 0}};
            const Eigen::Matrix2cd z{{1, 0}, {0, -1}};
            for (const Eigen::Matrix2cd& op : {Eigen::Matrix2cd(std::sqrt(gamma) * lower),
                                               Eigen::Matrix2cd(std::sqrt(0.5 * gphi) * z)}) {
                const Eigen::MatrixXcd l = embed_single(op, q, n);
                sum += d * (l.adjoint() * l).trace().real() - std::norm(l.trace());
            }
        }
        eps += seg.duration_ns * sum / (d * (d + 1.0));
    }
    return eps;
}

double CoherenceCdf::operator()(double x) const {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

CoherenceCdf coherence_cdf(std::vector<double> samples) {
    require(!samples.empty(), ErrorKind::EmptyGrid, "no samples");
    for (double s : samples) {
        require(std::isfinite(s), ErrorKind::InvalidArgument, "samples must be finite");
    }
    std::sort(samples.begin(), samples.end());
    CoherenceCdf out;
    const std::size_t n = samples.size();
    out.median = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    out.sorted = std::move(samples);
    return out;
}

}  // namespace qtwin
