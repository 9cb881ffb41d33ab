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


#include "qtwin/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "qtwin/error.hpp"

namespace qtwin {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::Config, path + ": " + what);
}

// Rejects keys outside `allowed` so typos do not silently fall back to
// defaults.
void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) {
        fail(path, "expected a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            fail(path + "." + key, "unknown key");
        }
    }
}

template <typename T>
T read(const YAML::Node& node, const std::string& path) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail(path, "wrong type");
    }
}

template <typename T>
void read_opt(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
    if (const auto n = parent[key]) {
        out = read<T>(n, path + "." + key);
    }
}

template <typename T>
void read_opt(const YAML::Node& parent, const char* key, const std::string& path, std::optional<T>& out) {
    if (const auto n = parent[key]) {
        out = read<T>(n, path + "." + key);
    }
}

template <typename T>
T read_req(const YAML::Node& parent, const char* key, const std::string& path) {
    const auto n = parent[key];
    if (!n) {
        fail(path + "." + key, "missing required key");
    }
    return read<T>(n, path + "." + key);
}

ChainParams parse_chain(const YAML::Node& n, const std::string& path) {
    check_keys(n, path,
               {"ej_max_ghz", "ec_ghz", "asym", "charge_cutoff", "levels_kept", "omega_r_bare_ghz", "omega_p_ghz",
                "g_qr_ghz", "j_rp_ghz", "kappa_p_ghz", "kappa_int_ghz", "n_r", "n_p"});
    ChainParams c;
    c.transmon.ej_max = read_req<double>(n, "ej_max_ghz", path);
    c.transmon.ec = read_req<double>(n, "ec_ghz", path);
    read_opt(n, "asym", path, c.transmon.asym);
    read_opt(n, "charge_cutoff", path, c.transmon.charge_cutoff);
    read_opt(n, "levels_kept", path, c.transmon.levels_kept);
    c.omega_r_bare = read_req<double>(n, "omega_r_bare_ghz", path);
    c.omega_p = read_req<double>(n, "omega_p_ghz", path);
    c.g_qr = read_req<double>(n, "g_qr_ghz", path);
    c.j_rp = read_req<double>(n, "j_rp_ghz", path);
    c.kappa_p = read_req<double>(n, "kappa_p_ghz", path);
    read_opt(n, "kappa_int_ghz", path, c.kappa_int);
    read_opt(n, "n_r", path, c.n_r);
    read_opt(n, "n_p", path, c.n_p);
    return c;
}

ReadoutConfig parse_readout(const YAML::Node& n, const std::string& path, std::optional<double>& probe) {
    check_keys(n, path,
               {"probe_ghz", "integration_ns", "amplitude_sqrt_photons", "eta", "shots", "seed", "thermal_population",
                "dt_ns", "two_step"});
    ReadoutConfig r;
    read_opt(n, "probe_ghz", path, probe);
    r.probe_ghz = probe.value_or(r.probe_ghz);
    read_opt(n, "integration_ns", path, r.integration_ns);
    read_opt(n, "amplitude_sqrt_photons", path, r.amplitude);
    read_opt(n, "eta", path, r.eta);
    read_opt(n, "shots", path, r.shots);
    read_opt(n, "seed", path, r.seed);
    read_opt(n, "thermal_population", path, r.thermal_population);
    read_opt(n, "dt_ns", path, r.dt_ns);
    if (const auto t = n["two_step"]) {
        check_keys(t, path + ".two_step", {"scale", "duration_ns"});
        TwoStep ts;
        read_opt(t, "scale", path + ".two_step", ts.scale);
        read_opt(t, "duration_ns", path + ".two_step", ts.duration_ns);
        r.two_step = ts;
    }
    return r;
}

QubitDescription parse_qubit(const YAML::Node& n, const std::string& path) {
    check_keys(n, path, {"id", "operating_phi", "chain", "noise", "observations", "reference", "readout"});
    QubitDescription q;
    q.id = read_req<int>(n, "id", path);
    read_opt(n, "operating_phi", path, q.operating.phi);
    if (!n["chain"]) {
        fail(path + ".chain", "missing required key");
    }
    q.chain = parse_chain(n["chain"], path + ".chain");
    if (const auto t = n["noise"]) {
        const std::string p = path + ".noise";
        check_keys(t, p, {"t1_us", "t2_star_us", "t2_echo_us"});
        q.noise.t1_us = read_req<double>(t, "t1_us", p);
        q.noise.t2_star_us = read_req<double>(t, "t2_star_us", p);
        q.noise.t2_echo_us = read_req<double>(t, "t2_echo_us", p);
    }
    if (const auto o = n["observations"]) {
        const std::string p = path + ".observations";
        check_keys(o, p, {"ge_max_ghz", "ge_min_ghz", "anharmonicity_ghz", "resonator_min_ghz"});
        QubitObservations obs;
        obs.ge_max_ghz = read_req<double>(o, "ge_max_ghz", p);
        obs.ge_min_ghz = read_req<double>(o, "ge_min_ghz", p);
        read_opt(o, "anharmonicity_ghz", p, obs.anharmonicity_ghz);
        read_opt(o, "resonator_min_ghz", p, obs.resonator_min_ghz);
        q.observations = obs;
    }
    if (const auto r = n["reference"]) {
        const std::string p = path + ".reference";
        check_keys(r, p, {"ej_max_ghz", "ec_ghz", "g_qr_ghz"});
        read_opt(r, "ej_max_ghz", p, q.reference.ej_max_ghz);
        read_opt(r, "ec_ghz", p, q.reference.ec_ghz);
        read_opt(r, "g_qr_ghz", p, q.reference.g_qr_ghz);
    }
    if (const auto r = n["readout"]) {
        q.readout = parse_readout(r, path + ".readout", q.probe_ghz);
    }
    return q;
}

TransferFunction parse_flux_line(const YAML::Node& n, const std::string& path) {
    check_keys(n, path, {"gain", "dt_ns", "iir", "fir"});
    TransferFunction tf;
    read_opt(n, "gain", path, tf.gain);
    read_opt(n, "dt_ns", path, tf.dt_ns);
    if (const auto iir = n["iir"]) {
        if (!iir.IsSequence()) {
            fail(path + ".iir", "expected a list");
        }
        for (std::size_t k = 0; k < iir.size(); ++k) {
            const std::string p = path + ".iir[" + std::to_string(k) + "]";
            check_keys(iir[k], p, {"amplitude", "tau_ns"});
            tf.iir.push_back({read_req<double>(iir[k], "amplitude", p), read_req<double>(iir[k], "tau_ns", p)});
        }
    }
    if (const auto fir = n["fir"]) {
        tf.fir = read<std::vector<double>>(fir, path + ".fir");
    }
    return tf;
}

// Shortest decimal that reads back to the same double.
std::string num(double x) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    std::string s(buf.data(), res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

void emit_kv(YAML::Emitter& out, const char* key, double v) { out << YAML::Key << key << YAML::Value << num(v); }

template <typename T>
void emit_kv(YAML::Emitter& out, const char* key, const T& v) {
    out << YAML::Key << key << YAML::Value << v;
}

void emit_kv(YAML::Emitter& out, const char* key, const std::optional<double>& v) {
    if (v) {
        emit_kv(out, key, *v);
    }
}

}  // namespace

void DeviceDescription::validate() const {
    if (id.empty()) {
        fail("device", "empty device id");
    }
    std::set<int> ids;
    for (const auto& q : qubits) {
        const std::string p = "qubits[id=" + std::to_string(q.id) + "]";
        if (!ids.insert(q.id).second) {
            fail(p, "duplicate qubit id");
        }
        try {
            q.chain.validate();
            q.noise.validate();
            q.readout.validate();
        } catch (const Error& e) {
            fail(p, e.what());
        }
        if (q.observations && !(q.observations->ge_max_ghz > q.observations->ge_min_ghz &&
                                q.observations->ge_min_ghz > 0.0)) {
            fail(p + ".observations", "need ge_max_ghz > ge_min_ghz > 0");
        }
        if (!std::isfinite(q.operating.phi)) {
            fail(p + ".operating_phi", "not finite");
        }
    }
    for (std::size_t k = 0; k < couplers.size(); ++k) {
        const auto& c = couplers[k];
        const std::string p = "couplers[" + std::to_string(k) + "]";
        if (c.qubits[0] == c.qubits[1]) {
            fail(p, "a coupler needs two distinct qubits");
        }
        for (int q : c.qubits) {
            if (!ids.count(q)) {
                fail(p, "references unknown qubit " + std::to_string(q));
            }
        }
        if (!(c.j_qq_ghz >= 0.0) || !(c.interaction_ghz > 0.0)) {
            fail(p, "need j_qq_ghz >= 0 and interaction_ghz > 0");
        }
    }
    try {
        flux_line.validate();
    } catch (const Error& e) {
        fail("flux_line", e.what());
    }
}

const QubitDescription& DeviceDescription::qubit(int qid) const {
    for (const auto& q : qubits) {
        if (q.id == qid) {
            return q;
        }
    }
    fail("qubit", "unknown qubit " + std::to_string(qid));
}

FluxMap DeviceDescription::flux_map(int qid) const {
    const auto& q = qubit(qid);
    if (q.observations) {
        const double ec = q.chain.transmon.ec;
        const double ratio = (q.observations->ge_min_ghz + ec) / (q.observations->ge_max_ghz + ec);
        return FluxMap{q.observations->ge_max_ghz, ec, ratio * ratio};
    }
    return FluxMap::from_chain(q.chain);
}

DuffingPair DeviceDescription::pair(std::size_t coupler) const {
    if (coupler >= couplers.size()) {
        fail("couplers", "no coupler with index " + std::to_string(coupler));
    }
    const auto& c = couplers[coupler];
    DuffingPair p;
    for (int k = 0; k < 2; ++k) {
        const auto& q = qubit(c.qubits[k]);
        auto& mode = p.q[k];
        mode.map = flux_map(q.id);
        mode.phi_idle = q.operating.phi;
        // at a sweet spot the measured line is used as is
        mode.idle_ghz = mode.map.frequency(q.operating.phi);
        if (q.observations && q.operating.phi == 0.0) {
            mode.idle_ghz = q.observations->ge_max_ghz;
        } else if (q.observations && std::abs(q.operating.phi) == 0.5) {
            mode.idle_ghz = q.observations->ge_min_ghz;
        }
        mode.anharmonicity_ghz = q.observations && q.observations->anharmonicity_ghz
                                     ? *q.observations->anharmonicity_ghz
                                     : -q.chain.transmon.ec;
    }
    p.j_qq = c.j_qq_ghz;
    p.interaction_ghz = c.interaction_ghz;
    return p;
}

NoiseParams DeviceDescription::pair_noise(std::size_t coupler) const {
    if (coupler >= couplers.size()) {
        fail("couplers", "no coupler with index " + std::to_string(coupler));
    }
    NoiseParams n;
    n.q[0] = qubit(couplers[coupler].qubits[0]).noise;
    n.q[1] = qubit(couplers[coupler].qubits[1]).noise;
    return n;
}

DeviceDescription parse_device(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail("config", std::string("parse error: ") + e.what());
    }
    check_keys(root, "config", {"device", "qubits", "couplers", "flux_line"});
    DeviceDescription d;
    d.id = read_req<std::string>(root, "device", "config");
    const auto qs = root["qubits"];
    if (!qs || !qs.IsSequence() || qs.size() == 0) {
        fail("config.qubits", "expected a non-empty list");
    }
    for (std::size_t k = 0; k < qs.size(); ++k) {
        d.qubits.push_back(parse_qubit(qs[k], "qubits[" + std::to_string(k) + "]"));
    }
    if (const auto cs = root["couplers"]) {
        if (!cs.IsSequence()) {
            fail("config.couplers", "expected a list");
        }
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const std::string p = "couplers[" + std::to_string(k) + "]";
            check_keys(cs[k], p, {"qubits", "j_qq_ghz", "interaction_ghz"});
            CouplerDescription c;
            const auto ids = read_req<std::vector<int>>(cs[k], "qubits", p);
            if (ids.size() != 2) {
                fail(p + ".qubits", "expected two qubit ids");
            }
            c.qubits = {ids[0], ids[1]};
            c.j_qq_ghz = read_req<double>(cs[k], "j_qq_ghz", p);
            c.interaction_ghz = read_req<double>(cs[k], "interaction_ghz", p);
            d.couplers.push_back(c);
        }
    }
    if (const auto fl = root["flux_line"]) {
        d.flux_line = parse_flux_line(fl, "flux_line");
    }
    d.validate();
    return d;
}

DeviceDescription load_device(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(path.string(), "cannot open");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_device(ss.str());
}

std::string emit_device(const DeviceDescription& d) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    emit_kv(out, "device", d.id);
    out << YAML::Key << "qubits" << YAML::Value << YAML::BeginSeq;
    for (const auto& q : d.qubits) {
        out << YAML::BeginMap;
        emit_kv(out, "id", q.id);
        emit_kv(out, "operating_phi", q.operating.phi);
        out << YAML::Key << "chain" << YAML::Value << YAML::BeginMap;
        const auto& c = q.chain;
        emit_kv(out, "ej_max_ghz", c.transmon.ej_max);
        emit_kv(out, "ec_ghz", c.transmon.ec);
        emit_kv(out, "asym", c.transmon.asym);
        emit_kv(out, "charge_cutoff", c.transmon.charge_cutoff);
        emit_kv(out, "levels_kept", c.transmon.levels_kept);
        emit_kv(out, "omega_r_bare_ghz", c.omega_r_bare);
        emit_kv(out, "omega_p_ghz", c.omega_p);
        emit_kv(out, "g_qr_ghz", c.g_qr);
        emit_kv(out, "j_rp_ghz", c.j_rp);
        emit_kv(out, "kappa_p_ghz", c.kappa_p);
        emit_kv(out, "kappa_int_ghz", c.kappa_int);
        emit_kv(out, "n_r", c.n_r);
        emit_kv(out, "n_p", c.n_p);
        out << YAML::EndMap;
        out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
        emit_kv(out, "t1_us", q.noise.t1_us);
        emit_kv(out, "t2_star_us", q.noise.t2_star_us);
        emit_kv(out, "t2_echo_us", q.noise.t2_echo_us);
        out << YAML::EndMap;
        if (q.observations) {
            out << YAML::Key << "observations" << YAML::Value << YAML::BeginMap;
            emit_kv(out, "ge_max_ghz", q.observations->ge_max_ghz);
            emit_kv(out, "ge_min_ghz", q.observations->ge_min_ghz);
            emit_kv(out, "anharmonicity_ghz", q.observations->anharmonicity_ghz);
            emit_kv(out, "resonator_min_ghz", q.observations->resonator_min_ghz);
            out << YAML::EndMap;
        }
        if (q.reference != ReferenceParams{}) {
            out << YAML::Key << "reference" << YAML::Value << YAML::BeginMap;
            emit_kv(out, "ej_max_ghz", q.reference.ej_max_ghz);
            emit_kv(out, "ec_ghz", q.reference.ec_ghz);
            emit_kv(out, "g_qr_ghz", q.reference.g_qr_ghz);
            out << YAML::EndMap;
        }
        const auto& r = q.readout;
        out << YAML::Key << "readout" << YAML::Value << YAML::BeginMap;
        emit_kv(out, "probe_ghz", q.probe_ghz);
        emit_kv(out, "integration_ns", r.integration_ns);
        emit_kv(out, "amplitude_sqrt_photons", r.amplitude);
        emit_kv(out, "eta", r.eta);
        emit_kv(out, "shots", r.shots);
        emit_kv(out, "seed", r.seed);
        emit_kv(out, "thermal_population", r.thermal_population);
        emit_kv(out, "dt_ns", r.dt_ns);
        if (r.two_step) {
            out << YAML::Key << "two_step" << YAML::Value << YAML::BeginMap;
            emit_kv(out, "scale", r.two_step->scale);
            emit_kv(out, "duration_ns", r.two_step->duration_ns);
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "couplers" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : d.couplers) {
        out << YAML::BeginMap;
        out << YAML::Key << "qubits" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.qubits[0] << c.qubits[1]
            << YAML::EndSeq;
        emit_kv(out, "j_qq_ghz", c.j_qq_ghz);
        emit_kv(out, "interaction_ghz", c.interaction_ghz);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "flux_line" << YAML::Value << YAML::BeginMap;
    emit_kv(out, "gain", d.flux_line.gain);
    emit_kv(out, "dt_ns", d.flux_line.dt_ns);
    out << YAML::Key << "iir" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : d.flux_line.iir) {
        out << YAML::Flow << YAML::BeginMap;
        emit_kv(out, "amplitude", t.amplitude);
        emit_kv(out, "tau_ns", t.tau_ns);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "fir" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : d.flux_line.fir) {
        out << num(v);
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void save_device(const DeviceDescription& device, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        fail(path.string(), "cannot write");
    }
    out << emit_device(device);
}

}  // namespace qtwin
