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


#include "io.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "qtwin/error.hpp"

#ifndef QPU_TWIN_VERSION
#define QPU_TWIN_VERSION "0.0.0"
#endif

namespace qpu_twin {

std::string fmt(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), r.ptr);
}

std::string Table::csv() const {
    std::string s;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        s += (c ? "," : "") + columns[c];
    }
    s += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!labels.empty()) {
            s += labels[r] + ",";
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            s += (c ? "," : "") + fmt(rows[r][c]);
        }
        s += '\n';
    }
    return s;
}

json Table::to_json() const {
    json rs = json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        json row = json::array();
        if (!labels.empty()) {
            row.push_back(labels[r]);
        }
        for (double v : rows[r]) {
            row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        }
        rs.push_back(row);
    }
    return json{{"columns", columns}, {"rows", rs}};
}

void atomic_write(const std::filesystem::path& p, const std::string& text) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) {
            throw qtwin::Error(qtwin::ErrorKind::Config, "cannot write " + p.string());
        }
        f << text;
        f.flush();
        if (!f) {
            throw qtwin::Error(qtwin::ErrorKind::Config, "short write to " + p.string());
        }
    }
    std::filesystem::rename(tmp, p);
}

void Context::write_text(const std::string& name, const std::string& text) {
    std::filesystem::create_directories(out);
    atomic_write(path(name), text);
    written.push_back(name);
}

void Context::write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }

void Context::write_table(const std::string& stem, const Table& t) {
    if (format == Format::Csv) {
        write_text(stem + ".csv", t.csv());
    } else {
        write_json(stem + ".json", t.to_json());
    }
}

void Context::write_svg(const std::string& name, const std::string& svg) {
    if (!stamp) {
        write_text(name, svg);
        return;
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    // the stamp goes right after the opening tag
    const auto pos = svg.find('>') + 1;
    write_text(name, svg.substr(0, pos) + "\n<!-- generated " + buf + " -->" + svg.substr(pos));
}

void Context::write_manifest(double duration_s) const {
    std::filesystem::create_directories(out);
    json m{{"experiment", experiment},
           {"config", config_path.string()},
           {"seed", seed},
           {"seed_defaulted", !seed_given},
           {"output_dir", out.string()},
           {"tool_version", QPU_TWIN_VERSION},
           {"duration_s", duration_s},
           {"outputs", written}};
    atomic_write(path("manifest.json"), m.dump(2) + "\n");
}

json read_json(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) {
        throw qtwin::Error(qtwin::ErrorKind::Config, "missing input " + p.string());
    }
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw qtwin::Error(qtwin::ErrorKind::Config, p.string() + ": " + e.what());
    }
}

}  // namespace qpu_twin
