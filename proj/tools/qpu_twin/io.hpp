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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtwin/config.hpp"

namespace qpu_twin {

using nlohmann::json;

enum class Format { Csv, Json };

/// Numeric table, optionally with a text label leading each row; the primary
/// tabular output of most commands.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;

    void add(std::vector<double> row) { rows.push_back(std::move(row)); }
    void add(std::string label, std::vector<double> row) {
        labels.push_back(std::move(label));
        rows.push_back(std::move(row));
    }
    std::string csv() const;
    json to_json() const;
};

/// Shortest decimal that parses back to the same double.
std::string fmt(double x);

/// Per-run state shared by the commands. Files are written through here so
/// every output is atomic and listed in the manifest.
struct Context {
    std::string experiment;
    std::filesystem::path config_path;
    qtwin::DeviceDescription device;
    std::filesystem::path out;
    std::uint64_t seed = 1;
    bool seed_given = false;
    bool stamp = false;
    Format format = Format::Csv;
    std::vector<std::string> written;

    std::filesystem::path path(const std::string& name) const { return out / name; }
    void write_text(const std::string& name, const std::string& text);
    void write_json(const std::string& name, const json& j);
    /// stem.csv or stem.json depending on --format.
    void write_table(const std::string& stem, const Table& t);
    void write_svg(const std::string& name, const std::string& svg);
    void write_manifest(double duration_s) const;
};

json read_json(const std::filesystem::path& p);

/// Writes to a sibling temporary and renames over the target.
void atomic_write(const std::filesystem::path& p, const std::string& text);

}  // namespace qpu_twin
