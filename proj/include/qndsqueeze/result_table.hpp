// Copyright 2026 The qndsqueeze Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * CSV result tables with a leading `#` metadata block. Numbers are written
 * with the shortest decimal form that round-trips (std::to_chars), so equal
 * runs give byte-identical files.
 */

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace qnd {

enum class ColumnType { Integer, Real, Text };

struct Column {
    std::string name;
    ColumnType type{ColumnType::Real};
};

using Value = std::variant<long long, double, std::string>;

inline std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, r.ptr};
}

inline std::string format_value(const Value &v) {
    if (const auto *i = std::get_if<long long>(&v)) {
        return std::to_string(*i);
    }
    if (const auto *d = std::get_if<double>(&v)) {
        return format_number(*d);
    }
    return std::get<std::string>(v);
}

class ResultTable {
  public:
    ResultTable(std::string schema, std::vector<Column> columns)
        : schema_(std::move(schema)), columns_(std::move(columns)) {}

    [[nodiscard]] const std::string &schema() const noexcept { return schema_; }
    [[nodiscard]] const std::vector<Column> &columns() const noexcept { return columns_; }
    [[nodiscard]] const std::vector<std::vector<Value>> &rows() const noexcept { return rows_; }
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>> &metadata() const noexcept {
        return meta_;
    }

    void add_metadata(std::string key, std::string value) { meta_.emplace_back(std::move(key), std::move(value)); }

    void add_row(std::vector<Value> row) {
        if (row.size() != columns_.size()) {
            throw ContractViolation("row has " + std::to_string(row.size()) + " fields, table '" + schema_ +
                                    "' has " + std::to_string(columns_.size()) + " columns");
        }
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::string to_csv() const {
        std::ostringstream out;
        out << "# schema: " << schema_ << '\n';
        for (const auto &[k, v] : meta_) {
            out << "# " << k << ": " << v << '\n';
        }
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            out << (i ? "," : "") << columns_[i].name;
        }
        out << '\n';
        for (const auto &row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << format_value(row[i]);
            }
            out << '\n';
        }
        return out.str();
    }

    void write(const std::string &path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write '" + path + "'");
        }
        f << to_csv();
    }

  private:
    std::string schema_;
    std::vector<Column> columns_;
    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<std::vector<Value>> rows_;
};

namespace schema {

inline std::vector<Column> trajectory() {
    using enum ColumnType;
    return {{"photon_index", Integer}, {"jz_mean", Real}, {"jz_var", Real}, {"jx", Real},
            {"jy", Real},              {"jsq", Real},     {"n1", Integer},  {"n2", Integer},
            {"n_scatt", Integer},      {"jz_calc", Real}, {"kind", Text}};
}

inline std::vector<Column> ensemble() {
    using enum ColumnType;
    return {{"photon_index", Integer}, {"histories", Integer}, {"jz_var_mean", Real},
            {"jz_var_var", Real},      {"jx_mean", Real},      {"jx_var", Real},
            {"jy_mean", Real},         {"jy_var", Real},       {"jsq_mean", Real},
            {"jsq_var", Real},         {"jperp_mean", Real},   {"calc_mse_mean", Real},
            {"calc_mse_var", Real},    {"calc_count", Integer}, {"n_scatt_mean", Real},
            {"kind", Text}};
}

inline std::vector<Column> summary() {
    using enum ColumnType;
    return {{"quantity", Text}, {"value", Real}};
}

inline std::vector<Column> predict() {
    using enum ColumnType;
    return {{"regime", Text}, {"quantity", Text}, {"paper_form", Real}, {"derived", Real}};
}

inline std::vector<Column> dense() {
    using enum ColumnType;
    return {{"photon_index", Integer}, {"source", Text},        {"delta_n1", Real},
            {"jx_estimate", Real},     {"xi", Real},            {"n0_width", Real},
            {"scattering_sum", Real},  {"closed_form_sum", Real}, {"fitted_exponent", Real}};
}

inline std::vector<Column> sweep() {
    using enum ColumnType;
    return {{"parameter", Text},    {"value", Real},         {"regime", Text},
            {"n_photons", Real},    {"xi", Real},            {"delta_na", Real},
            {"jx_over_j", Real},    {"np_opt_derived", Real}, {"xi_min_derived", Real},
            {"np_opt_paper", Real}, {"xi_min_paper", Real}};
}

inline std::vector<Column> radial() {
    using enum ColumnType;
    return {{"mode", Text}, {"n_sc", Integer}, {"n_photons", Integer}, {"radius", Real}, {"density", Real}};
}

inline std::vector<Column> by_name(const std::string &name) {
    if (name == "trajectory") {
        return trajectory();
    }
    if (name == "ensemble") {
        return ensemble();
    }
    if (name == "summary") {
        return summary();
    }
    if (name == "predict") {
        return predict();
    }
    if (name == "dense") {
        return dense();
    }
    if (name == "sweep") {
        return sweep();
    }
    if (name == "radial") {
        return radial();
    }
    throw ConfigError("unknown table schema '" + name + "'");
}

} // namespace schema

namespace detail {

inline bool parses_as(const std::string &s, ColumnType t) {
    if (t == ColumnType::Text) {
        return s.find(',') == std::string::npos;
    }
    if (t == ColumnType::Integer) {
        long long v{};
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        return r.ec == std::errc{} && r.ptr == s.data() + s.size();
    }
    if (s == "nan" || s == "inf" || s == "-inf") {
        return true;
    }
    double v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

inline std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// Checks CSV text against the schema named in its metadata block. Returns
/// every problem found; empty means valid.
inline std::vector<std::string> validate_csv(const std::string &text) {
    std::vector<std::string> problems;
    std::istringstream in(text);
    std::string line;
    std::string name;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.starts_with("#")) {
            break;
        }
        if (line.starts_with("# schema: ")) {
            name = line.substr(10);
        }
    }
    if (name.empty()) {
        problems.emplace_back("metadata block lacks a schema line");
        return problems;
    }
    std::vector<Column> cols;
    try {
        cols = schema::by_name(name);
    } catch (const ConfigError &e) {
        problems.emplace_back(e.what());
        return problems;
    }
    if (line.starts_with("#") || line.empty()) {
        problems.emplace_back("header row missing");
        return problems;
    }
    const auto header = detail::split(line);
    if (header.size() != cols.size()) {
        problems.push_back("header has " + std::to_string(header.size()) + " columns, schema expects " +
                           std::to_string(cols.size()));
        return problems;
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (header[i] != cols[i].name) {
            problems.push_back("column " + std::to_string(i) + " is '" + header[i] + "', expected '" +
                               cols[i].name + "'");
        }
    }
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = detail::split(line);
        if (f.size() != cols.size()) {
            problems.push_back("line " + std::to_string(line_no) + ": " + std::to_string(f.size()) + " fields");
            continue;
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!detail::parses_as(f[i], cols[i].type)) {
                problems.push_back("line " + std::to_string(line_no) + ": '" + f[i] + "' is not a valid " +
                                   cols[i].name);
            }
        }
    }
    return problems;
}

} // namespace qnd
