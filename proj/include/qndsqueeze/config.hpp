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
 * Experiment configuration: JSON loading with unknown-key rejection, a
 * complete list of violated guards, and an echo that reloads to an equal
 * configuration.
 *
 * Angles are radians, or a string multiple of pi such as "0.45pi". Lengths
 * are in units of 1/k. `phi` also accepts "midfringe", the phase that puts
 * the initial mean population on the steepest point of a fringe.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dense_modes.hpp"
#include "errors.hpp"
#include "optics.hpp"
#include "trajectory.hpp"

namespace qnd {

/// Malformed JSON, with the 1-based location of the failure.
struct ConfigParseError : ConfigError {
    ConfigParseError(const std::string &m, std::size_t line, std::size_t column)
        : ConfigError(m), line_(line), column_(column) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

  private:
    std::size_t line_, column_;
};

/// Well-formed JSON that fails one or more guards; lists all of them.
struct ConfigValidationError : ConfigError {
    explicit ConfigValidationError(std::vector<std::string> v)
        : ConfigError(join(v)), violations_(std::move(v)) {}
    [[nodiscard]] const std::vector<std::string> &violations() const noexcept { return violations_; }

  private:
    static std::string join(const std::vector<std::string> &v) {
        std::string s;
        for (const auto &x : v) {
            s += (s.empty() ? "" : "; ") + x;
        }
        return s;
    }
    std::vector<std::string> violations_;
};

struct DenseConfig {
    double cell_size{1.5};
    std::array<int, 3> cells{41, 41, 41};
    double n_cell{100.0};
    double min_n_cell{25.0};

    [[nodiscard]] DenseCloudModel model() const {
        DenseCloudModel m;
        m.cell_size = cell_size;
        m.cells = cells;
        m.n_cell = n_cell;
        m.min_n_cell = min_n_cell;
        return m;
    }
    friend bool operator==(const DenseConfig &, const DenseConfig &) = default;
};

struct ExperimentConfig {
    int n_atoms{8};
    CloudSpec cloud{};
    double k{1.0};
    double theta0{0.45 * std::numbers::pi};
    double f{0.01};
    double phi{std::numbers::pi / 4.0};
    long n_photons{1000};
    long n_histories{1};
    std::uint64_t seed{1};
    int record_every{1};
    bool scattering{true};
    bool light_shift_compensation{true};
    GridOptions grid{};
    std::optional<DenseConfig> dense;
    double area{0.0};            ///< transverse cloud area; 0 if unset
    double cavity_round_trips{1.0};

    [[nodiscard]] BeamGeometry geometry() const { return {k, theta0, f, phi}; }
    [[nodiscard]] TrajectoryOptions trajectory_options() const {
        TrajectoryOptions o;
        o.scattering = scattering;
        o.light_shift_compensation = light_shift_compensation;
        o.record_every = record_every;
        return o;
    }
    [[nodiscard]] EnsembleOptions ensemble_options() const {
        EnsembleOptions o;
        o.trajectory = trajectory_options();
        o.grid = grid;
        return o;
    }

    friend bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) {
        auto grid_eq = [](const GridOptions &x, const GridOptions &y) {
            return x.min_lat == y.min_lat && x.min_lon == y.min_lon && x.refine == y.refine &&
                   x.min_cells == y.min_cells && x.max_cells == y.max_cells;
        };
        return a.n_atoms == b.n_atoms && a.cloud.law == b.cloud.law && a.cloud.rms == b.cloud.rms &&
               a.cloud.box == b.cloud.box && a.k == b.k && a.theta0 == b.theta0 && a.f == b.f &&
               a.phi == b.phi && a.n_photons == b.n_photons && a.n_histories == b.n_histories &&
               a.seed == b.seed && a.record_every == b.record_every && a.scattering == b.scattering &&
               a.light_shift_compensation == b.light_shift_compensation && grid_eq(a.grid, b.grid) &&
               a.dense == b.dense && a.area == b.area && a.cavity_round_trips == b.cavity_round_trips;
    }
};

/// Phase that sets cos^2(phi - pi g0^2 (f/k) N/2) = 1/2.
[[nodiscard]] inline double midfringe_phase(const BeamGeometry &g, int n_atoms) {
    return std::numbers::pi / 4.0 + std::numbers::pi * g.g0_sq() * (g.f / g.k) * n_atoms / 2.0;
}

namespace detail {

using json = nlohmann::json;

struct Reader {
    std::vector<std::string> errors;

    void reject_unknown(const json &obj, const std::string &where, std::set<std::string> allowed) {
        for (const auto &[key, _] : obj.items()) {
            if (!allowed.contains(key)) {
                errors.push_back("unknown key '" + where + key + "'");
            }
        }
    }

    template <class T>
    void number(const json &obj, const std::string &key, const std::string &where, T &out) {
        if (!obj.contains(key)) {
            return;
        }
        const auto &v = obj.at(key);
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                errors.push_back("'" + where + key + "' must be an integer");
                return;
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) {
                    out = v.get<T>();
                } else if (v.get<long long>() >= 0) {
                    out = static_cast<T>(v.get<long long>());
                } else {
                    errors.push_back("'" + where + key + "' must be non-negative");
                }
            } else {
                out = v.get<T>();
            }
        } else {
            if (!v.is_number()) {
                errors.push_back("'" + where + key + "' must be a number");
                return;
            }
            out = v.get<T>();
        }
    }

    void boolean(const json &obj, const std::string &key, const std::string &where, bool &out) {
        if (!obj.contains(key)) {
            return;
        }
        if (!obj.at(key).is_boolean()) {
            errors.push_back("'" + where + key + "' must be true or false");
            return;
        }
        out = obj.at(key).get<bool>();
    }

    /// Number, or a string "<x>pi" / "pi".
    std::optional<double> angle(const json &v, const std::string &key) {
        if (v.is_number()) {
            return v.get<double>();
        }
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s.size() >= 2 && s.ends_with("pi")) {
                const std::string head = s.substr(0, s.size() - 2);
                if (head.empty()) {
                    return std::numbers::pi;
                }
                double x{};
                const auto *end = head.data() + head.size();
                const auto r = std::from_chars(head.data(), end, x);
                if (r.ec == std::errc{} && r.ptr == end) {
                    return x * std::numbers::pi;
                }
            }
        }
        errors.push_back("'" + key + "' must be a number of radians or a multiple of pi like \"0.45pi\"");
        return std::nullopt;
    }
};

inline std::pair<std::size_t, std::size_t> line_column(const std::string &text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const std::string &text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ConfigParseError("parse error at line " + std::to_string(line) + ", column " +
                                   std::to_string(col) + ": " + e.what(),
                               line, col);
    }
    if (!doc.is_object()) {
        throw ConfigValidationError({"top level must be a JSON object"});
    }

    detail::Reader rd;
    ExperimentConfig c;
    rd.reject_unknown(doc, "",
                      {"n_atoms", "cloud", "k", "theta0", "f", "phi", "n_photons", "n_histories", "seed",
                       "record_every", "regime", "grid", "dense", "area", "cavity_round_trips"});
    rd.number(doc, "n_atoms", "", c.n_atoms);
    rd.number(doc, "k", "", c.k);
    rd.number(doc, "f", "", c.f);
    rd.number(doc, "n_photons", "", c.n_photons);
    rd.number(doc, "n_histories", "", c.n_histories);
    rd.number(doc, "seed", "", c.seed);
    rd.number(doc, "record_every", "", c.record_every);
    rd.number(doc, "area", "", c.area);
    rd.number(doc, "cavity_round_trips", "", c.cavity_round_trips);
    if (doc.contains("theta0")) {
        if (auto a = rd.angle(doc["theta0"], "theta0")) {
            c.theta0 = *a;
        }
    }

    if (doc.contains("cloud")) {
        const auto &cl = doc["cloud"];
        if (!cl.is_object()) {
            rd.errors.emplace_back("'cloud' must be an object");
        } else {
            rd.reject_unknown(cl, "cloud.", {"law", "rms", "box"});
            const std::string law = cl.value("law", std::string{"point"});
            if (law == "gaussian") {
                c.cloud.law = CloudLaw::Gaussian;
                if (!cl.contains("rms")) {
                    rd.errors.emplace_back("'cloud.rms' is required for a gaussian cloud");
                }
                rd.number(cl, "rms", "cloud.", c.cloud.rms);
                if (!(c.cloud.rms > 0.0)) {
                    rd.errors.emplace_back("'cloud.rms' must be positive");
                }
            } else if (law == "box") {
                c.cloud.law = CloudLaw::Box;
                const auto &b = cl.contains("box") ? cl["box"] : json{};
                if (!b.is_array() || b.size() != 3 ||
                    !std::all_of(b.begin(), b.end(), [](const json &x) { return x.is_number(); })) {
                    rd.errors.emplace_back("'cloud.box' must be an array of three edge lengths");
                } else {
                    for (int a = 0; a < 3; ++a) {
                        c.cloud.box[a] = b[a].get<double>();
                        if (!(c.cloud.box[a] >= 0.0)) {
                            rd.errors.emplace_back("'cloud.box' edges must be >= 0");
                        }
                    }
                }
            } else if (law == "point") {
                c.cloud.law = CloudLaw::Point;
            } else {
                rd.errors.push_back("'cloud.law' must be gaussian, point or box (got '" + law + "')");
            }
        }
    }

    if (doc.contains("regime")) {
        const auto &r = doc["regime"];
        if (!r.is_object()) {
            rd.errors.emplace_back("'regime' must be an object");
        } else {
            rd.reject_unknown(r, "regime.", {"scattering", "light_shift_compensation"});
            rd.boolean(r, "scattering", "regime.", c.scattering);
            rd.boolean(r, "light_shift_compensation", "regime.", c.light_shift_compensation);
        }
    }

    if (doc.contains("grid")) {
        const auto &g = doc["grid"];
        if (!g.is_object()) {
            rd.errors.emplace_back("'grid' must be an object");
        } else {
            rd.reject_unknown(g, "grid.", {"min_lat", "min_lon", "refine", "min_cells", "max_cells"});
            rd.number(g, "min_lat", "grid.", c.grid.min_lat);
            rd.number(g, "min_lon", "grid.", c.grid.min_lon);
            rd.number(g, "refine", "grid.", c.grid.refine);
            rd.number(g, "min_cells", "grid.", c.grid.min_cells);
            rd.number(g, "max_cells", "grid.", c.grid.max_cells);
            if (c.grid.min_lat < 1 || c.grid.min_lon < 1 || c.grid.refine < 1) {
                rd.errors.emplace_back("'grid' band counts and refine must be >= 1");
            }
        }
    }

    if (doc.contains("dense")) {
        const auto &d = doc["dense"];
        if (!d.is_object()) {
            rd.errors.emplace_back("'dense' must be an object");
        } else {
            DenseConfig dc;
            rd.reject_unknown(d, "dense.", {"cell_size", "cells", "n_cell", "min_n_cell"});
            rd.number(d, "cell_size", "dense.", dc.cell_size);
            rd.number(d, "n_cell", "dense.", dc.n_cell);
            rd.number(d, "min_n_cell", "dense.", dc.min_n_cell);
            if (d.contains("cells")) {
                const auto &cs = d["cells"];
                if (!cs.is_array() || cs.size() != 3 ||
                    !std::all_of(cs.begin(), cs.end(), [](const json &x) { return x.is_number_integer(); })) {
                    rd.errors.emplace_back("'dense.cells' must be an array of three odd integers");
                } else {
                    for (int a = 0; a < 3; ++a) {
                        dc.cells[a] = cs[a].get<int>();
                    }
                }
            }
            for (const auto &v : dc.model().violations(c.k)) {
                rd.errors.push_back("dense: " + v);
            }
            c.dense = dc;
        }
    }

    // phi last: "midfringe" depends on the geometry.
    if (doc.contains("phi")) {
        if (doc["phi"].is_string() && doc["phi"].get<std::string>() == "midfringe") {
            c.phi = midfringe_phase(c.geometry(), c.n_atoms);
        } else if (auto a = rd.angle(doc["phi"], "phi")) {
            c.phi = *a;
        }
    }

    if (c.n_atoms < 1 || c.n_atoms > max_atoms) {
        rd.errors.push_back("'n_atoms' must lie in 1.." + std::to_string(max_atoms));
    }
    if (c.n_photons < 1) {
        rd.errors.emplace_back("'n_photons' must be >= 1");
    }
    if (c.n_histories < 1) {
        rd.errors.emplace_back("'n_histories' must be >= 1");
    }
    if (c.record_every < 1) {
        rd.errors.emplace_back("'record_every' must be >= 1");
    }
    if (c.area < 0.0) {
        rd.errors.emplace_back("'area' must be >= 0");
    }
    if (!(c.cavity_round_trips >= 1.0)) {
        rd.errors.emplace_back("'cavity_round_trips' must be >= 1");
    }
    for (const auto &v : c.geometry().violations()) {
        rd.errors.push_back(v);
    }
    if (!rd.errors.empty()) {
        throw ConfigValidationError(rd.errors);
    }
    return c;
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical JSON form; parse_config(echo_config(c)) == c.
inline nlohmann::json config_to_json(const ExperimentConfig &c) {
    using detail::json;
    json cloud;
    switch (c.cloud.law) {
    case CloudLaw::Gaussian:
        cloud = {{"law", "gaussian"}, {"rms", c.cloud.rms}};
        break;
    case CloudLaw::Box:
        cloud = {{"law", "box"}, {"box", {c.cloud.box[0], c.cloud.box[1], c.cloud.box[2]}}};
        break;
    case CloudLaw::Point:
        cloud = {{"law", "point"}};
        break;
    }
    json j = {
        {"n_atoms", c.n_atoms},
        {"cloud", cloud},
        {"k", c.k},
        {"theta0", c.theta0},
        {"f", c.f},
        {"phi", c.phi},
        {"n_photons", c.n_photons},
        {"n_histories", c.n_histories},
        {"seed", c.seed},
        {"record_every", c.record_every},
        {"regime", {{"scattering", c.scattering}, {"light_shift_compensation", c.light_shift_compensation}}},
        {"grid",
         {{"min_lat", c.grid.min_lat},
          {"min_lon", c.grid.min_lon},
          {"refine", c.grid.refine},
          {"min_cells", c.grid.min_cells},
          {"max_cells", c.grid.max_cells}}},
        {"area", c.area},
        {"cavity_round_trips", c.cavity_round_trips},
    };
    if (c.dense) {
        j["dense"] = {{"cell_size", c.dense->cell_size},
                      {"cells", {c.dense->cells[0], c.dense->cells[1], c.dense->cells[2]}},
                      {"n_cell", c.dense->n_cell},
                      {"min_n_cell", c.dense->min_n_cell}};
    }
    return j;
}

inline std::string echo_config(const ExperimentConfig &c) { return config_to_json(c).dump(2) + "\n"; }

/// FNV-1a 64 of the canonical echo; identifies a configuration in outputs.
[[nodiscard]] inline std::uint64_t config_hash(const ExperimentConfig &c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace qnd
