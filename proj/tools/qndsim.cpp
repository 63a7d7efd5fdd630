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

// qndsim: command-line driver for trajectories, ensembles, closed-form
// predictions, the dense-cloud mode model and parameter sweeps.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qndsqueeze/qndsqueeze.hpp"

namespace {

using qnd::ExperimentConfig;
using qnd::ResultTable;
using qnd::Value;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out{"."};
    std::optional<long> histories;
    std::optional<long> photons;
    std::optional<int> record_every;
    std::optional<std::size_t> grid_cells;
    bool echo{false};
};

ExperimentConfig resolve(const Overrides &o) {
    ExperimentConfig c = qnd::load_config(o.config);
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.histories) {
        c.n_histories = *o.histories;
    }
    if (o.photons) {
        c.n_photons = *o.photons;
    }
    if (o.record_every) {
        c.record_every = *o.record_every;
    }
    if (o.grid_cells) {
        c.grid.min_cells = *o.grid_cells;
    }
    // Re-validate after overrides through the same loader path.
    return qnd::parse_config(qnd::echo_config(c));
}

void stamp(ResultTable &t, const ExperimentConfig &c, const std::string &command) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(qnd::config_hash(c)));
    t.add_metadata("command", command);
    t.add_metadata("config_hash", hash);
    t.add_metadata("seed", std::to_string(c.seed));
    t.add_metadata("version", std::string("qndsqueeze ") + qnd::version);
    t.add_metadata("config", nlohmann::json(qnd::config_to_json(c)).dump());
}

std::string emit(const ResultTable &t, const std::string &dir, const std::string &name) {
    std::filesystem::create_directories(dir);
    const std::string path = (std::filesystem::path(dir) / (name + ".csv")).string();
    t.write(path);
    return path;
}

Value real(double x) { return x; }
Value integer(long long x) { return x; }

std::pair<qnd::AtomCloud, qnd::HistorySeeds> history_cloud(const ExperimentConfig &c) {
    const auto seeds = qnd::HistorySeeds::from(c.seed);
    qnd::RandomStream rng(seeds.positions);
    return {qnd::sample_cloud(c.cloud, c.n_atoms, rng), seeds};
}

int cmd_trajectory(const Overrides &o) {
    const ExperimentConfig c = resolve(o);
    const auto geom = c.geometry();
    auto [cloud, seeds] = history_cloud(c);
    const auto grid = qnd::build_sphere_grid(c.k, c.theta0, c.cloud.scale(), c.grid);
    const auto opt = c.trajectory_options();
    const qnd::PhotonModel model(geom, std::move(cloud), grid, opt);
    const auto rec = qnd::run_trajectory(model, c.n_photons, seeds.events, opt);

    ResultTable t("trajectory", qnd::schema::trajectory());
    stamp(t, c, "trajectory");
    t.add_metadata("grid_cells", std::to_string(grid.size()));
    t.add_metadata("max_probability_defect", qnd::format_number(rec.max_probability_defect));
    for (const auto &s : rec.steps) {
        t.add_row({integer(s.photon_index), real(s.obs.jz_mean), real(s.obs.jz_var), real(s.obs.jx_mean),
                   real(s.obs.jy_mean), real(s.obs.jsq_mean), integer(s.n1), integer(s.n2), integer(s.n_scatt),
                   real(s.jz_calc), std::string("history")});
    }
    std::cout << emit(t, o.out, "trajectory") << '\n';
    return 0;
}

int cmd_ensemble(const Overrides &o) {
    const ExperimentConfig c = resolve(o);
    const auto geom = c.geometry();
    const auto stats = qnd::run_ensemble(c.cloud, c.n_atoms, geom, c.n_photons, c.n_histories, c.seed,
                                         c.ensemble_options());
    ResultTable t("ensemble", qnd::schema::ensemble());
    stamp(t, c, "ensemble");
    for (const auto &s : stats.steps) {
        t.add_row({integer(s.photon_index), integer(stats.n_histories), real(s.jz_var.mean), real(s.jz_var.var),
                   real(s.jx.mean), real(s.jx.var), real(s.jy.mean), real(s.jy.var), real(s.jsq.mean),
                   real(s.jsq.var), real(s.jperp.mean), real(s.calc_mse.mean), real(s.calc_mse.var),
                   integer(s.calc_mse.count), real(s.n_scatt.mean), std::string("ensemble")});
    }
    ResultTable sum("summary", qnd::schema::summary());
    stamp(sum, c, "ensemble");
    for (const auto &d : stats.dropped) {
        sum.add_metadata("dropped_history_" + std::to_string(d.history), d.kind + ": " + d.message);
    }
    auto row = [&](const std::string &k, double v) { sum.add_row({k, real(v)}); };
    row("histories_completed", static_cast<double>(stats.n_histories));
    row("histories_dropped", static_cast<double>(stats.dropped.size()));
    row("max_probability_defect", stats.max_probability_defect);
    if (!stats.steps.empty()) {
        const auto &last = stats.steps.back();
        const double np = static_cast<double>(last.photon_index);
        row("final_photon_index", np);
        row("final_jz_var_mean", last.jz_var.mean);
        row("final_calc_mse_mean", last.calc_mse.mean);
        row("final_jx_mean", last.jx.mean);
        row("final_jperp_mean", last.jperp.mean);
        row("final_jsq_mean", last.jsq.mean);
        if (np > 0 && geom.f > 0) {
            const double w = qnd::interferometer_width(geom, np);
            row("interferometer_width_sq", w * w);
            const auto pp = qnd::small_cloud_posterior(geom.sigma1(), static_cast<long>(np), 0);
            row("scattering_width_sq", pp.width * pp.width);
            row("dilute_variance", qnd::dilute_variance(c.n_atoms, geom, np));
            row("dilute_jx", qnd::dilute_jx_decay(c.n_atoms, geom, np));
        }
    }
    std::cout << emit(t, o.out, "ensemble") << '\n' << emit(sum, o.out, "summary") << '\n';
    return stats.n_histories > 0 ? 0 : 4;
}

void predict_rows(ResultTable &t, const ExperimentConfig &c) {
    const auto geom = c.geometry();
    const double np = static_cast<double>(c.n_photons);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto row = [&](std::string_view regime, const std::string &q, double paper, double derived) {
        t.add_row({std::string(regime), q, real(paper), real(derived)});
    };
    using qnd::Regime;
    for (Regime r : {Regime::InterferometerOnly, Regime::SmallCloud, Regime::Dilute, Regime::Dense}) {
        const auto p = qnd::predict(r, geom, c.n_atoms, np);
        const auto name = qnd::to_string(r);
        row(name, "np_opt", p.np_opt_paper, p.np_opt_derived);
        row(name, "xi_min", p.xi_min_paper, p.xi_min_derived);
        row(name, "xi_at_n_photons", nan, p.xi);
        row(name, "delta_na_at_n_photons", nan, p.delta_na);
        row(name, "jx_over_j_at_n_photons", nan, p.jx_over_j);
    }
    const auto cat = qnd::cat_condition(geom, c.n_atoms);
    row("interferometer-only", "cat_margin", nan, cat.margin);
    row("interferometer-only", "cat_single_peak", nan, cat.single_peak ? 1.0 : 0.0);
    row("small-cloud", "width_ratio_scat_over_int", qnd::width_ratio_paper(geom), qnd::width_ratio_exact(geom));
    row("small-cloud", "sigma1", nan, geom.sigma1());
    row("dilute", "variance_at_n_photons", nan, qnd::dilute_variance(c.n_atoms, geom, np));
    row("dilute", "jx_at_n_photons", nan, qnd::dilute_jx_decay(c.n_atoms, geom, np));
    if (c.area > 0.0) {
        row("dense", "optical_density_bound", nan, qnd::optical_density_bound(c.n_atoms, c.area, c.k));
    }
    const double xi_dense = qnd::optimum(Regime::Dense, geom, c.n_atoms).xi;
    row("dense", "cavity_xi_min", qnd::xi_min_paper(Regime::Dense, geom, c.n_atoms) *
                                      qnd::cavity_factor(c.cavity_round_trips),
        xi_dense * qnd::cavity_factor(c.cavity_round_trips));
}

int cmd_predict(const Overrides &o) {
    const ExperimentConfig c = resolve(o);
    ResultTable t("predict", qnd::schema::predict());
    stamp(t, c, "predict");
    t.add_metadata("cat_condition_unevaluated", qnd::CatCondition{}.unevaluated_clause);
    t.add_metadata("jx_bound_caveat", "soft estimate assuming a Gaussian Jz distribution");
    predict_rows(t, c);
    std::cout << emit(t, o.out, "predict") << '\n';
    return 0;
}

int cmd_dense(const Overrides &o, int points) {
    const ExperimentConfig c = resolve(o);
    if (!c.dense) {
        throw qnd::ConfigError("the dense command needs a 'dense' section in the config");
    }
    const auto geom = c.geometry();
    const auto model = c.dense->model();
    const auto modes = qnd::identify_scattering_modes(model, geom);

    ResultTable t("dense", qnd::schema::dense());
    stamp(t, c, "dense");
    t.add_metadata("cells", std::to_string(model.n_cells()));
    t.add_metadata("on_sphere_modes", std::to_string(modes.on_sphere.size()));
    t.add_metadata("covered_solid_angle", qnd::format_number(modes.covered_solid_angle()));
    t.add_metadata("zero_mode_solid_angle", qnd::format_number(modes.zero_mode_solid_angle));
    t.add_metadata("dropped_solid_angle", qnd::format_number(modes.dropped_solid_angle));
    if (!model.dense_enough()) {
        t.add_metadata("warning", "n_cell below the dense-cloud threshold");
    }
    std::vector<long> nps{0};
    for (int i = 0; i < points; ++i) {
        const double frac = std::pow(10.0, -3.0 + 3.0 * i / std::max(1, points - 1));
        const long v = std::max(1L, std::lround(frac * static_cast<double>(c.n_photons)));
        if (v != nps.back()) {
            nps.push_back(v);
        }
    }
    for (std::size_t i = 0; i < nps.size(); ++i) {
        const long np = nps[i];
        const double w = np > 0 ? qnd::interferometer_width(geom, static_cast<double>(np))
                                : std::numeric_limits<double>::infinity();
        const auto counts = qnd::sample_scatter_counts(model, modes, geom, np, qnd::stream_seed(c.seed, i));
        for (auto src : {qnd::WidthSource::GaussianEstimate, qnd::WidthSource::Quadrature}) {
            const auto r = qnd::combine_widths(model, modes, geom, np, w, src,
                                               src == qnd::WidthSource::Quadrature
                                                   ? std::optional<qnd::ScatterCounts>(counts)
                                                   : std::nullopt);
            t.add_row({integer(np),
                       std::string(src == qnd::WidthSource::GaussianEstimate ? "gaussian-estimate" : "quadrature"),
                       real(r.delta_n1), real(r.jx_estimate), real(r.xi), real(r.n0_width),
                       real(r.scattering_sum), real(r.scattering_closed_form), real(r.fitted_exponent)});
        }
    }

    // Radial distributions of the mode with the largest solid angle.
    ResultTable rad("radial", qnd::schema::radial());
    stamp(rad, c, "dense");
    if (!modes.on_sphere.empty()) {
        const auto it = std::max_element(modes.on_sphere.begin(), modes.on_sphere.end(),
                                         [](const auto &a, const auto &b) { return a.delta_omega < b.delta_omega; });
        const auto idx = static_cast<std::size_t>(it - modes.on_sphere.begin());
        const std::string label = std::to_string(it->index[0]) + " " + std::to_string(it->index[1]) + " " +
                                  std::to_string(it->index[2]);
        const auto prior = qnd::initial_mode_distribution(model.n_cell);
        const auto counts = qnd::sample_scatter_counts(model, modes, geom, c.n_photons,
                                                       qnd::stream_seed(c.seed, nps.size()));
        const auto post = qnd::mode_posterior_with_coupling(
            prior, counts.per_mode[idx], c.n_photons, qnd::mode_coupling(geom, model.n_cells(), it->delta_omega));
        for (const auto *p : {&prior, &post}) {
            const std::size_t stride = std::max<std::size_t>(1, p->radius.size() / 512);
            for (std::size_t j = 0; j < p->radius.size(); j += stride) {
                rad.add_row({label, integer(p->n_sc), integer(p->n_photons), real(p->radius[j]), real(p->density[j])});
            }
        }
    }
    std::cout << emit(t, o.out, "dense") << '\n' << emit(rad, o.out, "dense_radial") << '\n';
    return 0;
}

int cmd_sweep(const Overrides &o, const std::string &param, double from, double to, int points, bool log_scale) {
    const ExperimentConfig base = resolve(o);
    if (points < 1) {
        throw qnd::DomainError("--points must be >= 1");
    }
    if (log_scale && !(from > 0.0 && to > 0.0)) {
        throw qnd::DomainError("a logarithmic sweep needs positive bounds");
    }
    ResultTable t("sweep", qnd::schema::sweep());
    stamp(t, base, "sweep");
    t.add_metadata("parameter", param);
    for (int i = 0; i < points; ++i) {
        const double s = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        const double v = log_scale ? from * std::pow(to / from, s) : from + (to - from) * s;
        ExperimentConfig c = base;
        double np = static_cast<double>(c.n_photons);
        if (param == "n_photons") {
            np = v;
        } else if (param == "f") {
            c.f = v;
        } else if (param == "theta0") {
            c.theta0 = v;
        } else if (param == "n_atoms") {
            c.n_atoms = static_cast<int>(std::lround(v));
        } else {
            throw qnd::ConfigError("unknown sweep parameter '" + param + "' (n_photons, f, theta0, n_atoms)");
        }
        const auto geom = c.geometry();
        if (auto viol = geom.violations(); !viol.empty()) {
            throw qnd::ValidityError("sweep value " + qnd::format_number(v) + ": " + viol.front());
        }
        using qnd::Regime;
        for (Regime r : {Regime::InterferometerOnly, Regime::SmallCloud, Regime::Dilute, Regime::Dense}) {
            const auto p = qnd::predict(r, geom, c.n_atoms, np);
            t.add_row({param, real(v), std::string(qnd::to_string(r)), real(np), real(p.xi), real(p.delta_na),
                       real(p.jx_over_j), real(p.np_opt_derived), real(p.xi_min_derived), real(p.np_opt_paper),
                       real(p.xi_min_paper)});
        }
    }
    std::cout << emit(t, o.out, "sweep") << '\n';
    return 0;
}

void report(const std::string &command, const std::string &kind, const std::string &message) {
    nlohmann::json j = {{"command", command}, {"error", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
}

void add_common(CLI::App *sub, Overrides &o) {
    sub->add_option("--config", o.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed (overrides config)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--histories", o.histories, "number of histories");
    sub->add_option("--photons", o.photons, "photons per history");
    sub->add_option("--record-every", o.record_every, "record every m-th photon");
    sub->add_option("--grid-cells", o.grid_cells, "minimum number of sphere-grid cells");
    sub->add_flag("--echo-config", o.echo, "print the resolved configuration and exit");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"qndsim: QND spin-squeezing simulator"};
    app.require_subcommand(1);
    Overrides o;
    int dense_points = 25;
    std::string param{"n_photons"};
    double from = 1.0, to = 1e6;
    int points = 61;
    bool log_scale = true;

    auto *traj = app.add_subcommand("trajectory", "run one history");
    auto *ens = app.add_subcommand("ensemble", "run independent histories and aggregate");
    auto *pred = app.add_subcommand("predict", "closed-form predictions for all regimes");
    auto *dense = app.add_subcommand("dense", "dense-cloud mode model");
    auto *sweep = app.add_subcommand("sweep", "vary one parameter and tabulate predictions");
    for (auto *s : {traj, ens, pred, dense, sweep}) {
        add_common(s, o);
    }
    dense->add_option("--points", dense_points, "photon numbers sampled up to n_photons");
    sweep->add_option("--param", param, "n_photons, f, theta0 or n_atoms");
    sweep->add_option("--from", from, "first value");
    sweep->add_option("--to", to, "last value");
    sweep->add_option("--points", points, "number of values");
    sweep->add_option("--log", log_scale, "logarithmic spacing (true/false)");

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (o.echo) {
            std::cout << qnd::echo_config(resolve(o));
            return 0;
        }
        if (command == "trajectory") {
            return cmd_trajectory(o);
        }
        if (command == "ensemble") {
            return cmd_ensemble(o);
        }
        if (command == "predict") {
            return cmd_predict(o);
        }
        if (command == "dense") {
            return cmd_dense(o, dense_points);
        }
        return cmd_sweep(o, param, from, to, points, log_scale);
    } catch (const qnd::Error &e) {
        report(command, e.kind(), e.what());
        return 2;
    } catch (const std::exception &e) {
        report(command, "internal", e.what());
        return 3;
    }
}
