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

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "qndsqueeze/config.hpp"
#include "qndsqueeze/result_table.hpp"

namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

std::string config_path(const std::string &name) { return std::string(QND_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string &tag) {
    const auto d = fs::temp_directory_path() / ("qndsim_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string &args, const fs::path &dir) {
    const std::string cmd = std::string(QNDSIM_PATH) + " " + args + " >" + (dir / "stdout.txt").string() +
                            " 2>" + (dir / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string minimal(const std::string &extra) {
    return R"({"n_atoms": 4, "cloud": {"law": "point"}, "theta0": 0.5, "f": 0.01)" + extra + "}";
}

} // namespace

TEST(Config, SmallCloudFigureConfig) {
    const auto c = qnd::load_config(config_path("fig2.json"));
    EXPECT_EQ(c.n_atoms, 8);
    EXPECT_EQ(c.cloud.law, qnd::CloudLaw::Gaussian);
    EXPECT_EQ(c.cloud.rms, 0.01);
    EXPECT_NEAR(c.theta0, 0.45 * pi, 1e-15);
    EXPECT_NEAR(c.phi, qnd::midfringe_phase(c.geometry(), 8), 1e-15);
    EXPECT_TRUE(c.geometry().violations().empty());
}

TEST(Config, DiluteFigureConfig) {
    const auto c = qnd::load_config(config_path("fig4.json"));
    EXPECT_EQ(c.cloud.rms, 10.0);
    EXPECT_NEAR(c.geometry().g0() / c.k, 0.05, 1e-12);
}

TEST(Config, EveryShippedConfigRoundTrips) {
    for (const auto &entry : fs::directory_iterator(QND_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") {
            continue;
        }
        const auto c = qnd::load_config(entry.path().string());
        const auto back = qnd::parse_config(qnd::echo_config(c));
        EXPECT_TRUE(back == c) << entry.path();
        EXPECT_EQ(qnd::config_hash(back), qnd::config_hash(c));
    }
}

TEST(Config, HashTracksContent) {
    auto c = qnd::load_config(config_path("fig2.json"));
    const auto h = qnd::config_hash(c);
    c.seed += 1;
    EXPECT_NE(qnd::config_hash(c), h);
}

TEST(Config, StrongScatteringRejected) {
    try {
        (void)qnd::parse_config(R"({"n_atoms": 8, "theta0": "0.45pi", "f": 1.0})");
        FAIL() << "accepted sigma1 >= 0.1";
    } catch (const qnd::ConfigValidationError &e) {
        ASSERT_EQ(e.violations().size(), 1U);
        EXPECT_NE(e.violations()[0].find("sigma1"), std::string::npos);
    }
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
    EXPECT_THROW((void)qnd::parse_config(minimal(R"(, "photons": 10)")), qnd::ConfigValidationError);
    EXPECT_THROW((void)qnd::parse_config(
                     R"({"n_atoms": 4, "cloud": {"law": "point", "size": 1}, "theta0": 0.5, "f": 0.01})"),
                 qnd::ConfigValidationError);
    EXPECT_THROW((void)qnd::parse_config(minimal(R"(, "grid": {"cells": 10})")), qnd::ConfigValidationError);
    EXPECT_NO_THROW((void)qnd::parse_config(minimal("")));
}

TEST(Config, AllViolationsListed) {
    try {
        (void)qnd::parse_config(R"({"n_atoms": 0, "n_photons": 0, "f": -1, "bogus": 1, "theta0": "half"})");
        FAIL();
    } catch (const qnd::ConfigValidationError &e) {
        EXPECT_GE(e.violations().size(), 5U);
    }
}

TEST(Config, ParseErrorCarriesLocation) {
    try {
        (void)qnd::parse_config("{\n  \"n_atoms\": 8,\n  \"f\": ,\n}");
        FAIL();
    } catch (const qnd::ConfigParseError &e) {
        EXPECT_EQ(e.line(), 3U);
        EXPECT_GE(e.column(), 8U);
    }
    EXPECT_THROW((void)qnd::load_config("/nonexistent/config.json"), qnd::ConfigError);
}

TEST(Config, AnglesAsMultiplesOfPi) {
    EXPECT_NEAR(qnd::parse_config(minimal(R"(, "phi": "0.25pi")")).phi, pi / 4, 1e-15);
    EXPECT_NEAR(qnd::parse_config(minimal(R"(, "phi": "pi")")).phi, pi, 1e-15);
    EXPECT_EQ(qnd::parse_config(minimal(R"(, "phi": 0.3)")).phi, 0.3);
    EXPECT_THROW((void)qnd::parse_config(minimal(R"(, "phi": "0.25 pi")")), qnd::ConfigValidationError);
}

TEST(ResultTable, CsvLayoutAndValidation) {
    qnd::ResultTable t("summary", qnd::schema::summary());
    t.add_metadata("seed", "7");
    t.add_row({std::string("xi"), 0.5});
    t.add_row({std::string("nan"), std::numeric_limits<double>::quiet_NaN()});
    const auto csv = t.to_csv();
    EXPECT_EQ(csv, "# schema: summary\n# seed: 7\nquantity,value\nxi,0.5\nnan,nan\n");
    EXPECT_TRUE(qnd::validate_csv(csv).empty());
    EXPECT_THROW(t.add_row({0.5}), qnd::ContractViolation);
    EXPECT_FALSE(qnd::validate_csv("# schema: summary\nquantity,value\nxi\n").empty());
    EXPECT_FALSE(qnd::validate_csv("# schema: summary\nname,value\n").empty());
    EXPECT_FALSE(qnd::validate_csv("quantity,value\n").empty());
    EXPECT_FALSE(qnd::validate_csv("# schema: other\nquantity,value\n").empty());
}

TEST(ResultTable, NumbersRoundTripExactly) {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(mant(gen), expo(gen));
        const auto s = qnd::format_number(x);
        double y{};
        std::from_chars(s.data(), s.data() + s.size(), y);
        EXPECT_EQ(x, y) << s;
    }
}

TEST(Cli, TrajectoryOutputIsByteIdentical) {
    const auto a = scratch("traj_a"), b = scratch("traj_b");
    const std::string args = "trajectory --config " + config_path("fig2.json") + " --photons 300";
    ASSERT_EQ(run_cli(args + " --out " + a.string(), a), 0) << slurp(a / "stderr.txt");
    ASSERT_EQ(run_cli(args + " --out " + b.string(), b), 0);
    const auto ta = slurp(a / "trajectory.csv");
    EXPECT_EQ(ta, slurp(b / "trajectory.csv"));
    EXPECT_TRUE(qnd::validate_csv(ta).empty());
    EXPECT_NE(ta.find("# seed: 2\n"), std::string::npos);
    const auto c = scratch("traj_c");
    ASSERT_EQ(run_cli(args + " --seed 3 --out " + c.string(), c), 0);
    EXPECT_NE(ta, slurp(c / "trajectory.csv"));
}

TEST(Cli, EveryCommandEmitsValidTables) {
    const auto d = scratch("all");
    ASSERT_EQ(run_cli("ensemble --config " + config_path("fig3.json") +
                          " --histories 3 --photons 200 --out " + d.string(),
                      d),
              0)
        << slurp(d / "stderr.txt");
    ASSERT_EQ(run_cli("predict --config " + config_path("predict.json") + " --out " + d.string(), d), 0)
        << slurp(d / "stderr.txt");
    ASSERT_EQ(run_cli("sweep --config " + config_path("predict.json") + " --points 9 --out " + d.string(), d), 0)
        << slurp(d / "stderr.txt");
    ASSERT_EQ(run_cli("dense --config " + config_path("dense.json") + " --points 3 --out " + d.string(), d), 0)
        << slurp(d / "stderr.txt");
    for (const char *name : {"ensemble.csv", "summary.csv", "predict.csv", "sweep.csv", "dense.csv",
                             "dense_radial.csv"}) {
        ASSERT_TRUE(fs::exists(d / name)) << name;
        const auto problems = qnd::validate_csv(slurp(d / name));
        EXPECT_TRUE(problems.empty()) << name << ": " << (problems.empty() ? "" : problems.front());
    }
}

TEST(Cli, PredictReportsDenseMinimum) {
    const auto d = scratch("predict");
    ASSERT_EQ(run_cli("predict --config " + config_path("predict.json") + " --out " + d.string(), d), 0);
    const auto csv = slurp(d / "predict.csv");
    const auto pos = csv.find("dense,xi_min,");
    ASSERT_NE(pos, std::string::npos);
    const auto line = csv.substr(pos, csv.find('\n', pos) - pos);
    const double paper = std::stod(line.substr(std::string("dense,xi_min,").size()));
    EXPECT_NEAR(paper, std::sqrt(std::numbers::e / (4 * pi * 8)) * 20.0, 1e-9);
    EXPECT_NEAR(paper, 3.29, 0.005);
}

TEST(Cli, EchoedConfigReloadsIdentically) {
    const auto d = scratch("echo");
    ASSERT_EQ(run_cli("trajectory --echo-config --seed 99 --config " + config_path("fig4.json"), d), 0);
    const auto echoed = qnd::parse_config(slurp(d / "stdout.txt"));
    auto want = qnd::load_config(config_path("fig4.json"));
    want.seed = 99;
    EXPECT_TRUE(echoed == want);
}

TEST(Cli, ErrorsAreMachineReadable) {
    const auto d = scratch("err");
    std::ofstream(d / "bad.json") << R"({"n_atoms": 8, "theta0": "0.45pi", "f": 1.0})";
    EXPECT_EQ(run_cli("predict --config " + (d / "bad.json").string(), d), 2);
    const auto err = nlohmann::json::parse(slurp(d / "stderr.txt"));
    EXPECT_EQ(err.at("command"), "predict");
    EXPECT_EQ(err.at("error"), "config");
    EXPECT_NE(err.at("message").get<std::string>().find("sigma1"), std::string::npos);
    EXPECT_NE(run_cli("predict --config " + (d / "missing.json").string(), d), 0);
    EXPECT_NE(run_cli("teleport", d), 0);
}
