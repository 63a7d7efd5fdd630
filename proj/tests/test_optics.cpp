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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qndsqueeze/optics.hpp"

namespace {

constexpr double pi = std::numbers::pi;

qnd::BeamGeometry geom(double theta0, double f) { return {1.0, theta0, f, 0.0}; }

// Independent midpoint rule in (theta, phi) for the pair integral.
std::complex<double> brute_pair_integral(double k, double theta0, const qnd::Vec3 &d, int n_t, int n_p) {
    std::complex<double> acc{};
    const double dt = (pi - theta0) / n_t;
    const double dp = 2 * pi / n_p;
    for (int a = 0; a < n_t; ++a) {
        const double t = theta0 + (a + 0.5) * dt;
        for (int b = 0; b < n_p; ++b) {
            const double p = (b + 0.5) * dp;
            const double kx = k * std::sin(t) * std::cos(p);
            const double ky = k * std::sin(t) * std::sin(p);
            const double kz = k * (std::cos(t) - 1.0);
            acc += std::polar(1.0, kx * d[0] + ky * d[1] + kz * d[2]) * std::sin(t) * dt * dp;
        }
    }
    return acc;
}

} // namespace

TEST(Beam, CouplingAndScatteringProbability) {
    const auto g = geom(0.45 * pi, 0.01);
    EXPECT_NEAR(g.g0(), 0.45 * pi / (2 * std::sqrt(pi)), 1e-15);
    EXPECT_NEAR(g.sigma1(), 2 * pi * 1e-4 * g.g0_sq() * (1 + std::cos(0.45 * pi)), 1e-18);
    EXPECT_NEAR(g.phase_per_atom(), 2 * pi * 0.01 * g.g0_sq(), 1e-16);
    EXPECT_TRUE(g.violations().empty());
}

TEST(Beam, ViolationsAreAllListed) {
    qnd::BeamGeometry bad{-1.0, 2.0, -0.5, NAN};
    EXPECT_EQ(bad.violations().size(), 4U);
    const auto strong = geom(0.45 * pi, 1.0); // sigma1 ~ 0.37
    ASSERT_EQ(strong.violations().size(), 1U);
    EXPECT_NE(strong.violations()[0].find("sigma1"), std::string::npos);
}

TEST(Cloud, SamplingIsDeterministicAndScaled) {
    qnd::RandomStream a(7), b(7);
    const qnd::CloudSpec spec{qnd::CloudLaw::Gaussian, 2.0};
    const auto c1 = qnd::sample_cloud(spec, 4000, a);
    const auto c2 = qnd::sample_cloud(spec, 4000, b);
    double s2 = 0.0;
    for (std::size_t i = 0; i < c1.positions.size(); ++i) {
        EXPECT_EQ(c1.positions[i], c2.positions[i]);
        s2 += qnd::dot(c1.positions[i], c1.positions[i]);
    }
    const double rms = std::sqrt(s2 / (3.0 * 4000));
    EXPECT_NEAR(rms, 2.0, 0.05);

    qnd::RandomStream r(1);
    const auto pt = qnd::sample_cloud({qnd::CloudLaw::Point}, 5, r);
    for (const auto &p : pt.positions) {
        EXPECT_EQ(qnd::length(p), 0.0);
    }
    const qnd::CloudSpec box{qnd::CloudLaw::Box, 0.0, {1.0, 2.0, 3.0}};
    EXPECT_NEAR(box.scale(), 3.0 / std::sqrt(12.0), 1e-15);
}

TEST(Forward, AmplitudeAndValidity) {
    const auto g = geom(0.3, 0.02);
    const auto a = qnd::forward_amplitude(g, 3, 0.19);
    EXPECT_NEAR(std::abs(a), 0.9, 1e-15);
    EXPECT_NEAR(std::arg(a), 3 * g.phase_per_atom(), 1e-15);
    EXPECT_THROW(qnd::forward_amplitude(g, 3, 1.0), qnd::ValidityError);
    EXPECT_THROW(qnd::forward_amplitude(g, 3, -0.1), qnd::DomainError);
}

TEST(SphereGrid, SolidAngleIsExact) {
    for (double t0 : {0.05, 0.5, 0.45 * pi}) {
        const auto grid = qnd::build_sphere_grid(1.0, t0, 3.0);
        EXPECT_NEAR(grid.total_solid_angle(), 2 * pi * (1 + std::cos(t0)), 1e-12);
        for (const auto &c : grid.cells) {
            EXPECT_GE(c.theta, t0);
            EXPECT_NEAR(qnd::length(c.direction), 1.0, 1e-14);
        }
    }
}

TEST(SphereGrid, ResolutionFollowsCloudSizeAndCap) {
    const auto coarse = qnd::build_sphere_grid(1.0, 0.2, 0.01);
    const auto fine = qnd::build_sphere_grid(1.0, 0.2, 10.0);
    EXPECT_LT(coarse.size(), fine.size());
    EXPECT_LE((pi - 0.2) / fine.n_lat, qnd::max_cell_angle(1.0, 10.0) + 1e-15);
    qnd::GridOptions opt;
    opt.max_cells = 100;
    try {
        (void)qnd::build_sphere_grid(1.0, 0.2, 10.0, opt);
        FAIL() << "expected a resolution error";
    } catch (const qnd::ResolutionError &e) {
        EXPECT_GT(e.required(), 100U);
    }
    opt = {};
    opt.min_cells = 5000;
    EXPECT_GE(qnd::build_sphere_grid(1.0, 0.2, 0.01, opt).size(), 5000U);
}

TEST(PairIntegral, MatchesBruteForceQuadrature) {
    const double t0 = 0.4;
    for (const qnd::Vec3 &d : {qnd::Vec3{0.3, 0.0, 0.0}, qnd::Vec3{1.0, -0.5, 0.7}, qnd::Vec3{0.0, 0.0, 2.5},
                               qnd::Vec3{3.0, 1.0, -2.0}}) {
        const auto fast = qnd::pair_scattering_integral(1.0, t0, d);
        const auto slow = brute_pair_integral(1.0, t0, d, 1200, 1200);
        EXPECT_NEAR(fast.real(), slow.real(), 2e-5);
        EXPECT_NEAR(fast.imag(), slow.imag(), 2e-5);
    }
    EXPECT_NEAR(qnd::pair_scattering_integral(1.0, t0, {0, 0, 0}).real(), 2 * pi * (1 + std::cos(t0)), 1e-14);
}

TEST(ScatterTable, PointCloudIsSuperradiant) {
    const auto g = geom(0.45 * pi, 0.01);
    qnd::AtomCloud cloud;
    cloud.positions.assign(5, qnd::Vec3{0, 0, 0});
    const auto grid = qnd::build_sphere_grid(1.0, g.theta0, 0.0);
    const auto t = qnd::build_scatter_table(cloud, g, grid);
    for (qnd::ConfigMask m = 0; m < 32; ++m) {
        const double na = qnd::count_a(m);
        EXPECT_NEAR(t.sigma_grid()[m], g.sigma1() * na * na, 1e-15);
        EXPECT_NEAR(t.sigma_continuum()[m], g.sigma1() * na * na, 1e-15);
    }
    EXPECT_LT(t.defect_bound(), 1e-15);
}

TEST(ScatterTable, EntriesMatchDirectBornSum) {
    const auto g = geom(0.3, 0.05);
    qnd::RandomStream rng(11);
    const auto cloud = qnd::sample_cloud({qnd::CloudLaw::Gaussian, 1.5}, 6, rng);
    const auto grid = qnd::build_sphere_grid(1.0, g.theta0, 1.5);
    const auto t = qnd::build_scatter_table(cloud, g, grid);
    for (std::size_t c = 0; c < grid.size(); c += 97) {
        const auto dk = qnd::momentum_transfer(1.0, grid.cells[c].direction);
        const auto amps = qnd::scattering_amplitudes(cloud, g, grid.cells[c].direction);
        for (qnd::ConfigMask m = 0; m < 64; m += 5) {
            const auto born = qnd::born_amplitude(cloud, m, dk, g.f);
            EXPECT_NEAR(t.amplitude_sq(m, c), std::norm(born), 1e-13);
            EXPECT_NEAR(std::abs(amps[m] - g.g0() * born), 0.0, 1e-13);
        }
    }
}

TEST(ScatterTable, GridDefectShrinksUnderRefinement) {
    const auto g = geom(0.2, 0.2);
    qnd::RandomStream rng(5);
    const auto cloud = qnd::sample_cloud({qnd::CloudLaw::Gaussian, 3.0}, 5, rng);
    qnd::GridOptions o1, o2;
    o2.refine = 2;
    const auto t1 = qnd::build_scatter_table(cloud, g, qnd::build_sphere_grid(1.0, g.theta0, 3.0, o1));
    const auto t2 = qnd::build_scatter_table(cloud, g, qnd::build_sphere_grid(1.0, g.theta0, 3.0, o2));
    EXPECT_GT(t1.defect_bound(), 0.0);
    EXPECT_LT(t2.defect_bound(), 0.5 * t1.defect_bound());
}

TEST(ScatterTable, CapacityCap) {
    const auto g = geom(0.3, 0.05);
    qnd::AtomCloud cloud;
    cloud.positions.assign(10, qnd::Vec3{0, 0, 0});
    const auto grid = qnd::build_sphere_grid(1.0, g.theta0, 0.0);
    EXPECT_THROW(qnd::build_scatter_table(cloud, g, grid, 1000), qnd::ResolutionError);
}
