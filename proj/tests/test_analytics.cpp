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

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "qndsqueeze/analytics.hpp"
#include "qndsqueeze/spin_state.hpp"

namespace {

constexpr double pi = std::numbers::pi;
constexpr double e = std::numbers::e;

// g0/k = 0.05 at k = 1.
qnd::BeamGeometry small_beam(double f) { return {1.0, 0.1 * std::sqrt(pi), f, 0.0}; }

double scale(const qnd::BeamGeometry &g) { return g.g0_sq() * g.f * g.f; }

} // namespace

TEST(Interferometer, WidthScaling) {
    const auto g = small_beam(0.1);
    EXPECT_NEAR(qnd::interferometer_width(g, 4e4) / qnd::interferometer_width(g, 1e4), 0.5, 1e-15);
    EXPECT_NEAR(qnd::interferometer_width(g, 1e4), 1.0 / (2 * pi * 0.0025 * 0.1 * 100), 1e-9);
    auto h = g;
    h.phi = 1.3;
    EXPECT_EQ(qnd::interferometer_width(g, 77), qnd::interferometer_width(h, 77));
    EXPECT_THROW((void)qnd::interferometer_width(g, 0), qnd::DomainError);
}

TEST(Interferometer, OptimumAndMinimum) {
    const auto g = small_beam(0.1);
    for (int n : {8, 100, 100000}) {
        const auto o = qnd::optimum(qnd::Regime::InterferometerOnly, g, n);
        const double np = 1.0 / (pi * pi * g.g0_sq() * g.g0_sq() * g.f * g.f);
        EXPECT_NEAR(o.n_photons / np, 1.0, 1e-6);
        EXPECT_NEAR(qnd::np_opt_paper(qnd::Regime::InterferometerOnly, g) / np, 1.0, 1e-12);
        EXPECT_NEAR(o.xi, std::sqrt(e / n), 1e-12 * std::sqrt(e / n));
        EXPECT_NEAR(qnd::xi_min_paper(qnd::Regime::InterferometerOnly, g, n), std::sqrt(1.0 / n), 1e-15);
    }
    EXPECT_TRUE(std::isinf(qnd::xi_interferometer(g, 10, 0.0)));
    EXPECT_GT(qnd::xi_interferometer(g, 10, 1e-8), 1e4);
}

TEST(CatCondition, Margin) {
    const qnd::BeamGeometry g{1.0, 0.45 * pi, 1e-9, 0.0};
    const auto far = qnd::cat_condition(g, 100);
    EXPECT_TRUE(far.single_peak);
    EXPECT_GT(far.margin, 1e6);
    EXPECT_FALSE(far.unevaluated_clause.empty());

    qnd::BeamGeometry b{1.0, 0.45 * pi, 0.0, 0.0};
    b.f = 1.0 / (2.0 * b.g0_sq() * std::sqrt(16.0));
    EXPECT_NEAR(qnd::cat_condition(b, 16).margin, 0.0, 1e-12);

    const qnd::BeamGeometry fig{1.0, 0.45 * pi, 0.01, 0.0};
    const auto c = qnd::cat_condition(fig, 8);
    EXPECT_NEAR(c.margin, pi / (2 * pi * fig.g0_sq() * 0.01) - std::sqrt(8.0), 1e-9);
    EXPECT_TRUE(c.single_peak);
}

TEST(SmallCloud, PosteriorClosedForm) {
    const double s1 = 0.01;
    EXPECT_EQ(qnd::small_cloud_posterior(s1, 1000, 0).peak, 0.0);
    EXPECT_EQ(qnd::small_cloud_posterior(s1, 1000, 0).width, qnd::small_cloud_posterior(s1, 1000, 400).width);
    EXPECT_NEAR(qnd::small_cloud_posterior(s1, 1000, 40).peak, 2.0, 1e-12);
    EXPECT_THROW((void)qnd::small_cloud_posterior(s1, 10, 11), qnd::DomainError);
}

TEST(SmallCloud, GaussianWidthMatchesExactLikelihood) {
    // G(n) = n^(2 Ns) (1 - s1 n^2)^(Np - Ns); rms by adaptive quadrature.
    const double s1 = 1e-4;
    const long np = 200000, ns = 400;
    const auto pk = qnd::small_cloud_posterior(s1, np, ns);
    const double lmax = 2.0 * ns * std::log(pk.peak) + (np - ns) * std::log1p(-s1 * pk.peak * pk.peak);
    auto g = [&](double n) {
        return std::exp(2.0 * ns * std::log(n) + (np - ns) * std::log1p(-s1 * n * n) - lmax);
    };
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double lo = pk.peak - 12 * pk.width, hi = pk.peak + 12 * pk.width;
    const double z = Q::integrate(g, lo, hi, 12, 1e-12);
    const double m1 = Q::integrate([&](double n) { return n * g(n); }, lo, hi, 12, 1e-12) / z;
    const double m2 = Q::integrate([&](double n) { return n * n * g(n); }, lo, hi, 12, 1e-12) / z;
    const double rms = std::sqrt(m2 - m1 * m1);
    EXPECT_GT(pk.peak / pk.width, 20.0);
    EXPECT_NEAR(rms / pk.width, 1.0, 0.05);
}

TEST(SmallCloud, DerivedOptimum) {
    const auto g = small_beam(0.05);
    for (int n : {10, 1000}) {
        const auto o = qnd::optimum(qnd::Regime::SmallCloud, g, n);
        EXPECT_NEAR(o.n_photons * 4 * pi * scale(g), 1.0, 1e-6);
        const double want = std::sqrt(4 * e / (pi * n)) / (g.g0() / g.k);
        EXPECT_NEAR(o.xi / want, 1.0, 1e-12);
        EXPECT_NEAR(qnd::xi_min_paper(qnd::Regime::SmallCloud, g, n) / want, 1.0, 1e-14);
        EXPECT_NEAR(qnd::np_opt_paper(qnd::Regime::SmallCloud, g) * std::sqrt(4 * pi) * scale(g), 1.0, 1e-14);
    }
    const qnd::BeamGeometry unit{1.0, 2.0 * std::sqrt(pi) * 0.999, 0.01, 0.0};
    EXPECT_GT(qnd::optimum(qnd::Regime::SmallCloud, unit, 50).xi, std::sqrt(1.0 / 50));
}

TEST(Dilute, VarianceAndDecay) {
    const auto g = small_beam(0.05);
    const double a = scale(g);
    EXPECT_EQ(qnd::dilute_variance(12, g, 0.0), 3.0);
    EXPECT_EQ(qnd::dilute_variance(12, g, 0.0),
              qnd::observables(qnd::QuantumState::uniform_superposition(12)).jz_var);
    EXPECT_NEAR(qnd::dilute_variance(12, g, 1.0 / (4 * pi * a)), 2.0, 1e-12);
    double prev = 1e300;
    for (double np = 0; np < 1e5; np += 997) {
        const double v = qnd::dilute_variance(12, g, np);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_EQ(qnd::dilute_jx_decay(12, g, 0.0), 6.0);
    EXPECT_NEAR(qnd::dilute_jx_decay(12, g, 1.0 / (2 * pi * a)), 6.0 / e, 1e-12);
}

TEST(Dilute, DecayMatchesCoherenceOde) {
    // Per-atom coherence decays at half the scattering rate 4 pi g0^2 f^2.
    const auto g = small_beam(0.08);
    const double rate = 4 * pi * scale(g) / 2.0;
    const double np_end = 3.0 / rate;
    const int steps = 20000;
    const double h = np_end / steps;
    double c = 0.5;
    auto d = [&](double y) { return -rate * y; };
    for (int i = 0; i < steps; ++i) {
        const double k1 = d(c), k2 = d(c + 0.5 * h * k1), k3 = d(c + 0.5 * h * k2), k4 = d(c + h * k3);
        c += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const int n = 30;
    EXPECT_NEAR(qnd::dilute_jx_decay(n, g, np_end), n * c, 1e-9);
}

TEST(Dilute, OptimumMatchesSmallCloudCurve) {
    const auto g = small_beam(0.05);
    const auto d = qnd::optimum(qnd::Regime::Dilute, g, 400);
    const auto s = qnd::optimum(qnd::Regime::SmallCloud, g, 400);
    EXPECT_EQ(d.xi, s.xi);
    EXPECT_NEAR(d.n_photons * 4 * pi * scale(g), 1.0, 1e-6);
    EXPECT_NEAR(qnd::np_opt_paper(qnd::Regime::Dilute, g) * 4 * pi * scale(g), 1.0, 1e-14);
    EXPECT_NEAR(qnd::xi_min_paper(qnd::Regime::Dilute, g, 400),
                std::sqrt(2 * e / (pi * 400)) * g.k / g.g0(), 1e-14);
}

TEST(Dilute, NonsymmetricBound) {
    EXPECT_NEAR(qnd::jx_bound_nonsymmetric(2.0, 20.0), std::exp(-1.0 / 16) * 4.0, 1e-14);
    EXPECT_NEAR(qnd::jx_bound_nonsymmetric(2.0, 20.0), 3.7577, 5e-5);
    EXPECT_NEAR(qnd::jx_bound_nonsymmetric(1e15, 4.0 * 5.0), 4.0, 1e-12);
    EXPECT_EQ(qnd::jx_bound_nonsymmetric(1.0, 0.0), 0.0);
    EXPECT_THROW((void)qnd::jx_bound_nonsymmetric(0.0, 1.0), qnd::DomainError);
}

TEST(Dense, OptimumAndBounds) {
    const auto g = small_beam(0.003);
    const auto o = qnd::optimum(qnd::Regime::Dense, g, 1000000);
    EXPECT_NEAR(o.n_photons * pi * scale(g) / 4.0, 1.0, 1e-6);
    const double want = std::sqrt(e / (4 * pi * 1e6)) * g.k / g.g0();
    EXPECT_NEAR(o.xi, want, 1e-12 * want);
    EXPECT_NEAR(qnd::xi_min_paper(qnd::Regime::Dense, g, 1000000), want, 1e-15);
    const double lambda2 = 4 * pi * pi;
    EXPECT_NEAR(qnd::optical_density_bound(1000, 1000 * lambda2), 1.0, 1e-14);
    EXPECT_NEAR(qnd::optical_density_bound(1000, 10 * lambda2), 0.1, 1e-14);
    EXPECT_NEAR(qnd::cavity_factor(4.0), 0.5, 1e-15);
    EXPECT_THROW((void)qnd::cavity_factor(0.5), qnd::DomainError);
}

TEST(Optimizer, DerivedMinimumBoundsTabulatedCurve) {
    const auto g = small_beam(0.02);
    for (auto r : {qnd::Regime::InterferometerOnly, qnd::Regime::SmallCloud, qnd::Regime::Dilute,
                   qnd::Regime::Dense}) {
        const auto p = qnd::predict(r, g, 500, 1234.0, 41);
        ASSERT_EQ(p.curve.size(), 41U);
        for (const auto &pt : p.curve) {
            EXPECT_LE(p.xi_min_derived, pt.xi + 1e-9) << qnd::to_string(r);
        }
        // convex in log Np around the minimum
        for (std::size_t i = 1; i + 1 < p.curve.size(); ++i) {
            EXPECT_GT(p.curve[i - 1].xi + p.curve[i + 1].xi, 2 * p.curve[i].xi);
        }
        EXPECT_LE(p.xi_min_derived, p.xi);
    }
}

TEST(Optimizer, GoldenSectionOnKnownFunction) {
    const auto o = qnd::golden_section_log([](double x) { return std::pow(std::log(x / 37.0), 2) + 1.0; },
                                           1e-3, 1e6);
    EXPECT_NEAR(o.n_photons / 37.0, 1.0, 1e-7);
    EXPECT_NEAR(o.xi, 1.0, 1e-15);
    EXPECT_THROW((void)qnd::golden_section_log([](double x) { return x; }, 2.0, 1.0), qnd::DomainError);
}

TEST(WidthRatio, ExactAndQuotedFormsBothBelowOne) {
    const qnd::BeamGeometry g{1.0, 0.45 * pi, 0.01, 0.0};
    EXPECT_NEAR(qnd::width_ratio_exact(g),
                qnd::small_cloud_posterior(g.sigma1(), 1000, 3).width / qnd::interferometer_width(g, 1000),
                1e-12);
    EXPECT_LT(qnd::width_ratio_exact(g), 1.0);
    EXPECT_LT(qnd::width_ratio_paper(g), 1.0);
    EXPECT_NE(qnd::width_ratio_exact(g), qnd::width_ratio_paper(g));
}

TEST(Rescaling, WavenumberSymmetry) {
    const double alpha = 3.7;
    const qnd::BeamGeometry g{1.0, 0.3, 0.02, 0.4};
    const qnd::BeamGeometry h{alpha, 0.3, 0.02 / alpha, 0.4};
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    EXPECT_LT(rel(qnd::interferometer_width(h, 900), qnd::interferometer_width(g, 900)), 1e-12);
    EXPECT_LT(rel(qnd::width_ratio_exact(h), qnd::width_ratio_exact(g)), 1e-12);
    EXPECT_LT(rel(h.sigma1(), g.sigma1()), 1e-12);
    for (auto r : {qnd::Regime::InterferometerOnly, qnd::Regime::SmallCloud, qnd::Regime::Dilute,
                   qnd::Regime::Dense}) {
        EXPECT_LT(rel(qnd::squeezing_curve(r, h, 50, 321.0), qnd::squeezing_curve(r, g, 50, 321.0)), 1e-12);
        EXPECT_LT(rel(qnd::xi_min_paper(r, h, 50), qnd::xi_min_paper(r, g, 50)), 1e-12);
        EXPECT_LT(rel(qnd::optimum(r, h, 50).xi, qnd::optimum(r, g, 50).xi), 1e-9);
    }
    EXPECT_LT(rel(qnd::optical_density_bound(10, 5.0 / (alpha * alpha), alpha),
                  qnd::optical_density_bound(10, 5.0)), 1e-12);
}
