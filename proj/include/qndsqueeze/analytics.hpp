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
 * Closed-form widths, mean-spin decay and squeezing curves for the
 * interferometer-only, small-cloud, dilute and dense regimes, with a numeric
 * optimizer that locates the best photon number of each curve.
 *
 * Where a printed optimum does not minimize its own curve, both numbers are
 * kept: `*_paper` is the quoted closed form, `*_derived` is the numeric
 * minimum.
 */

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "optics.hpp"

namespace qnd {

enum class Regime { InterferometerOnly, SmallCloud, Dilute, Dense };

[[nodiscard]] inline std::string_view to_string(Regime r) noexcept {
    switch (r) {
    case Regime::InterferometerOnly:
        return "interferometer-only";
    case Regime::SmallCloud:
        return "small-cloud";
    case Regime::Dilute:
        return "dilute";
    case Regime::Dense:
        return "dense";
    }
    return "?";
}

namespace detail {

inline void require_photons(double n_photons) {
    if (!(n_photons >= 0.0) || !std::isfinite(n_photons)) {
        throw DomainError("photon number must be finite and >= 0");
    }
}

inline void require_atoms(int n_atoms) {
    if (n_atoms < 1) {
        throw DomainError("n_atoms must be >= 1");
    }
}

/// g0^2 f^2, the per-photon scattering scale.
inline double scatter_rate(const BeamGeometry &g) { return g.g0_sq() * g.f * g.f; }

} // namespace detail

/// rms width in n_a of the interferometer likelihood after Np photons.
[[nodiscard]] inline double interferometer_width(const BeamGeometry &geom, double n_photons) {
    if (!(n_photons > 0.0)) {
        throw DomainError("interferometer_width needs n_photons > 0");
    }
    return 1.0 / (2.0 * std::numbers::pi * geom.g0_sq() * (geom.f / geom.k) * std::sqrt(n_photons));
}

/// Fraction <Jx>/J left after Np photons in each regime.
[[nodiscard]] inline double coherence_fraction(Regime r, const BeamGeometry &geom, double n_photons) {
    detail::require_photons(n_photons);
    const double pi = std::numbers::pi;
    const double s = detail::scatter_rate(geom);
    switch (r) {
    case Regime::InterferometerOnly: {
        const double q = geom.g0_sq() * geom.f / geom.k;
        return std::exp(-pi * pi * q * q * n_photons / 2.0);
    }
    case Regime::SmallCloud:
    case Regime::Dilute:
        return std::exp(-2.0 * pi * s * n_photons);
    case Regime::Dense:
        return std::exp(-(pi / 8.0) * s * n_photons);
    }
    return 0.0;
}

/// Squeezing factor sqrt(N) * width / <Jx> of a regime at Np photons.
[[nodiscard]] inline double squeezing_curve(Regime r, const BeamGeometry &geom, int n_atoms,
                                            double n_photons) {
    detail::require_atoms(n_atoms);
    detail::require_photons(n_photons);
    if (n_photons == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double width = interferometer_width(geom, n_photons);
    return 2.0 * width / std::sqrt(static_cast<double>(n_atoms)) / coherence_fraction(r, geom, n_photons);
}

[[nodiscard]] inline double xi_interferometer(const BeamGeometry &geom, int n_atoms, double n_photons) {
    return squeezing_curve(Regime::InterferometerOnly, geom, n_atoms, n_photons);
}
[[nodiscard]] inline double xi_small_cloud(const BeamGeometry &geom, int n_atoms, double n_photons) {
    return squeezing_curve(Regime::SmallCloud, geom, n_atoms, n_photons);
}
[[nodiscard]] inline double xi_dilute(const BeamGeometry &geom, int n_atoms, double n_photons) {
    return squeezing_curve(Regime::Dilute, geom, n_atoms, n_photons);
}
[[nodiscard]] inline double xi_dense(const BeamGeometry &geom, int n_atoms, double n_photons) {
    return squeezing_curve(Regime::Dense, geom, n_atoms, n_photons);
}

struct Optimum {
    double n_photons{};
    double xi{};
};

/**
 * Golden-section minimization of fn over log(x) in [lo, hi]; stops when the
 * bracket is narrower than rel_tol in x.
 */
inline Optimum golden_section_log(const std::function<double(double)> &fn, double lo, double hi,
                                  double rel_tol = 1e-9) {
    if (!(lo > 0.0 && hi > lo)) {
        throw DomainError("golden_section_log needs 0 < lo < hi");
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(lo);
    double b = std::log(hi);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = fn(std::exp(c));
    double fd = fn(std::exp(d));
    // log-space width equals relative width in x
    while (b - a > rel_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fn(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fn(std::exp(d));
        }
    }
    const double x = std::exp(0.5 * (a + b));
    return {x, fn(x)};
}

/// Numeric optimum of a regime's curve over [1e-2, 1e8] / (g0^2 f^2).
[[nodiscard]] inline Optimum optimum(Regime r, const BeamGeometry &geom, int n_atoms) {
    detail::require_atoms(n_atoms);
    const double s = detail::scatter_rate(geom);
    if (!(s > 0.0)) {
        throw DomainError("optimum needs f > 0");
    }
    return golden_section_log(
        [&](double np) { return squeezing_curve(r, geom, n_atoms, np); }, 1e-2 / s, 1e8 / s);
}

/// Quoted optimum photon number of each regime.
[[nodiscard]] inline double np_opt_paper(Regime r, const BeamGeometry &geom) {
    const double pi = std::numbers::pi;
    const double s = detail::scatter_rate(geom);
    switch (r) {
    case Regime::InterferometerOnly:
        return geom.k * geom.k / (pi * pi * s * geom.g0_sq());
    case Regime::SmallCloud:
        return 1.0 / (std::sqrt(4.0 * pi) * s);
    case Regime::Dilute:
        return 1.0 / (4.0 * pi * s);
    case Regime::Dense:
        return 4.0 / (pi * s);
    }
    return 0.0;
}

/// Quoted minimum squeezing factor of each regime.
[[nodiscard]] inline double xi_min_paper(Regime r, const BeamGeometry &geom, int n_atoms) {
    detail::require_atoms(n_atoms);
    const double pi = std::numbers::pi;
    const double e = std::numbers::e;
    const double n = static_cast<double>(n_atoms);
    const double kg = geom.k / geom.g0();
    switch (r) {
    case Regime::InterferometerOnly:
        return std::sqrt(1.0 / n);
    case Regime::SmallCloud:
        return std::sqrt(4.0 * e / (pi * n)) * kg;
    case Regime::Dilute:
        return std::sqrt(2.0 * e / (pi * n)) * kg;
    case Regime::Dense:
        return std::sqrt(e / (4.0 * pi * n)) * kg;
    }
    return 0.0;
}

struct CurvePoint {
    double n_photons{};
    double xi{};
};

struct RegimePrediction {
    Regime regime{};
    double n_photons{};
    double delta_na{};       ///< interferometer width at n_photons
    double jx_over_j{};      ///< coherence fraction at n_photons
    double xi{};             ///< curve value at n_photons
    double np_opt_paper{};
    double np_opt_derived{};
    double xi_min_paper{};
    double xi_min_derived{};
    std::vector<CurvePoint> curve;
};

/// Full prediction; `curve_points` log-spaced samples span two decades
/// around the derived optimum.
[[nodiscard]] inline RegimePrediction predict(Regime r, const BeamGeometry &geom, int n_atoms,
                                              double n_photons, int curve_points = 0) {
    RegimePrediction p;
    p.regime = r;
    p.n_photons = n_photons;
    p.delta_na = n_photons > 0.0 ? interferometer_width(geom, n_photons)
                                 : std::numeric_limits<double>::infinity();
    p.jx_over_j = coherence_fraction(r, geom, n_photons);
    p.xi = squeezing_curve(r, geom, n_atoms, n_photons);
    const Optimum opt = optimum(r, geom, n_atoms);
    p.np_opt_derived = opt.n_photons;
    p.xi_min_derived = opt.xi;
    p.np_opt_paper = np_opt_paper(r, geom);
    p.xi_min_paper = xi_min_paper(r, geom, n_atoms);
    for (int i = 0; i < curve_points; ++i) {
        const double t = curve_points == 1 ? 0.0 : -2.0 + 4.0 * i / (curve_points - 1);
        const double np = opt.n_photons * std::pow(10.0, t);
        p.curve.push_back({np, squeezing_curve(r, geom, n_atoms, np)});
    }
    return p;
}

struct CatCondition {
    bool single_peak{};
    double margin{}; ///< fringe period in n_a minus sqrt(N)
    std::string unevaluated_clause{"Phi k / (pi g0^2 f) >> sqrt(N): Phi is not defined; not evaluated"};
};

/// Whether the interferometer likelihood has a single peak inside the
/// initial n_a distribution.
[[nodiscard]] inline CatCondition cat_condition(const BeamGeometry &geom, int n_atoms) {
    detail::require_atoms(n_atoms);
    const double per_atom = 2.0 * std::numbers::pi * geom.g0_sq() * geom.f / geom.k;
    CatCondition c;
    c.margin = per_atom > 0.0 ? std::numbers::pi / per_atom - std::sqrt(static_cast<double>(n_atoms))
                              : std::numeric_limits<double>::infinity();
    c.single_peak = c.margin > 0.0;
    return c;
}

struct PosteriorPeak {
    double peak{};
    double width{};
};

/// Gaussian approximation of the point-cloud scattering likelihood
/// n_a^(2 Ns) (1 - sigma1 n_a^2)^(Np - Ns).
[[nodiscard]] inline PosteriorPeak small_cloud_posterior(double sigma1, long n_photons, long n_scatt) {
    if (!(sigma1 > 0.0) || n_photons < 1 || n_scatt < 0 || n_scatt > n_photons) {
        throw DomainError("small_cloud_posterior needs sigma1 > 0 and 0 <= n_scatt <= n_photons >= 1");
    }
    const double np = static_cast<double>(n_photons);
    return {std::sqrt(static_cast<double>(n_scatt) / (sigma1 * np)), 1.0 / std::sqrt(4.0 * sigma1 * np)};
}

/// Scattering width over interferometer width, from the two width formulas.
[[nodiscard]] inline double width_ratio_exact(const BeamGeometry &geom) {
    return std::sqrt(std::numbers::pi / 2.0) * (geom.g0() / geom.k) / std::sqrt(1.0 + std::cos(geom.theta0));
}

/// The quoted closed form of the same ratio.
[[nodiscard]] inline double width_ratio_paper(const BeamGeometry &geom) {
    return 0.25 * (geom.g0() / geom.k) / (1.0 + std::cos(geom.theta0));
}

[[nodiscard]] inline double dilute_variance(int n_atoms, const BeamGeometry &geom, double n_photons) {
    detail::require_atoms(n_atoms);
    detail::require_photons(n_photons);
    return n_atoms / (4.0 + 8.0 * std::numbers::pi * detail::scatter_rate(geom) * n_photons);
}

[[nodiscard]] inline double dilute_jx_decay(int n_atoms, const BeamGeometry &geom, double n_photons) {
    detail::require_atoms(n_atoms);
    return 0.5 * n_atoms * coherence_fraction(Regime::Dilute, geom, n_photons);
}

/**
 * Soft upper estimate of <Jx> for a state that left the symmetric subspace,
 * assuming a Gaussian Jz distribution of variance var_jz.
 */
[[nodiscard]] inline double jx_bound_nonsymmetric(double var_jz, double jsq) {
    if (!(var_jz > 0.0) || jsq < 0.0) {
        throw DomainError("jx_bound_nonsymmetric needs var_jz > 0 and jsq >= 0");
    }
    return std::exp(-1.0 / (8.0 * var_jz)) * (-0.5 + std::sqrt(1.0 + 4.0 * jsq) / 2.0);
}

/// Lower bound on xi set by the optical density N lambda^2 / A.
[[nodiscard]] inline double optical_density_bound(int n_atoms, double area, double k = 1.0) {
    detail::require_atoms(n_atoms);
    if (!(area > 0.0) || !(k > 0.0)) {
        throw DomainError("optical_density_bound needs area > 0 and k > 0");
    }
    const double lambda = 2.0 * std::numbers::pi / k;
    return std::sqrt(area / (n_atoms * lambda * lambda));
}

/// Reduction of xi for a cavity with n_t round trips.
[[nodiscard]] inline double cavity_factor(double n_trips) {
    if (!(n_trips >= 1.0)) {
        throw DomainError("cavity round-trip count must be >= 1");
    }
    return 1.0 / std::sqrt(n_trips);
}

} // namespace qnd
