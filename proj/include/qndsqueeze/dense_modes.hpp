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
 * Mode-level model of a large dense cloud: the cloud is cut into M cubic
 * cells of n_cell atoms each and described by the Fourier amplitudes of the
 * |a> population on the cell lattice. A scattered photon couples to one
 * amplitude (the one whose wave vector lies on the scattering sphere in that
 * direction), and the amplitudes stay independent, so each mode is updated
 * by a one-dimensional radial quadrature.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "analytics.hpp"
#include "errors.hpp"
#include "optics.hpp"
#include "random.hpp"

namespace qnd {

struct DenseCloudModel {
    double cell_size{1.0};              ///< cubic cell edge a
    std::array<int, 3> cells{1, 1, 1};  ///< odd cell counts per axis
    double n_cell{100.0};               ///< atoms per cell
    double min_n_cell{25.0};            ///< soft validity threshold

    [[nodiscard]] long n_cells() const noexcept {
        return static_cast<long>(cells[0]) * cells[1] * cells[2];
    }
    [[nodiscard]] double n_atoms() const noexcept { return n_cell * static_cast<double>(n_cells()); }
    [[nodiscard]] double length(int axis) const noexcept { return cell_size * cells[axis]; }
    [[nodiscard]] double mode_spacing(int axis) const noexcept {
        return 2.0 * std::numbers::pi / length(axis);
    }

    /// Every violated guard for wavenumber k; empty when usable.
    [[nodiscard]] std::vector<std::string> violations(double k) const {
        std::vector<std::string> v;
        if (!(cell_size > 0.0)) {
            v.emplace_back("cell size must be positive");
        } else if (!(cell_size < 2.0 * std::numbers::pi / k)) {
            v.emplace_back("cell size must be smaller than the wavelength");
        }
        for (int a = 0; a < 3; ++a) {
            if (cells[a] < 1) {
                v.emplace_back("box length must be at least one cell on every axis");
            } else if (cells[a] % 2 == 0) {
                v.emplace_back("cell count per axis must be odd");
            }
        }
        if (!(n_cell > 0.0)) {
            v.emplace_back("n_cell must be positive");
        }
        return v;
    }

    [[nodiscard]] bool dense_enough() const noexcept { return n_cell >= min_n_cell; }
};

/// Builds a model from box lengths; each length must be an odd multiple of a.
inline DenseCloudModel make_dense_model(double cell_size, double lx, double ly, double lz,
                                        double n_cell) {
    DenseCloudModel m;
    m.cell_size = cell_size;
    m.n_cell = n_cell;
    std::vector<std::string> errs;
    const std::array<double, 3> len{lx, ly, lz};
    for (int a = 0; a < 3; ++a) {
        if (!(cell_size > 0.0) || !(len[a] >= cell_size * (1.0 - 1e-12))) {
            errs.emplace_back("degenerate box: length " + std::to_string(len[a]) +
                              " is shorter than the cell size");
            continue;
        }
        const double q = len[a] / cell_size;
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * q || static_cast<long>(r) % 2 == 0) {
            errs.emplace_back("box length " + std::to_string(len[a]) +
                              " must be an odd multiple of the cell size");
        }
        m.cells[a] = static_cast<int>(r);
    }
    if (!errs.empty()) {
        std::string msg = errs.front();
        for (std::size_t i = 1; i < errs.size(); ++i) {
            msg += "; " + errs[i];
        }
        throw ConfigError(msg);
    }
    return m;
}

struct FourierMode {
    std::array<int, 3> index{};
    Vec3 wavevector{};
    double delta_omega{}; ///< solid angle of the sphere directions it collects
};

struct ModeSet {
    std::vector<FourierMode> on_sphere;  ///< nonzero modes, canonical half-space index
    double zero_mode_solid_angle{};      ///< directions outside the cap mapping to K = 0
    double dropped_solid_angle{};        ///< directions whose K leaves the lattice zone
    double sphere_solid_angle{};         ///< full solid angle outside the forward cap
    long n_modes_total{};                ///< nonzero modes, (M - 1) / 2

    [[nodiscard]] double covered_solid_angle() const noexcept {
        double s = 0.0;
        for (const auto &m : on_sphere) {
            s += m.delta_omega;
        }
        return s;
    }
    [[nodiscard]] long n_off_sphere() const noexcept {
        return n_modes_total - static_cast<long>(on_sphere.size());
    }
};

namespace detail {

/// Flips an index into the half-space i_z < 0, or i_z = 0 and i_x < 0, or
/// i_z = i_x = 0 and i_y < 0.
inline std::array<int, 3> canonical_index(std::array<int, 3> i) {
    const bool keep = i[2] < 0 || (i[2] == 0 && i[0] < 0) || (i[2] == 0 && i[0] == 0 && i[1] < 0);
    if (!keep) {
        i = {-i[0], -i[1], -i[2]};
    }
    return i;
}

} // namespace detail

struct ModeGridOptions {
    double max_cell_fraction{0.2}; ///< direction cell angle / (mode spacing / k)
    long max_directions{20'000'000};
};

/**
 * Assigns every direction outside the forward cap to the lattice mode
 * nearest its momentum transfer and accumulates the solid angle per mode.
 */
inline ModeSet identify_scattering_modes(const DenseCloudModel &model, const BeamGeometry &geom,
                                         const ModeGridOptions &opt = {}) {
    if (auto v = model.violations(geom.k); !v.empty()) {
        throw ConfigError(v.front());
    }
    const double pi = std::numbers::pi;
    const std::array<double, 3> dk{model.mode_spacing(0), model.mode_spacing(1), model.mode_spacing(2)};
    const std::array<int, 3> half{(model.cells[0] - 1) / 2, (model.cells[1] - 1) / 2,
                                  (model.cells[2] - 1) / 2};
    const double step = opt.max_cell_fraction * std::min({dk[0], dk[1], dk[2]}) / geom.k;
    const int n_lat = std::max(8, static_cast<int>(std::ceil((pi - geom.theta0) / step)));
    const int n_lon = std::max(16, static_cast<int>(std::ceil(2.0 * pi / step)));
    if (static_cast<long>(n_lat) * n_lon > opt.max_directions) {
        throw ResolutionError("mode identification needs " +
                                  std::to_string(static_cast<long>(n_lat) * n_lon) + " directions",
                              static_cast<std::size_t>(n_lat) * static_cast<std::size_t>(n_lon));
    }

    ModeSet out;
    out.n_modes_total = (model.n_cells() - 1) / 2;
    std::map<std::array<int, 3>, double> acc;
    const double dth = (pi - geom.theta0) / n_lat;
    const double dph = 2.0 * pi / n_lon;
    for (int b = 0; b < n_lat; ++b) {
        const double t_lo = geom.theta0 + b * dth;
        const double t_hi = t_lo + dth;
        const double th = 0.5 * (t_lo + t_hi);
        const double cell_omega = (std::cos(t_lo) - std::cos(t_hi)) * dph;
        out.sphere_solid_angle += cell_omega * n_lon;
        for (int l = 0; l < n_lon; ++l) {
            const double ph = (l + 0.5) * dph;
            const Vec3 dir{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
            const Vec3 kvec = momentum_transfer(geom.k, dir);
            std::array<int, 3> idx{};
            bool inside = true;
            for (int a = 0; a < 3; ++a) {
                idx[a] = static_cast<int>(std::lround(kvec[a] / dk[a]));
                inside = inside && std::abs(idx[a]) <= half[a];
            }
            if (!inside) {
                out.dropped_solid_angle += cell_omega;
            } else if (idx == std::array<int, 3>{0, 0, 0}) {
                out.zero_mode_solid_angle += cell_omega;
            } else {
                acc[detail::canonical_index(idx)] += cell_omega;
            }
        }
    }
    out.on_sphere.reserve(acc.size());
    for (const auto &[idx, omega] : acc) {
        out.on_sphere.push_back({idx, {idx[0] * dk[0], idx[1] * dk[1], idx[2] * dk[2]}, omega});
    }
    return out;
}

/**
 * Radial density of one mode amplitude. Two-dimensional modes use the radius
 * of (cos, sin) amplitudes with measure R dR; the K = 0 mode is
 * one-dimensional with an offset prior.
 */
struct ModePosterior {
    int dims{2};
    double prior_std{};    ///< per-quadrature prior rms
    double prior_center{}; ///< nonzero only for the K = 0 mode
    double coupling{};     ///< per-photon probability per unit R^2
    long n_sc{};
    long n_photons{};
    std::vector<double> radius;
    std::vector<double> density; ///< normalized so the trapezoid sum is 1

    [[nodiscard]] double moment(int p) const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < radius.size(); ++i) {
            const double h = radius[i + 1] - radius[i];
            s += 0.5 * h * (density[i] * std::pow(radius[i], p) + density[i + 1] * std::pow(radius[i + 1], p));
        }
        return s;
    }
    [[nodiscard]] double mass() const { return moment(0); }
    [[nodiscard]] double mean() const { return moment(1); }
    /// Radial standard deviation.
    [[nodiscard]] double rms_width() const {
        const double m1 = moment(1);
        return std::sqrt(std::max(0.0, moment(2) - m1 * m1));
    }
    /// rms of one quadrature, sqrt(<R^2>/dims) for an isotropic mode.
    [[nodiscard]] double quadrature_rms() const { return std::sqrt(moment(2) / dims); }
    /// Density at a point of the (cos, sin) plane.
    [[nodiscard]] double density_at(double x, double y) const {
        const double r = std::hypot(x, y);
        if (radius.empty() || r < radius.front() || r > radius.back()) {
            return 0.0;
        }
        auto it = std::upper_bound(radius.begin(), radius.end(), r);
        if (it == radius.end()) {
            return density.back();
        }
        const auto j = static_cast<std::size_t>(it - radius.begin());
        const double t = (r - radius[j - 1]) / (radius[j] - radius[j - 1]);
        return density[j - 1] + t * (density[j] - density[j - 1]);
    }
};

struct QuadratureOptions {
    int points{4096};
    double truncation_tolerance{1e-6};
    int max_extensions{12};
};

namespace detail {

inline double mode_log_density(const ModePosterior &p, double r) {
    const double s2 = p.prior_std * p.prior_std;
    double v = -(r - p.prior_center) * (r - p.prior_center) / (2.0 * s2);
    if (p.dims == 2) {
        v += std::log(r);
    }
    if (p.n_sc > 0) {
        v += static_cast<double>(p.n_sc) * std::log(r * r);
    }
    if (p.n_photons > p.n_sc) {
        const double q = 1.0 - p.coupling * r * r;
        if (!(q > 0.0)) {
            return -std::numeric_limits<double>::infinity();
        }
        v += static_cast<double>(p.n_photons - p.n_sc) * std::log(q);
    }
    return v;
}

/// Fills radius/density on [lo, hi] and normalizes.
inline void tabulate(ModePosterior &p, double lo, double hi, int points) {
    p.radius.resize(static_cast<std::size_t>(points));
    p.density.resize(static_cast<std::size_t>(points));
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double r = lo + (hi - lo) * i / (points - 1);
        p.radius[i] = r;
        logs[i] = (r == 0.0 && (p.dims == 2 || p.n_sc > 0)) ? -std::numeric_limits<double>::infinity()
                                                             : mode_log_density(p, r);
        peak = std::max(peak, logs[i]);
    }
    for (int i = 0; i < points; ++i) {
        p.density[i] = std::isfinite(logs[i]) ? std::exp(logs[i] - peak) : 0.0;
    }
    const double m = p.mass();
    if (!(m > 0.0)) {
        throw ResolutionError("mode posterior has no mass on its radial grid", static_cast<std::size_t>(points));
    }
    for (auto &d : p.density) {
        d /= m;
    }
}

/// Largest radius with coupling * R^2 < 1.
inline double coupling_limit(const ModePosterior &p) {
    return p.coupling > 0.0 && p.n_photons > p.n_sc ? 1.0 / std::sqrt(p.coupling)
                                                    : std::numeric_limits<double>::infinity();
}

inline void solve(ModePosterior &p, const QuadratureOptions &opt) {
    const int points = std::max(2048, opt.points);
    // Locate the peak on a coarse scan, then size the window from the
    // curvature scale of prior and likelihood.
    const double limit = coupling_limit(p);
    double hi = std::min(p.prior_center + 8.0 * p.prior_std, limit);
    if (p.n_sc > 0 && p.coupling > 0.0) {
        hi = std::min(std::max(hi, 2.0 * std::sqrt(static_cast<double>(p.n_sc) /
                                               (p.coupling * static_cast<double>(p.n_photons)))),
                      limit);
    }
    double lo = std::max(0.0, p.prior_center - 8.0 * p.prior_std);
    const double curvature = 1.0 / (p.prior_std * p.prior_std) +
                             4.0 * p.coupling * static_cast<double>(p.n_photons);
    const double width = 1.0 / std::sqrt(curvature);
    double best_r = lo;
    double best = -std::numeric_limits<double>::infinity();
    constexpr int scan = 4096;
    for (int i = 0; i <= scan; ++i) {
        const double r = lo + (hi - lo) * i / scan;
        if (r >= limit) {
            break;
        }
        const double v = mode_log_density(p, r);
        if (v > best) {
            best = v;
            best_r = r;
        }
    }
    double a = std::max(lo, best_r - 14.0 * width);
    double b = std::min(limit * (1.0 - 1e-12), best_r + 14.0 * width);
    for (int ext = 0;; ++ext) {
        tabulate(p, a, b, points);
        const double edge = 0.5 * (p.radius[1] - p.radius[0]);
        const double leak = (p.density.front() + p.density.back()) * edge * 8.0;
        if (leak <= opt.truncation_tolerance * 1e-3) {
            return;
        }
        if (ext >= opt.max_extensions) {
            throw ResolutionError("mode posterior leaks mass beyond its radial grid",
                                  static_cast<std::size_t>(points));
        }
        if (p.density.front() * edge * 8.0 > opt.truncation_tolerance * 1e-3) {
            a = std::max(0.0, a - 0.5 * (b - a));
        }
        if (p.density.back() * edge * 8.0 > opt.truncation_tolerance * 1e-3) {
            b = std::min(limit * (1.0 - 1e-12), b + 0.5 * (b - a));
        }
    }
}

} // namespace detail

/// Isotropic Gaussian prior of one nonzero mode, per-quadrature rms
/// sqrt(n_cell)/2.
inline ModePosterior initial_mode_distribution(double n_cell, const QuadratureOptions &opt = {}) {
    if (!(n_cell > 0.0)) {
        throw DomainError("n_cell must be positive");
    }
    ModePosterior p;
    p.dims = 2;
    p.prior_std = std::sqrt(n_cell) / 2.0;
    detail::solve(p, opt);
    return p;
}

/// Prior of the K = 0 amplitude sum(n_l)/sqrt(M): mean sqrt(M) n_cell/2,
/// rms sqrt(n_cell)/2.
inline ModePosterior initial_zero_mode_distribution(double n_cell, long n_cells,
                                                    const QuadratureOptions &opt = {}) {
    if (!(n_cell > 0.0) || n_cells < 1) {
        throw DomainError("n_cell and n_cells must be positive");
    }
    ModePosterior p;
    p.dims = 1;
    p.prior_std = std::sqrt(n_cell) / 2.0;
    p.prior_center = std::sqrt(static_cast<double>(n_cells)) * n_cell / 2.0;
    detail::solve(p, opt);
    return p;
}

/// Posterior after n_sc of n_photons photons scattered with per-photon
/// probability coupling * R^2. Updates compose: passing a posterior as the
/// prior accumulates counts.
inline ModePosterior mode_posterior_with_coupling(const ModePosterior &prior, long n_sc,
                                                  long n_photons, double coupling,
                                                  const QuadratureOptions &opt = {}) {
    if (n_sc < 0 || n_photons < 0 || n_sc > n_photons) {
        throw DomainError("mode_posterior needs 0 <= n_sc <= n_photons");
    }
    if (!(coupling >= 0.0)) {
        throw DomainError("coupling must be >= 0");
    }
    if (prior.n_photons > 0 && std::abs(prior.coupling - coupling) > 1e-12 * coupling) {
        throw ContractViolation("posterior updates must share the mode coupling");
    }
    ModePosterior p;
    p.dims = prior.dims;
    p.prior_std = prior.prior_std;
    p.prior_center = prior.prior_center;
    p.coupling = coupling;
    p.n_sc = prior.n_sc + n_sc;
    p.n_photons = prior.n_photons + n_photons;
    if (n_sc > 0 && coupling == 0.0) {
        throw InvalidJump("scattered photons on a mode with zero coupling");
    }
    detail::solve(p, opt);
    return p;
}

/// Per-photon coupling of a nonzero mode: g0^2 f^2 (M/2) dOmega.
[[nodiscard]] inline double mode_coupling(const BeamGeometry &geom, long n_cells, double delta_omega) {
    return geom.g0_sq() * geom.f * geom.f * 0.5 * static_cast<double>(n_cells) * delta_omega;
}

/// Per-photon coupling of the K = 0 mode: g0^2 f^2 M dOmega_0.
[[nodiscard]] inline double zero_mode_coupling(const BeamGeometry &geom, long n_cells,
                                               double delta_omega) {
    return geom.g0_sq() * geom.f * geom.f * static_cast<double>(n_cells) * delta_omega;
}

inline ModePosterior mode_posterior(const ModePosterior &prior, long n_sc, long n_photons,
                                    double g0, double f, long n_cells, double delta_omega,
                                    const QuadratureOptions &opt = {}) {
    return mode_posterior_with_coupling(prior, n_sc, n_photons,
                                        g0 * g0 * f * f * 0.5 * static_cast<double>(n_cells) * delta_omega,
                                        opt);
}

/// Gaussian width estimate 1/sqrt(dOmega (M/2) g0^2 f^2 Np) of a mode.
[[nodiscard]] inline double mode_width_estimate(const BeamGeometry &geom, long n_cells,
                                                double delta_omega, double n_photons) {
    return 1.0 / std::sqrt(mode_coupling(geom, n_cells, delta_omega) * n_photons);
}

struct ScatterCounts {
    std::vector<long> per_mode; ///< aligned with ModeSet::on_sphere
    long zero_mode{};
};

/// Binomial draws of the scattered-photon count of every mode, at the prior
/// mean of R^2. Draws are taken in mode order from one stream.
inline ScatterCounts sample_scatter_counts(const DenseCloudModel &model, const ModeSet &modes,
                                           const BeamGeometry &geom, long n_photons,
                                           std::uint64_t seed) {
    if (n_photons < 0) {
        throw DomainError("n_photons must be >= 0");
    }
    RandomStream rng(seed);
    const long m = model.n_cells();
    const double r2_prior = model.n_cell / 2.0;
    auto draw = [&](double p) -> long {
        if (!(p < 1.0)) {
            throw ValidityError("per-photon mode scattering probability " + std::to_string(p) + " >= 1");
        }
        const double u = rng.uniform();
        if (p <= 0.0 || n_photons == 0) {
            return 0;
        }
        boost::math::binomial_distribution<double> dist(static_cast<double>(n_photons), p);
        return static_cast<long>(boost::math::quantile(dist, u));
    };
    ScatterCounts out;
    out.per_mode.reserve(modes.on_sphere.size());
    for (const auto &mode : modes.on_sphere) {
        out.per_mode.push_back(draw(mode_coupling(geom, m, mode.delta_omega) * r2_prior));
    }
    const double center = std::sqrt(static_cast<double>(m)) * model.n_cell / 2.0;
    const double zero_r2 = center * center + model.n_cell / 4.0;
    out.zero_mode = draw(zero_mode_coupling(geom, m, modes.zero_mode_solid_angle) * zero_r2);
    return out;
}

/// Scattered counts at their expectation, rounded.
inline ScatterCounts expected_scatter_counts(const DenseCloudModel &model, const ModeSet &modes,
                                             const BeamGeometry &geom, long n_photons) {
    const long m = model.n_cells();
    ScatterCounts out;
    for (const auto &mode : modes.on_sphere) {
        out.per_mode.push_back(std::lround(n_photons * mode_coupling(geom, m, mode.delta_omega) *
                                           model.n_cell / 2.0));
    }
    const double center = std::sqrt(static_cast<double>(m)) * model.n_cell / 2.0;
    out.zero_mode = std::lround(n_photons * zero_mode_coupling(geom, m, modes.zero_mode_solid_angle) *
                                (center * center + model.n_cell / 4.0));
    return out;
}

enum class WidthSource { GaussianEstimate, Quadrature };

struct DenseResult {
    double delta_n1{};          ///< per-cell rms width in n_a
    double jx_estimate{};
    double xi{};
    double n0_width{};          ///< width of the total n_a
    double scattering_sum{};    ///< sum over on-sphere modes of 1/(M dN_i^2)
    double scattering_closed_form{}; ///< 2 pi g0^2 f^2 Np
    double interferometer_term{};
    double off_sphere_term{};
    double fitted_exponent{};   ///< -ln(2 Jx / N) / (g0^2 f^2 Np)
};

/**
 * Combines interferometer, forward and per-mode information into the width
 * of one cell's n_a and the resulting mean spin. Each mode adds its
 * information gain 1/(M dN^2) on top of its prior share 8/(M n_cell).
 */
inline DenseResult combine_widths(const DenseCloudModel &model, const ModeSet &modes,
                                  const BeamGeometry &geom, long n_photons,
                                  double interferometer_width, WidthSource source,
                                  const std::optional<ScatterCounts> &counts = std::nullopt,
                                  const QuadratureOptions &opt = {}) {
    if (n_photons < 0) {
        throw DomainError("n_photons must be >= 0");
    }
    const double m = static_cast<double>(model.n_cells());
    const double n = model.n_cell;
    const double np = static_cast<double>(n_photons);
    const double prior_share = 8.0 / (m * n);

    DenseResult r;
    r.interferometer_term = std::isfinite(interferometer_width) && interferometer_width > 0.0
                                ? 1.0 / (interferometer_width * interferometer_width)
                                : 0.0;
    r.off_sphere_term = static_cast<double>(modes.n_off_sphere()) * prior_share;
    r.scattering_closed_form = 2.0 * std::numbers::pi * geom.g0_sq() * geom.f * geom.f * np;

    double zero_gain = 0.0;
    std::vector<double> gains;
    gains.reserve(modes.on_sphere.size());
    if (source == WidthSource::GaussianEstimate) {
        for (const auto &mode : modes.on_sphere) {
            gains.push_back(mode_coupling(geom, model.n_cells(), mode.delta_omega) * np / m);
        }
        zero_gain = zero_mode_coupling(geom, model.n_cells(), modes.zero_mode_solid_angle) * np / m;
    } else {
        const ScatterCounts c = counts ? *counts : expected_scatter_counts(model, modes, geom, n_photons);
        if (c.per_mode.size() != modes.on_sphere.size()) {
            throw ContractViolation("scatter counts do not match the mode list");
        }
        const ModePosterior prior = initial_mode_distribution(n, opt);
        const double prior_prec = 1.0 / std::pow(prior.rms_width(), 2);
        for (std::size_t i = 0; i < modes.on_sphere.size(); ++i) {
            const double cpl = mode_coupling(geom, model.n_cells(), modes.on_sphere[i].delta_omega);
            const ModePosterior post = mode_posterior_with_coupling(prior, c.per_mode[i], n_photons, cpl, opt);
            gains.push_back((1.0 / std::pow(post.rms_width(), 2) - prior_prec) / m);
        }
        const double c0 = zero_mode_coupling(geom, model.n_cells(), modes.zero_mode_solid_angle);
        if (c0 > 0.0) {
            const ModePosterior zprior = initial_zero_mode_distribution(n, model.n_cells(), opt);
            const ModePosterior zpost = mode_posterior_with_coupling(zprior, c.zero_mode, n_photons, c0, opt);
            zero_gain = (1.0 / std::pow(zpost.rms_width(), 2) - 1.0 / std::pow(zprior.rms_width(), 2)) / m;
        }
    }

    // ascending-order sum
    std::sort(gains.begin(), gains.end());
    for (double g : gains) {
        r.scattering_sum += g;
    }

    const double on_prior = static_cast<double>(modes.on_sphere.size()) * prior_share;
    const double zero_term = 4.0 / (m * n) + r.interferometer_term + zero_gain;
    const double inv_var = zero_term + r.scattering_sum + on_prior + r.off_sphere_term;
    r.delta_n1 = 1.0 / std::sqrt(inv_var);
    const double n_atoms = model.n_atoms();
    r.jx_estimate = 0.5 * n_atoms * std::exp(-inv_var / 8.0);
    r.n0_width = 1.0 / std::sqrt(4.0 / (m * n) + r.interferometer_term + zero_gain);
    r.xi = r.jx_estimate > 0.0 ? std::sqrt(n_atoms) * r.n0_width / r.jx_estimate
                               : std::numeric_limits<double>::infinity();
    const double s = geom.g0_sq() * geom.f * geom.f * np;
    r.fitted_exponent = s > 0.0 ? -std::log(2.0 * r.jx_estimate / n_atoms) / s
                                : std::numeric_limits<double>::quiet_NaN();
    return r;
}

} // namespace qnd
