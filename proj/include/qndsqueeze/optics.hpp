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
 * Beam geometry, cloud geometry, Born scattering amplitudes and the
 * discretized detection sphere.
 *
 * Lengths are in units of 1/k (lambda/2pi when k = 1). The incident beam
 * travels along +z and the detection sphere has its poles on the beam axis.
 */

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "random.hpp"
#include "spin_state.hpp"

namespace qnd {

using Vec3 = std::array<double, 3>;

[[nodiscard]] inline double dot(const Vec3 &a, const Vec3 &b) noexcept {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

[[nodiscard]] inline double length(const Vec3 &a) noexcept {
    return std::sqrt(dot(a, a));
}

/// Upper bound on the single-atom scattering probability accepted as weak.
inline constexpr double max_single_atom_scattering = 0.1;

struct BeamGeometry {
    double k{1.0};      ///< wavenumber
    double theta0{};    ///< focusing half-angle [rad]
    double f{};         ///< isotropic scattering amplitude [1/k]
    double phi{};       ///< interferometer phase offset [rad]

    /// Probability amplitude per unit area at the mode center.
    [[nodiscard]] double g0() const noexcept {
        return k * theta0 / (2.0 * std::sqrt(std::numbers::pi));
    }
    [[nodiscard]] double g0_sq() const noexcept { return g0() * g0(); }

    /// Scattering probability of one |a> atom outside the forward cap.
    [[nodiscard]] double sigma1() const noexcept {
        return 2.0 * std::numbers::pi * f * f * g0_sq() * (1.0 + std::cos(theta0));
    }

    /// Phase per |a> atom acquired by the transmitted mode, 2 pi f g0^2 / k.
    [[nodiscard]] double phase_per_atom() const noexcept {
        return 2.0 * std::numbers::pi * f * g0_sq() / k;
    }

    /// Every violated physical guard, empty when the geometry is usable.
    [[nodiscard]] std::vector<std::string> violations() const {
        std::vector<std::string> v;
        if (!(k > 0.0)) {
            v.emplace_back("k must be positive");
        }
        if (!(theta0 > 0.0 && theta0 < 0.5 * std::numbers::pi)) {
            v.emplace_back("theta0 must lie in (0, pi/2)");
        }
        if (!(f >= 0.0) || !std::isfinite(f)) {
            v.emplace_back("f must be a finite non-negative amplitude");
        }
        if (!std::isfinite(phi)) {
            v.emplace_back("phi must be finite");
        }
        if (v.empty() && !(sigma1() < max_single_atom_scattering)) {
            v.emplace_back("single-atom scattering probability sigma1=" +
                           std::to_string(sigma1()) + " must be < " +
                           std::to_string(max_single_atom_scattering));
        }
        return v;
    }
};

struct AtomCloud {
    std::vector<Vec3> positions;

    [[nodiscard]] int n_atoms() const noexcept {
        return static_cast<int>(positions.size());
    }
};

enum class CloudLaw { Point, Gaussian, Box };

struct CloudSpec {
    CloudLaw law{CloudLaw::Point};
    double rms{};          ///< per-axis rms for Gaussian
    Vec3 box{0.0, 0.0, 0.0}; ///< edge lengths for Box

    /// Length scale X that sets the sphere-grid resolution.
    [[nodiscard]] double scale() const noexcept {
        switch (law) {
        case CloudLaw::Gaussian:
            return rms;
        case CloudLaw::Box:
            return std::max({box[0], box[1], box[2]}) / std::sqrt(12.0);
        case CloudLaw::Point:
            break;
        }
        return 0.0;
    }
};

inline AtomCloud sample_cloud(const CloudSpec &spec, int n_atoms,
                              RandomStream &rng) {
    AtomCloud cloud;
    cloud.positions.resize(static_cast<std::size_t>(n_atoms), Vec3{0.0, 0.0, 0.0});
    for (auto &r : cloud.positions) {
        for (int a = 0; a < 3; ++a) {
            switch (spec.law) {
            case CloudLaw::Gaussian:
                r[a] = spec.rms * rng.normal();
                break;
            case CloudLaw::Box:
                r[a] = spec.box[a] * (rng.uniform() - 0.5);
                break;
            case CloudLaw::Point:
                break;
            }
        }
    }
    return cloud;
}

/// First Born amplitude f * sum_{i in |a>} exp(i dk.r_i).
inline Complex born_amplitude(const AtomCloud &cloud, ConfigMask mask,
                              const Vec3 &delta_k, double f) {
    Complex sum{};
    for (int i = 0; i < cloud.n_atoms(); ++i) {
        if (mask & (ConfigMask{1} << i)) {
            sum += std::polar(1.0, dot(delta_k, cloud.positions[i]));
        }
    }
    return f * sum;
}

/// Transmitted-mode factor sqrt(1 - sigma) exp(i (2pi/k) f n_a g0^2).
inline Complex forward_amplitude(const BeamGeometry &geom, int n_a,
                                 double sigma_scatt) {
    if (!(sigma_scatt < 1.0)) {
        throw ValidityError("scattering probability " +
                            std::to_string(sigma_scatt) +
                            " >= 1 leaves the Born regime");
    }
    if (sigma_scatt < 0.0) {
        throw DomainError("negative scattering probability");
    }
    return std::sqrt(1.0 - sigma_scatt) *
           std::polar(1.0, geom.phase_per_atom() * n_a);
}

struct SphereCell {
    Vec3 direction;     ///< unit vector Omega
    double solid_angle; ///< delta Omega
    double theta;
    double phi;
};

struct SphereGrid {
    double theta0{};
    int n_lat{};
    int n_lon{};
    std::vector<SphereCell> cells;

    [[nodiscard]] std::size_t size() const noexcept { return cells.size(); }
    [[nodiscard]] double total_solid_angle() const noexcept {
        double s = 0.0;
        for (const auto &c : cells) {
            s += c.solid_angle;
        }
        return s;
    }
};

struct GridOptions {
    int min_lat{16};
    int min_lon{32};
    int refine{1};                 ///< multiplies both band counts
    std::size_t min_cells{0};      ///< raise resolution until reached
    std::size_t max_cells{200000}; ///< hard cap
};

/// Largest cell angular size allowed for a cloud of size `cloud_scale`.
[[nodiscard]] inline double max_cell_angle(double k, double cloud_scale) {
    const double floor_angle = std::numbers::pi / 16.0;
    if (cloud_scale <= 0.0) {
        return floor_angle;
    }
    return std::min(0.25 / (k * cloud_scale), floor_angle);
}

/// Latitude/longitude grid over theta in [theta0, pi]. Each band's solid
/// angle is exact, so the total is 2 pi (1 + cos theta0) up to rounding.
inline SphereGrid build_sphere_grid(double k, double theta0, double cloud_scale,
                                    const GridOptions &opt = {}) {
    if (cloud_scale < 0.0) {
        throw DomainError("cloud scale must be >= 0");
    }
    if (!(theta0 >= 0.0 && theta0 < std::numbers::pi)) {
        throw DomainError("theta0 must lie in [0, pi)");
    }
    const double d = max_cell_angle(k, cloud_scale);
    const double span = std::numbers::pi - theta0;
    auto n_lat = std::max<std::size_t>(opt.min_lat, static_cast<std::size_t>(std::ceil(span / d)));
    auto n_lon = std::max<std::size_t>(opt.min_lon,
                                       static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / d)));
    n_lat *= static_cast<std::size_t>(std::max(1, opt.refine));
    n_lon *= static_cast<std::size_t>(std::max(1, opt.refine));
    if (opt.min_cells > n_lat * n_lon) {
        const double s = std::sqrt(static_cast<double>(opt.min_cells) /
                                   static_cast<double>(n_lat * n_lon));
        n_lat = static_cast<std::size_t>(std::ceil(n_lat * s));
        n_lon = static_cast<std::size_t>(std::ceil(n_lon * s));
    }
    const std::size_t total = n_lat * n_lon;
    if (total > opt.max_cells) {
        throw ResolutionError("sphere grid needs " + std::to_string(total) +
                                  " cells, cap is " + std::to_string(opt.max_cells),
                              total);
    }

    SphereGrid grid;
    grid.theta0 = theta0;
    grid.n_lat = static_cast<int>(n_lat);
    grid.n_lon = static_cast<int>(n_lon);
    grid.cells.reserve(total);
    const double dth = span / static_cast<double>(n_lat);
    const double dph = 2.0 * std::numbers::pi / static_cast<double>(n_lon);
    for (std::size_t b = 0; b < n_lat; ++b) {
        const double lo = theta0 + dth * static_cast<double>(b);
        const double hi = (b + 1 == n_lat) ? std::numbers::pi : lo + dth;
        const double th = 0.5 * (lo + hi);
        const double band = dph * (std::cos(lo) - std::cos(hi));
        for (std::size_t j = 0; j < n_lon; ++j) {
            const double ph = dph * (static_cast<double>(j) + 0.5);
            grid.cells.push_back({{std::sin(th) * std::cos(ph),
                                   std::sin(th) * std::sin(ph), std::cos(th)},
                                  band,
                                  th,
                                  ph});
        }
    }
    return grid;
}

/// Momentum transfer k (Omega - z) for an outgoing direction.
[[nodiscard]] inline Vec3 momentum_transfer(double k, const Vec3 &dir) noexcept {
    return {k * dir[0], k * dir[1], k * (dir[2] - 1.0)};
}

/// Continuum integral over theta > theta0 of exp(i dk(Omega).d) dOmega.
/// The azimuthal integral is done analytically (Bessel J0), the polar one
/// by adaptive Gauss-Kronrod in u = cos(theta).
inline Complex pair_scattering_integral(double k, double theta0, const Vec3 &d) {
    const double dperp = std::hypot(d[0], d[1]);
    const double dz = d[2];
    const double u_max = std::cos(theta0);
    if (dperp == 0.0 && dz == 0.0) {
        return {2.0 * std::numbers::pi * (1.0 + u_max), 0.0};
    }
    using boost::math::quadrature::gauss_kronrod;
    auto j0 = [&](double u) {
        const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
        return std::cyl_bessel_j(0.0, k * dperp * s);
    };
    auto re = [&](double u) { return j0(u) * std::cos(k * dz * (u - 1.0)); };
    auto im = [&](double u) { return j0(u) * std::sin(k * dz * (u - 1.0)); };
    // Split the range so each piece holds a bounded number of oscillations.
    const double osc = k * (dperp + std::abs(dz)) * (1.0 + u_max) / std::numbers::pi;
    const int pieces = 1 + static_cast<int>(osc / 4.0);
    double sr = 0.0, si = 0.0;
    for (int p = 0; p < pieces; ++p) {
        const double a = -1.0 + (1.0 + u_max) * p / pieces;
        const double b = -1.0 + (1.0 + u_max) * (p + 1) / pieces;
        sr += gauss_kronrod<double, 61>::integrate(re, a, b, 12, 1e-13);
        si += gauss_kronrod<double, 61>::integrate(im, a, b, 12, 1e-13);
    }
    return {2.0 * std::numbers::pi * sr, 2.0 * std::numbers::pi * si};
}

/**
 * Precomputed |f_eps(Omega)|^2 for every configuration and every sphere
 * cell, stored cell-major so a population vector contracts against one
 * contiguous row per cell.
 *
 * `sigma_grid` is the scattering probability summed over the grid;
 * `sigma_continuum` is the same quantity from the continuum pair integrals and
 * feeds the transmitted-mode amplitude. Their difference is the
 * discretization defect of the event probabilities.
 */
class ScatterTable {
  public:
    ScatterTable() = default;

    [[nodiscard]] int n_atoms() const noexcept { return n_atoms_; }
    [[nodiscard]] std::size_t n_configs() const noexcept { return n_configs_; }
    [[nodiscard]] std::size_t n_cells() const noexcept { return n_cells_; }

    [[nodiscard]] double amplitude_sq(ConfigMask mask, std::size_t cell) const {
        return amp2_[cell * n_configs_ + mask];
    }
    [[nodiscard]] std::span<const double> cell_row(std::size_t cell) const {
        return {amp2_.data() + cell * n_configs_, n_configs_};
    }
    [[nodiscard]] std::span<const double> sigma_grid() const noexcept {
        return sigma_grid_;
    }
    [[nodiscard]] std::span<const double> sigma_continuum() const noexcept {
        return sigma_continuum_;
    }
    /// max_eps |sigma_grid - sigma_continuum| / 2, an upper bound on the
    /// probability defect for any state.
    [[nodiscard]] double defect_bound() const noexcept {
        double m = 0.0;
        for (std::size_t e = 0; e < n_configs_; ++e) {
            m = std::max(m, std::abs(sigma_grid_[e] - sigma_continuum_[e]));
        }
        return 0.5 * m;
    }

    friend ScatterTable build_scatter_table(const AtomCloud &, const BeamGeometry &,
                                            const SphereGrid &, std::size_t);

  private:
    int n_atoms_{};
    std::size_t n_configs_{};
    std::size_t n_cells_{};
    std::vector<double> amp2_;
    std::vector<double> sigma_grid_;
    std::vector<double> sigma_continuum_;
};

/// Coherent sums sum_{i in mask} w_i for every mask, by lowest-bit recursion.
template <class T>
void subset_sums(std::span<const T> per_atom, std::span<T> out) {
    out[0] = T{};
    for (std::size_t m = 1; m < out.size(); ++m) {
        const std::size_t low = static_cast<std::size_t>(std::countr_zero(m));
        out[m] = out[m & (m - 1)] + per_atom[low];
    }
}

/// f_eps(Omega) * g0 for every configuration, for one outgoing direction.
inline std::vector<Complex> scattering_amplitudes(const AtomCloud &cloud,
                                                  const BeamGeometry &geom,
                                                  const Vec3 &direction) {
    const Vec3 dk = momentum_transfer(geom.k, direction);
    std::vector<Complex> phases(cloud.positions.size());
    const double scale = geom.f * geom.g0();
    for (std::size_t i = 0; i < phases.size(); ++i) {
        phases[i] = scale * std::polar(1.0, dot(dk, cloud.positions[i]));
    }
    std::vector<Complex> out(std::size_t{1} << cloud.n_atoms());
    subset_sums<Complex>(phases, out);
    return out;
}

inline constexpr std::size_t default_max_table_entries = std::size_t{1} << 26;

inline ScatterTable build_scatter_table(const AtomCloud &cloud,
                                        const BeamGeometry &geom,
                                        const SphereGrid &grid,
                                        std::size_t max_entries = default_max_table_entries) {
    const int n = cloud.n_atoms();
    if (n < 1 || n > max_atoms) {
        throw CapacityError("scatter table supports 1.." + std::to_string(max_atoms) + " atoms");
    }
    const std::size_t n_cfg = std::size_t{1} << n;
    const std::size_t entries = n_cfg * grid.size();
    if (entries > max_entries) {
        throw ResolutionError("scatter table needs " + std::to_string(entries) +
                                  " entries, cap is " + std::to_string(max_entries),
                              entries);
    }

    ScatterTable t;
    t.n_atoms_ = n;
    t.n_configs_ = n_cfg;
    t.n_cells_ = grid.size();
    t.amp2_.resize(entries);
    t.sigma_grid_.assign(n_cfg, 0.0);

    const double f2 = geom.f * geom.f;
    const double g2 = geom.g0_sq();
    std::vector<Complex> phases(static_cast<std::size_t>(n));
    std::vector<Complex> sums(n_cfg);
    for (std::size_t c = 0; c < grid.size(); ++c) {
        const Vec3 dk = momentum_transfer(geom.k, grid.cells[c].direction);
        for (int i = 0; i < n; ++i) {
            phases[i] = std::polar(1.0, dot(dk, cloud.positions[i]));
        }
        subset_sums<Complex>(phases, sums);
        double *row = t.amp2_.data() + c * n_cfg;
        const double w = g2 * grid.cells[c].solid_angle;
        for (std::size_t m = 0; m < n_cfg; ++m) {
            row[m] = f2 * std::norm(sums[m]);
            t.sigma_grid_[m] += row[m] * w;
        }
    }

    // Continuum reference from pairwise integrals; sigma(mask) is a quadratic
    // form in the occupation vector and is accumulated by lowest-bit recursion.
    std::vector<double> pair(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const Vec3 d{cloud.positions[i][0] - cloud.positions[j][0],
                         cloud.positions[i][1] - cloud.positions[j][1],
                         cloud.positions[i][2] - cloud.positions[j][2]};
            const double v = pair_scattering_integral(geom.k, grid.theta0, d).real();
            pair[i * n + j] = v;
            pair[j * n + i] = v;
        }
    }
    t.sigma_continuum_.assign(n_cfg, 0.0);
    for (std::size_t m = 1; m < n_cfg; ++m) {
        const auto low = static_cast<std::size_t>(std::countr_zero(m));
        const std::size_t rest = m & (m - 1);
        double cross = 0.0;
        for (int j = 0; j < n; ++j) {
            if (rest & (std::size_t{1} << j)) {
                cross += pair[low * n + j];
            }
        }
        t.sigma_continuum_[m] =
            t.sigma_continuum_[rest] + f2 * g2 * (pair[low * n + low] + 2.0 * cross);
    }
    return t;
}

} // namespace qnd
