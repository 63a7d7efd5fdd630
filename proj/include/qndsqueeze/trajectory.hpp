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
 * Quantum-jump Monte Carlo for photons sent one at a time through the
 * interferometer arm that holds the cloud.
 *
 * Each photon ends in one of: detector 1, detector 2, or a scattering cell
 * of the detection sphere. The event is drawn with one uniform deviate by
 * inverse CDF over that ordered list; the state is multiplied by the event
 * amplitude, renormalized, and (optionally) counter-rotated about z to undo
 * the light shift.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "optics.hpp"
#include "random.hpp"
#include "spin_state.hpp"

namespace qnd {

enum class EventKind : std::uint8_t { Detector1, Detector2, Scattered };

struct DetectionEvent {
    EventKind kind{EventKind::Detector1};
    std::uint32_t cell{}; ///< meaningful for Scattered only

    friend bool operator==(const DetectionEvent &, const DetectionEvent &) = default;
};

struct TrajectoryOptions {
    bool scattering{true};               ///< false: no loss, no cell events
    bool light_shift_compensation{true};
    int record_every{1};
    double consistency_tolerance{1e-3};  ///< max |sum p - 1| accepted
};

/**
 * Everything about one experiment that does not depend on the atomic state:
 * geometry, the cloud, its scatter table and the per-configuration detector
 * amplitudes.
 */
class PhotonModel {
  public:
    PhotonModel(BeamGeometry geom, AtomCloud cloud, SphereGrid grid,
                const TrajectoryOptions &opt = {},
                std::size_t max_table_entries = default_max_table_entries)
        : geom_(geom), cloud_(std::move(cloud)), grid_(std::move(grid)),
          scattering_(opt.scattering), tolerance_(opt.consistency_tolerance) {
        if (auto v = geom_.violations(); !v.empty()) {
            throw ValidityError(v.front());
        }
        const int n = cloud_.n_atoms();
        if (n < 1 || n > max_atoms) {
            throw CapacityError("cloud must hold 1.." + std::to_string(max_atoms) + " atoms");
        }
        n_configs_ = std::size_t{1} << n;
        if (scattering_) {
            table_ = build_scatter_table(cloud_, geom_, grid_, max_table_entries);
        }
        d1_.resize(n_configs_);
        d2_.resize(n_configs_);
        w1_.resize(n_configs_);
        w2_.resize(n_configs_);
        ws_.assign(n_configs_, 0.0);
        const Complex e_plus = std::polar(1.0, geom_.phi);
        const Complex e_minus = std::polar(1.0, -geom_.phi);
        for (std::size_t m = 0; m < n_configs_; ++m) {
            const int na = count_a(static_cast<ConfigMask>(m));
            double sig = 0.0;
            if (scattering_) {
                sig = table_.sigma_continuum()[m];
                ws_[m] = 0.5 * table_.sigma_grid()[m];
            }
            const Complex fwd = forward_amplitude(geom_, na, sig);
            d1_[m] = 0.5 * (e_plus + e_minus * fwd);
            d2_[m] = 0.5 * (e_plus - e_minus * fwd);
            w1_[m] = std::norm(d1_[m]);
            w2_[m] = std::norm(d2_[m]);
        }
        light_shift_.resize(static_cast<std::size_t>(n) + 1);
        for (int na = 0; na <= n; ++na) {
            light_shift_[na] = std::polar(1.0, -0.5 * geom_.phase_per_atom() * na);
        }
    }

    [[nodiscard]] const BeamGeometry &geometry() const noexcept { return geom_; }
    [[nodiscard]] const AtomCloud &cloud() const noexcept { return cloud_; }
    [[nodiscard]] const SphereGrid &grid() const noexcept { return grid_; }
    [[nodiscard]] const ScatterTable &table() const noexcept { return table_; }
    [[nodiscard]] bool scattering() const noexcept { return scattering_; }
    [[nodiscard]] int n_atoms() const noexcept { return cloud_.n_atoms(); }
    [[nodiscard]] double tolerance() const noexcept { return tolerance_; }

    [[nodiscard]] const Complex &detector1_factor(std::size_t m) const { return d1_[m]; }
    [[nodiscard]] const Complex &detector2_factor(std::size_t m) const { return d2_[m]; }
    [[nodiscard]] std::span<const double> detector1_weight() const { return w1_; }
    [[nodiscard]] std::span<const double> detector2_weight() const { return w2_; }
    /// Per-configuration total scattering probability, sigma_grid / 2.
    [[nodiscard]] std::span<const double> scatter_weight() const { return ws_; }
    [[nodiscard]] const Complex &light_shift_factor(int na) const { return light_shift_[na]; }

    /// Probability of a Scattered(cell) event for populations `pops`.
    [[nodiscard]] double cell_probability(std::span<const double> pops, std::size_t cell) const {
        const auto row = table_.cell_row(cell);
        double s = 0.0;
        for (std::size_t m = 0; m < n_configs_; ++m) {
            s += pops[m] * row[m];
        }
        return 0.5 * geom_.g0_sq() * grid_.cells[cell].solid_angle * s;
    }

  private:
    BeamGeometry geom_;
    AtomCloud cloud_;
    SphereGrid grid_;
    bool scattering_;
    double tolerance_;
    std::size_t n_configs_{};
    ScatterTable table_;
    std::vector<Complex> d1_, d2_;
    std::vector<double> w1_, w2_, ws_;
    std::vector<Complex> light_shift_;
};

struct EventProbabilities {
    double detector1{};
    double detector2{};
    std::vector<double> cells; ///< grid order
    double scattered{};        ///< sum over cells
    [[nodiscard]] double total() const noexcept { return detector1 + detector2 + scattered; }
    [[nodiscard]] double defect() const noexcept { return std::abs(total() - 1.0); }
};

namespace detail {

inline std::vector<double> populations(const QuantumState &s) {
    std::vector<double> p(s.size());
    for (std::size_t m = 0; m < s.size(); ++m) {
        p[m] = std::norm(s[m]);
    }
    return p;
}

inline void check_consistency(double total, double tol, long photon = -1) {
    if (std::abs(total - 1.0) > tol) {
        throw ConsistencyError((photon >= 0 ? "photon " + std::to_string(photon) + ": " : std::string{}) +
                               "event probabilities sum to " + std::to_string(total) +
                               " (tolerance " + std::to_string(tol) +
                               "); sigma1 too large or grid too coarse");
    }
}

} // namespace detail

/// Raw (not renormalized) probabilities of every event for the next photon.
inline EventProbabilities photon_probabilities(const QuantumState &state,
                                               const PhotonModel &model) {
    if (std::abs(state.norm_squared() - 1.0) > 1e-6) {
        throw ContractViolation("photon_probabilities needs a normalized state");
    }
    const auto pops = detail::populations(state);
    EventProbabilities p;
    const auto w1 = model.detector1_weight();
    const auto w2 = model.detector2_weight();
    for (std::size_t m = 0; m < pops.size(); ++m) {
        p.detector1 += pops[m] * w1[m];
        p.detector2 += pops[m] * w2[m];
    }
    if (model.scattering()) {
        p.cells.resize(model.grid().size());
        for (std::size_t c = 0; c < p.cells.size(); ++c) {
            p.cells[c] = model.cell_probability(pops, c);
            p.scattered += p.cells[c];
        }
    }
    detail::check_consistency(p.total(), model.tolerance());
    return p;
}

/// Multiplies the amplitudes by the event's projection and renormalizes.
inline void apply_jump(QuantumState &state, const DetectionEvent &event,
                       const PhotonModel &model) {
    auto amps = state.amplitudes();
    switch (event.kind) {
    case EventKind::Detector1:
        for (std::size_t m = 0; m < amps.size(); ++m) {
            amps[m] *= model.detector1_factor(m);
        }
        break;
    case EventKind::Detector2:
        for (std::size_t m = 0; m < amps.size(); ++m) {
            amps[m] *= model.detector2_factor(m);
        }
        break;
    case EventKind::Scattered: {
        if (!model.scattering() || event.cell >= model.grid().size()) {
            throw InvalidJump("scattering cell " + std::to_string(event.cell) + " is not available");
        }
        const auto f = scattering_amplitudes(model.cloud(), model.geometry(),
                                             model.grid().cells[event.cell].direction);
        for (std::size_t m = 0; m < amps.size(); ++m) {
            amps[m] *= f[m];
        }
        break;
    }
    }
    const double n2 = state.norm_squared();
    if (!(n2 > 0.0)) {
        throw InvalidJump("jump onto an event of zero probability");
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto &c : amps) {
        c *= inv;
    }
}

/// Rotation about z that undoes the per-photon light shift; `sign` = -1
/// applies the inverse.
inline void compensate_light_shift(QuantumState &state, const BeamGeometry &geom,
                                   int sign = +1) {
    const double step = -sign * std::numbers::pi * geom.f * geom.g0_sq() / geom.k;
    std::vector<Complex> factor(static_cast<std::size_t>(state.n_atoms()) + 1);
    for (std::size_t na = 0; na < factor.size(); ++na) {
        factor[na] = std::polar(1.0, step * static_cast<double>(na));
    }
    auto amps = state.amplitudes();
    for (std::size_t m = 0; m < amps.size(); ++m) {
        amps[m] *= factor[count_a(static_cast<ConfigMask>(m))];
    }
}

/**
 * Population estimate from the interferometer counts alone: solves
 * cos^2(phi - pi g0^2 (f/k) n) = N1/Np over every branch and returns the
 * solution closest to N/2, as Jz_calc = n - N/2.
 */
inline double jz_estimator(long n1, long n_photons, const BeamGeometry &geom, int n_atoms) {
    if (n_photons < 1 || n1 < 0 || n1 > n_photons) {
        throw DomainError("jz_estimator needs 0 <= n1 <= n_photons, n_photons >= 1");
    }
    const double x = std::numbers::pi * geom.g0_sq() * geom.f / geom.k;
    if (x == 0.0) {
        throw AmbiguityError("interferometer carries no information for f = 0");
    }
    const double half = 0.5 * n_atoms;
    const double alpha = std::acos(std::sqrt(static_cast<double>(n1) / static_cast<double>(n_photons)));
    double best = std::numeric_limits<double>::infinity();
    for (double s : {1.0, -1.0}) {
        const double base = geom.phi - s * alpha;
        const double m0 = std::round((base - x * half) / std::numbers::pi);
        for (double m = m0 - 1.0; m <= m0 + 1.0; m += 1.0) {
            const double n = (base - m * std::numbers::pi) / x;
            if (std::abs(n - half) < std::abs(best - half)) {
                best = n;
            }
        }
    }
    const double window = 3.0 * std::sqrt(static_cast<double>(n_atoms)) / 2.0;
    if (!(std::abs(best - half) <= window)) {
        throw AmbiguityError("no population solution within " + std::to_string(window) +
                             " of N/2 (nearest n_a=" + std::to_string(best) + ")");
    }
    return best - half;
}

struct RecordedStep {
    long photon_index{};
    SpinObservables obs;
    long n1{}, n2{}, n_scatt{};
    double jz_calc{std::numeric_limits<double>::quiet_NaN()}; ///< NaN if ambiguous
    /// <(Jz - Jz_calc)^2> in this state; NaN when jz_calc is.
    double calc_mse{std::numeric_limits<double>::quiet_NaN()};
};

struct TrajectoryRecord {
    std::uint64_t seed{};
    std::vector<RecordedStep> steps;
    std::vector<DetectionEvent> events;
    long n1{}, n2{}, n_scatt{};
    double max_probability_defect{};
    long first_scatter{-1}; ///< photon index of the first Scattered event
    QuantumState final_state = QuantumState::uniform_superposition(1);
};

namespace detail {

inline RecordedStep record(const QuantumState &s, const BeamGeometry &geom, long index,
                           long n1, long n2, long ns) {
    RecordedStep st;
    st.photon_index = index;
    st.obs = observables(s);
    st.n1 = n1;
    st.n2 = n2;
    st.n_scatt = ns;
    if (n1 + n2 > 0) {
        try {
            st.jz_calc = jz_estimator(n1, n1 + n2, geom, s.n_atoms());
            const double d = st.obs.jz_mean - st.jz_calc;
            st.calc_mse = st.obs.jz_var + d * d;
        } catch (const AmbiguityError &) {
        }
    }
    return st;
}

} // namespace detail

/// One history. Deterministic given `seed`; the state starts in the uniform
/// superposition.
inline TrajectoryRecord run_trajectory(const PhotonModel &model, long n_photons,
                                       std::uint64_t seed,
                                       const TrajectoryOptions &opt = {}) {
    if (n_photons < 1) {
        throw DomainError("n_photons must be >= 1");
    }
    const int n = model.n_atoms();
    const auto &geom = model.geometry();
    RandomStream rng(seed);

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.events.reserve(static_cast<std::size_t>(n_photons));
    QuantumState state = QuantumState::uniform_superposition(n);
    const int every = std::max(1, opt.record_every);
    rec.steps.push_back(detail::record(state, geom, 0, 0, 0, 0));

    const auto w1 = model.detector1_weight();
    const auto w2 = model.detector2_weight();
    const auto ws = model.scatter_weight();
    std::vector<double> pops(state.size());

    for (long photon = 1; photon <= n_photons; ++photon) {
        double p1 = 0.0, p2 = 0.0, ps = 0.0;
        for (std::size_t m = 0; m < pops.size(); ++m) {
            pops[m] = std::norm(state[m]);
            p1 += pops[m] * w1[m];
            p2 += pops[m] * w2[m];
            ps += pops[m] * ws[m];
        }
        const double total = p1 + p2 + ps;
        rec.max_probability_defect = std::max(rec.max_probability_defect, std::abs(total - 1.0));
        detail::check_consistency(total, model.tolerance(), photon);

        // The residual defect is spread proportionally over all events.
        const double target = rng.uniform() * total;
        DetectionEvent ev;
        if (target < p1) {
            ev.kind = EventKind::Detector1;
            ++rec.n1;
        } else if (target < p1 + p2 || ps <= 0.0) {
            ev.kind = EventKind::Detector2;
            ++rec.n2;
        } else {
            ev.kind = EventKind::Scattered;
            double acc = p1 + p2;
            const std::size_t n_cells = model.grid().size();
            std::size_t chosen = n_cells;
            std::size_t last_nonzero = 0;
            for (std::size_t c = 0; c < n_cells; ++c) {
                const double q = model.cell_probability(pops, c);
                if (q > 0.0) {
                    last_nonzero = c;
                }
                acc += q;
                if (target < acc) {
                    chosen = c;
                    break;
                }
            }
            ev.cell = static_cast<std::uint32_t>(chosen == n_cells ? last_nonzero : chosen);
            ++rec.n_scatt;
            if (rec.first_scatter < 0) {
                rec.first_scatter = photon;
            }
        }
        rec.events.push_back(ev);
        apply_jump(state, ev, model);
        if (opt.light_shift_compensation) {
            auto amps = state.amplitudes();
            for (std::size_t m = 0; m < amps.size(); ++m) {
                amps[m] *= model.light_shift_factor(count_a(static_cast<ConfigMask>(m)));
            }
        }
        if (photon % every == 0 || photon == n_photons) {
            rec.steps.push_back(detail::record(state, geom, photon, rec.n1, rec.n2, rec.n_scatt));
        }
    }
    rec.final_state = std::move(state);
    return rec;
}

/// Convenience overload that builds the photon model first.
inline TrajectoryRecord run_trajectory(const AtomCloud &cloud, const BeamGeometry &geom,
                                       const SphereGrid &grid, long n_photons,
                                       std::uint64_t seed, const TrajectoryOptions &opt = {}) {
    const PhotonModel model(geom, cloud, grid, opt);
    return run_trajectory(model, n_photons, seed, opt);
}

/// Seeds used by one history of an ensemble (and by a single-trajectory run
/// with master seed `history_seed`).
struct HistorySeeds {
    std::uint64_t positions;
    std::uint64_t events;
    static HistorySeeds from(std::uint64_t history_seed) {
        return {stream_seed(history_seed, 0), stream_seed(history_seed, 1)};
    }
};

/// Running mean and variance of one quantity.
struct Moments {
    double mean{};
    double var{};
    long count{};
};

struct EnsembleStep {
    long photon_index{};
    Moments jz_mean, jz_var, jx, jy, jsq, jperp, calc_mse, n_scatt;
};

struct HistoryFailure {
    long history{};
    std::string kind;
    std::string message;
};

struct EnsembleStats {
    long n_histories{}; ///< histories that completed
    std::vector<EnsembleStep> steps;
    std::vector<HistoryFailure> dropped;
    double max_probability_defect{};
    std::vector<TrajectoryRecord> histories; ///< filled when requested
};

struct EnsembleOptions {
    TrajectoryOptions trajectory;
    GridOptions grid;
    std::size_t max_table_entries{default_max_table_entries};
    unsigned threads{0}; ///< 0: hardware concurrency
    bool keep_histories{false};
};

namespace detail {

inline Moments moments_of(const std::vector<double> &v) {
    Moments m;
    double s = 0.0;
    for (double x : v) {
        if (!std::isnan(x)) {
            s += x;
            ++m.count;
        }
    }
    if (m.count == 0) {
        m.mean = m.var = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    m.mean = s / static_cast<double>(m.count);
    double ss = 0.0;
    for (double x : v) {
        if (!std::isnan(x)) {
            ss += (x - m.mean) * (x - m.mean);
        }
    }
    m.var = m.count > 1 ? ss / static_cast<double>(m.count - 1) : 0.0;
    return m;
}

} // namespace detail

/**
 * Independent histories with atom positions redrawn from `cloud` for each.
 * History h uses master seed stream_seed(seed, h). Histories run in
 * parallel; the reduction is in history order, so results do not depend on
 * the thread count.
 */
inline EnsembleStats run_ensemble(const CloudSpec &cloud, int n_atoms, const BeamGeometry &geom,
                                  long n_photons, long n_histories, std::uint64_t seed,
                                  const EnsembleOptions &opt = {}) {
    if (n_histories < 1) {
        throw DomainError("n_histories must be >= 1");
    }
    const SphereGrid grid = build_sphere_grid(geom.k, geom.theta0, cloud.scale(), opt.grid);

    std::vector<std::optional<TrajectoryRecord>> results(static_cast<std::size_t>(n_histories));
    std::vector<std::optional<HistoryFailure>> failures(static_cast<std::size_t>(n_histories));
    std::atomic<long> next{0};
    auto worker = [&] {
        for (long h = next++; h < n_histories; h = next++) {
            try {
                const auto seeds = HistorySeeds::from(stream_seed(seed, static_cast<std::uint64_t>(h)));
                RandomStream pos_rng(seeds.positions);
                AtomCloud atoms = sample_cloud(cloud, n_atoms, pos_rng);
                const PhotonModel model(geom, std::move(atoms), grid, opt.trajectory,
                                        opt.max_table_entries);
                results[h] = run_trajectory(model, n_photons, seeds.events, opt.trajectory);
            } catch (const Error &e) {
                failures[h] = HistoryFailure{h, e.kind(), e.what()};
            }
        }
    };
    unsigned threads = opt.threads ? opt.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<long>(threads, n_histories));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    EnsembleStats stats;
    std::vector<const TrajectoryRecord *> ok;
    for (long h = 0; h < n_histories; ++h) {
        if (results[h]) {
            ok.push_back(&*results[h]);
        } else if (failures[h]) {
            stats.dropped.push_back(*failures[h]);
        }
    }
    stats.n_histories = static_cast<long>(ok.size());
    if (!ok.empty()) {
        const std::size_t n_steps = ok.front()->steps.size();
        stats.steps.resize(n_steps);
        std::vector<double> buf(ok.size());
        auto collect = [&](std::size_t s, auto getter) {
            for (std::size_t h = 0; h < ok.size(); ++h) {
                buf[h] = getter(ok[h]->steps[s]);
            }
            return detail::moments_of(buf);
        };
        for (std::size_t s = 0; s < n_steps; ++s) {
            auto &out = stats.steps[s];
            out.photon_index = ok.front()->steps[s].photon_index;
            out.jz_mean = collect(s, [](const RecordedStep &r) { return r.obs.jz_mean; });
            out.jz_var = collect(s, [](const RecordedStep &r) { return r.obs.jz_var; });
            out.jx = collect(s, [](const RecordedStep &r) { return r.obs.jx_mean; });
            out.jy = collect(s, [](const RecordedStep &r) { return r.obs.jy_mean; });
            out.jsq = collect(s, [](const RecordedStep &r) { return r.obs.jsq_mean; });
            out.jperp = collect(s, [](const RecordedStep &r) {
                return std::hypot(r.obs.jx_mean, r.obs.jy_mean);
            });
            out.calc_mse = collect(s, [](const RecordedStep &r) { return r.calc_mse; });
            out.n_scatt = collect(s, [](const RecordedStep &r) { return static_cast<double>(r.n_scatt); });
        }
        for (const auto *r : ok) {
            stats.max_probability_defect = std::max(stats.max_probability_defect, r->max_probability_defect);
        }
    }
    if (opt.keep_histories) {
        for (auto &r : results) {
            if (r) {
                stats.histories.push_back(std::move(*r));
            }
        }
    }
    return stats;
}

} // namespace qnd
