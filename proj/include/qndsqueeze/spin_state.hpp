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
 * Many-atom internal state in the product basis and the collective spin
 * observables built from it.
 *
 * Basis index convention: bit i of the configuration mask is set when atom i
 * is in |a>, so popcount(mask) is the number n_a of atoms in |a>. |a> is the
 * spin-up state of the fictitious spin-1/2, hence Jz = n_a - N/2.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qnd {

using Complex = std::complex<double>;
using ConfigMask = std::uint32_t;

/// Largest number of atoms a QuantumState accepts (2^20 amplitudes).
inline constexpr int max_atoms = 20;

[[nodiscard]] inline int count_a(ConfigMask mask) noexcept {
    return std::popcount(mask);
}

class QuantumState {
  public:
    /// All atoms in (|a> + |b>)/sqrt(2): every amplitude is 2^(-N/2).
    static QuantumState uniform_superposition(int n_atoms) {
        QuantumState s(n_atoms);
        const double amp = std::pow(2.0, -0.5 * n_atoms);
        std::fill(s.amps_.begin(), s.amps_.end(), Complex(amp, 0.0));
        return s;
    }

    /// Single product-basis state |mask>.
    static QuantumState basis(int n_atoms, ConfigMask mask) {
        QuantumState s(n_atoms);
        if (mask >= s.amps_.size()) {
            throw DomainError("basis mask out of range");
        }
        s.amps_[mask] = 1.0;
        return s;
    }

    /// Takes ownership of `amps`, normalizing them. Length must be 2^n_atoms.
    static QuantumState from_amplitudes(int n_atoms, std::vector<Complex> amps) {
        QuantumState s(n_atoms);
        if (amps.size() != s.amps_.size()) {
            throw DomainError("amplitude vector length " +
                              std::to_string(amps.size()) + " != 2^" +
                              std::to_string(n_atoms));
        }
        s.amps_ = std::move(amps);
        s.normalize();
        return s;
    }

    [[nodiscard]] int n_atoms() const noexcept { return n_atoms_; }
    [[nodiscard]] std::size_t size() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept {
        return amps_;
    }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amps_; }
    [[nodiscard]] const Complex &operator[](std::size_t i) const {
        return amps_[i];
    }
    Complex &operator[](std::size_t i) { return amps_[i]; }

    [[nodiscard]] double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto &c : amps_) {
            s += std::norm(c);
        }
        return s;
    }

    /// Rescales to unit norm; returns the squared norm found before scaling.
    double normalize() {
        const double n2 = norm_squared();
        if (!(n2 > 0.0) || !std::isfinite(n2)) {
            throw ContractViolation("cannot normalize a zero or non-finite state");
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (auto &c : amps_) {
            c *= inv;
        }
        return n2;
    }

    /// Population summed over configurations with equal n_a (length N+1).
    [[nodiscard]] std::vector<double> populations_by_count() const {
        std::vector<double> pops(static_cast<std::size_t>(n_atoms_) + 1, 0.0);
        for (std::size_t m = 0; m < amps_.size(); ++m) {
            pops[count_a(static_cast<ConfigMask>(m))] += std::norm(amps_[m]);
        }
        return pops;
    }

  private:
    explicit QuantumState(int n_atoms) : n_atoms_(n_atoms) {
        if (n_atoms < 1) {
            throw DomainError("n_atoms must be >= 1");
        }
        if (n_atoms > max_atoms) {
            throw CapacityError("n_atoms=" + std::to_string(n_atoms) +
                                " exceeds the cap of " +
                                std::to_string(max_atoms));
        }
        amps_.assign(std::size_t{1} << n_atoms, Complex{});
    }

    int n_atoms_;
    std::vector<Complex> amps_;
};

struct SpinObservables {
    double jz_mean{};
    double jz_var{};
    double jx_mean{};
    double jy_mean{};
    double jsq_mean{};
    double jx2_mean{}; ///< <Jx^2>
    double jy2_mean{}; ///< <Jy^2>
};

namespace detail {

/// out = Jx * in, accumulated by single-bit flips.
inline void apply_jx(std::span<const Complex> in, std::span<Complex> out,
                     int n_atoms) {
    std::fill(out.begin(), out.end(), Complex{});
    for (std::size_t m = 0; m < in.size(); ++m) {
        const Complex half = 0.5 * in[m];
        for (int i = 0; i < n_atoms; ++i) {
            out[m ^ (std::size_t{1} << i)] += half;
        }
    }
}

/// out = Jy * in. sigma_y|a> = i|b>, sigma_y|b> = -i|a>.
inline void apply_jy(std::span<const Complex> in, std::span<Complex> out,
                     int n_atoms) {
    std::fill(out.begin(), out.end(), Complex{});
    for (std::size_t m = 0; m < in.size(); ++m) {
        const Complex half_i = Complex(0.0, 0.5) * in[m];
        for (int i = 0; i < n_atoms; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            if (m & bit) {
                out[m ^ bit] += half_i;
            } else {
                out[m ^ bit] -= half_i;
            }
        }
    }
}

inline void apply_jz(std::span<const Complex> in, std::span<Complex> out,
                     int n_atoms) {
    for (std::size_t m = 0; m < in.size(); ++m) {
        out[m] = (count_a(static_cast<ConfigMask>(m)) - 0.5 * n_atoms) * in[m];
    }
}

/// out = J^2 * in.
inline void apply_jsq(std::span<const Complex> in, std::span<Complex> out,
                      int n_atoms) {
    std::vector<Complex> t1(in.size()), t2(in.size());
    apply_jx(in, t1, n_atoms);
    apply_jx(t1, out, n_atoms);
    apply_jy(in, t1, n_atoms);
    apply_jy(t1, t2, n_atoms);
    for (std::size_t m = 0; m < in.size(); ++m) {
        const double jz = count_a(static_cast<ConfigMask>(m)) - 0.5 * n_atoms;
        out[m] += t2[m] + jz * jz * in[m];
    }
}

inline Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
    Complex s{};
    for (std::size_t m = 0; m < a.size(); ++m) {
        s += std::conj(a[m]) * b[m];
    }
    return s;
}

} // namespace detail

/// Collective spin moments of a normalized state. O(N 2^N), two scratch
/// vectors.
inline SpinObservables observables(const QuantumState &state) {
    const double n2 = state.norm_squared();
    if (std::abs(n2 - 1.0) > 1e-6) {
        throw ContractViolation("observables() needs a normalized state (|psi|^2=" +
                                std::to_string(n2) + ")");
    }
    const int n = state.n_atoms();
    const auto amps = state.amplitudes();

    SpinObservables obs;
    double jz2 = 0.0;
    for (std::size_t m = 0; m < amps.size(); ++m) {
        const double p = std::norm(amps[m]);
        const double jz = count_a(static_cast<ConfigMask>(m)) - 0.5 * n;
        obs.jz_mean += p * jz;
        jz2 += p * jz * jz;
    }
    obs.jz_var = std::max(0.0, jz2 - obs.jz_mean * obs.jz_mean);

    std::vector<Complex> scratch(amps.size());
    detail::apply_jx(amps, scratch, n);
    obs.jx_mean = detail::inner(amps, scratch).real();
    obs.jx2_mean = detail::inner(scratch, scratch).real();

    detail::apply_jy(amps, scratch, n);
    obs.jy_mean = detail::inner(amps, scratch).real();
    obs.jy2_mean = detail::inner(scratch, scratch).real();

    obs.jsq_mean = obs.jx2_mean + obs.jy2_mean + jz2;
    return obs;
}

enum class MeanSpinForm {
    Asymptotic,    ///< J exp(-1/(8 Var Jz))
    FullPrefactor, ///< (J+1/2)(1 - 2 Var/(2J+1)^2) exp(-1/(8 Var)), clamped at 0
};

/// Mean spin length of a Gaussian-amplitude state in the J multiplet with
/// population variance `var_jz`.
inline double gaussian_mean_spin(double var_jz, double j,
                                 MeanSpinForm form = MeanSpinForm::Asymptotic) {
    if (!(var_jz > 0.0)) {
        throw DomainError("gaussian_mean_spin needs var_jz > 0");
    }
    if (!(j > 0.0)) {
        throw DomainError("gaussian_mean_spin needs j > 0");
    }
    const double decay = std::exp(-1.0 / (8.0 * var_jz));
    if (form == MeanSpinForm::Asymptotic) {
        return j * decay;
    }
    const double two_j1 = 2.0 * j + 1.0;
    const double pref = (j + 0.5) * (1.0 - 2.0 * var_jz / (two_j1 * two_j1));
    return std::max(0.0, pref * decay);
}

struct SqueezingReport {
    double xi{};
    double var_jz{};
    double jx{};
    int n_atoms{};
};

/// Wineland parameter xi = sqrt(N Var Jz) / |<Jx>|.
inline SqueezingReport squeezing_xi(int n_atoms, double var_jz, double jx) {
    if (jx == 0.0) {
        throw UndefinedXi("xi undefined for <Jx> = 0");
    }
    if (var_jz < 0.0 || n_atoms < 1) {
        throw DomainError("squeezing_xi needs var_jz >= 0 and n_atoms >= 1");
    }
    return {std::sqrt(n_atoms * var_jz) / std::abs(jx), var_jz, jx, n_atoms};
}

inline constexpr int max_dicke_atoms = 12;

/// Population of each total-J sector. Keys are J (half-integers when N is
/// odd). The projector onto J is built as a Lagrange polynomial in J^2.
inline std::map<double, double> dicke_projection_weights(const QuantumState &state) {
    const int n = state.n_atoms();
    if (n > max_dicke_atoms) {
        throw CapacityError("dicke_projection_weights supports at most " +
                            std::to_string(max_dicke_atoms) + " atoms");
    }
    std::vector<double> js;
    for (double j = 0.5 * n; j >= 0.0; j -= 1.0) {
        js.push_back(j);
    }
    const auto amps = state.amplitudes();
    const double norm2 = state.norm_squared();

    std::map<double, double> weights;
    std::vector<Complex> v(amps.size()), w(amps.size());
    for (double j : js) {
        const double lam = j * (j + 1.0);
        std::copy(amps.begin(), amps.end(), v.begin());
        for (double jp : js) {
            if (jp == j) {
                continue;
            }
            const double lp = jp * (jp + 1.0);
            detail::apply_jsq(v, w, n);
            for (std::size_t m = 0; m < v.size(); ++m) {
                v[m] = (w[m] - lp * v[m]) / (lam - lp);
            }
        }
        weights[j] = std::max(0.0, detail::inner(amps, v).real() / norm2);
    }
    return weights;
}

} // namespace qnd
