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
 * Seeded random streams with a documented, implementation-independent
 * mapping from (master seed, stream index) to the draws that are produced.
 *
 *   stream_seed(master, i) = splitmix64(master + 0x9E3779B97F4A7C15 * (i + 1))
 *   engine                 = std::mt19937_64(stream_seed)
 *   uniform()              = (engine() >> 11) * 2^-53            in [0, 1)
 *   normal()               = Box-Muller on two uniforms, cosine branch only
 *
 * std::mt19937_64 is fully specified by the standard; the distributions in
 * <random> are not, so they are never used here.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qnd {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t master,
                                                  std::uint64_t index) noexcept {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    static RandomStream for_stream(std::uint64_t master, std::uint64_t index) {
        return RandomStream(stream_seed(master, index));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

    /// Standard normal deviate.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace qnd
