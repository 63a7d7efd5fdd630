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

#pragma once

#include <stdexcept>
#include <string>

namespace qnd {

/// Base of every error thrown by the library. `kind()` is a stable short
/// identifier used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string &message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string &kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

/// Requested size exceeds a hard implementation cap.
struct CapacityError : Error {
    explicit CapacityError(const std::string &m) : Error("capacity", m) {}
};

/// Argument outside the mathematical domain of a formula.
struct DomainError : Error {
    explicit DomainError(const std::string &m) : Error("domain", m) {}
};

/// Caller broke a documented precondition (e.g. unnormalized state).
struct ContractViolation : Error {
    explicit ContractViolation(const std::string &m)
        : Error("contract", m) {}
};

/// Physical parameters leave the weak-scattering (Born) regime.
struct ValidityError : Error {
    explicit ValidityError(const std::string &m) : Error("validity", m) {}
};

/// Event probabilities do not sum to one within tolerance.
struct ConsistencyError : Error {
    explicit ConsistencyError(const std::string &m)
        : Error("consistency", m) {}
};

/// Sphere grid or lookup table would exceed its configured cap.
struct ResolutionError : Error {
    ResolutionError(const std::string &m, std::size_t required)
        : Error("resolution", m), required_(required) {}
    [[nodiscard]] std::size_t required() const noexcept { return required_; }

  private:
    std::size_t required_;
};

/// A jump was requested for an event of zero probability.
struct InvalidJump : Error {
    explicit InvalidJump(const std::string &m) : Error("invalid-jump", m) {}
};

/// Interferometer record admits no unambiguous population estimate.
struct AmbiguityError : Error {
    explicit AmbiguityError(const std::string &m) : Error("ambiguity", m) {}
};

/// xi is undefined because the mean spin vanishes.
struct UndefinedXi : Error {
    explicit UndefinedXi(const std::string &m) : Error("undefined-xi", m) {}
};

/// Bad configuration or model input.
struct ConfigError : Error {
    explicit ConfigError(const std::string &m) : Error("config", m) {}
};

} // namespace qnd
