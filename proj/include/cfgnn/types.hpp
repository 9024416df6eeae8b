// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfgnn {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inner convex solver failed to converge; distinct from a certified infeasible target.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense M x K array indexed by (AP m, UE k), row-major. The tag keeps fading,
/// channel-estimate and power-control matrices from being mixed up.
template <typename Tag>
class ApUeArray {
 public:
  ApUeArray() = default;
  ApUeArray(std::size_t num_aps, std::size_t num_ues, double fill = 0.0)
      : m_(num_aps), k_(num_ues), v_(num_aps * num_ues, fill) {}
  ApUeArray(std::size_t num_aps, std::size_t num_ues, std::vector<double> values)
      : m_(num_aps), k_(num_ues), v_(std::move(values)) {
    if (v_.size() != m_ * k_) throw std::invalid_argument("ApUeArray: value count does not match M*K");
  }

  std::size_t num_aps() const { return m_; }
  std::size_t num_ues() const { return k_; }
  std::size_t size() const { return v_.size(); }

  double& operator()(std::size_t m, std::size_t k) { return v_[m * k_ + k]; }
  double operator()(std::size_t m, std::size_t k) const { return v_[m * k_ + k]; }

  std::span<double> row(std::size_t m) { return {v_.data() + m * k_, k_}; }
  std::span<const double> row(std::size_t m) const { return {v_.data() + m * k_, k_}; }

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  bool operator==(const ApUeArray&) const = default;

 private:
  std::size_t m_ = 0;
  std::size_t k_ = 0;
  std::vector<double> v_;
};

using FadingMatrix = ApUeArray<struct FadingTag>;
using AlphaMatrix = ApUeArray<struct AlphaTag>;
using PowerControl = ApUeArray<struct PowerTag>;

/// Per-user SINR values (linear scale).
using SinrVector = std::vector<double>;

/// Scalar operation tally. Additions and subtractions go to `adds`;
/// multiplications go to `multiplies`, together with the weighted cost of
/// operations that are neither: a division or square root counts as
/// kDivWeight multiplications, an exp/log/exp2 as kTranscendentalWeight.
struct FlopCounter {
  static constexpr std::uint64_t kDivWeight = 4;
  static constexpr std::uint64_t kTranscendentalWeight = 8;

  std::uint64_t multiplies = 0;
  std::uint64_t adds = 0;

  std::uint64_t total() const { return multiplies + adds; }
  void mul(std::uint64_t n) { multiplies += n; }
  void add(std::uint64_t n) { adds += n; }
  void div(std::uint64_t n) { multiplies += kDivWeight * n; }
  void sqrt(std::uint64_t n) { multiplies += kDivWeight * n; }
  void transcendental(std::uint64_t n) { multiplies += kTranscendentalWeight * n; }
  FlopCounter& operator+=(const FlopCounter& o) {
    multiplies += o.multiplies;
    adds += o.adds;
    return *this;
  }
};

}  // namespace cfgnn
