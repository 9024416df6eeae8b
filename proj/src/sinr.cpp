// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/sinr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfgnn {

AlphaMatrix compute_alpha(const FadingMatrix& beta, double rho_u, double tau) {
  if (!(rho_u > 0.0) || !(tau >= 1.0)) throw DomainError("compute_alpha: need rho_u > 0 and tau >= 1");
  const double gain = rho_u * tau;
  AlphaMatrix alpha(beta.num_aps(), beta.num_ues());
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double b = beta.values()[i];
    alpha.values()[i] = gain * b * b / (1.0 + gain * b);
  }
  return alpha;
}

SinrVector compute_sinr(const FadingMatrix& beta, const AlphaMatrix& alpha, const PowerControl& eta,
                        double rho_d) {
  const std::size_t M = beta.num_aps();
  const std::size_t K = beta.num_ues();
  if (alpha.num_aps() != M || alpha.num_ues() != K || eta.num_aps() != M || eta.num_ues() != K)
    throw DomainError("compute_sinr: shape mismatch");
  for (double e : eta.values())
    if (!(e >= 0.0)) throw DomainError("compute_sinr: power coefficients must be non-negative");

  std::vector<double> ap_power(M, 0.0);
  for (std::size_t m = 0; m < M; ++m)
    for (double e : eta.row(m)) ap_power[m] += e;

  SinrVector sinr(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double coherent = 0.0;
    double interference = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      coherent += std::sqrt(alpha(m, k) * eta(m, k));
      interference += beta(m, k) * ap_power[m];
    }
    sinr[k] = rho_d * coherent * coherent / (1.0 + rho_d * interference);
  }
  return sinr;
}

double min_sinr(const SinrVector& sinr) {
  if (sinr.empty()) return std::numeric_limits<double>::quiet_NaN();
  return *std::min_element(sinr.begin(), sinr.end());
}

std::vector<double> spectral_efficiency(const SinrVector& sinr) {
  std::vector<double> se(sinr.size());
  std::transform(sinr.begin(), sinr.end(), se.begin(), [](double s) { return std::log2(1.0 + s); });
  return se;
}

bool is_feasible(const PowerControl& eta, double tol) {
  for (std::size_t m = 0; m < eta.num_aps(); ++m) {
    double sum = 0.0;
    for (double e : eta.row(m)) {
      if (!(e >= -tol)) return false;
      sum += e;
    }
    if (!(sum <= 1.0 + tol)) return false;
  }
  return true;
}

}  // namespace cfgnn
