// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "cfgnn/types.hpp"

namespace cfgnn {

inline constexpr double kDefaultFeasibilityTol = 1e-9;

/// Mean-square of the MMSE channel estimate:
/// alpha = rho_u tau beta^2 / (1 + rho_u tau beta).
AlphaMatrix compute_alpha(const FadingMatrix& beta, double rho_u, double tau);

/// Ergodic downlink SINR with MRT precoding, one value per UE:
///
///   SINR_k = rho_d (sum_m sqrt(alpha_mk eta_mk))^2 / (1 + rho_d sum_m beta_mk sum_k' eta_mk')
///
/// Throws DomainError if any eta is negative or the shapes disagree.
SinrVector compute_sinr(const FadingMatrix& beta, const AlphaMatrix& alpha, const PowerControl& eta,
                        double rho_d);

double min_sinr(const SinrVector& sinr);

/// log2(1 + SINR_k) in bits/s/Hz.
std::vector<double> spectral_efficiency(const SinrVector& sinr);

/// Per-AP budget: every entry >= -tol and every row sum <= 1 + tol.
bool is_feasible(const PowerControl& eta, double tol = kDefaultFeasibilityTol);

}  // namespace cfgnn
