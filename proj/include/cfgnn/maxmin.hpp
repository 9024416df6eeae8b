// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>

#include "cfgnn/channel.hpp"
#include "cfgnn/types.hpp"

namespace cfgnn {

/// The lower end of the bisection bracket is not achievable.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BisectionConfig {
  /// Lower end of the bracket; values <= 0 select the minimum SINR of equal power sharing,
  /// which is always achievable.
  double t_lo = 0.0;
  /// Upper end of the bracket; values <= 0 select the automatic bound.
  double t_hi = 0.0;
  double rel_tol = 1e-4;
  int max_iter = 60;
  double feas_tol = 1e-6;
  /// Scale down users above the minimum SINR until max/min - 1 <= balance_tol; 0 disables.
  double balance_tol = 1e-7;
  int balance_max_iter = 200;

  void validate() const;
};

struct MaxMinSolution {
  double t_star = 0.0;
  PowerControl eta;
  int iterations = 0;
  bool converged = false;
};

/// Decides whether every UE can reach SINR >= t under the per-AP budget.
///
/// With s_mk = sqrt(eta_mk) the target is a pair of cone families:
///   sum_m sqrt(alpha_mk) s_mk >= sqrt(t) * || (1/sqrt(rho_d), sqrt(beta_mk) s_mk') ||   for each k
///   || s_m. || <= 1                                                                       for each m
/// which is decided by a log-barrier method on the phase-one problem
/// min { r : each cone violated by at most r }. Returns the powers of a point with
/// SINR_k >= t (1 - feas_tol), or nullopt when the target is infeasible.
/// Throws SolverFailure if the barrier iterations do not converge.
std::optional<PowerControl> feasibility_check(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d,
                                              double t, double feas_tol = 1e-6, FlopCounter* flops = nullptr);

/// Max-min SINR power control by bisection on the common SINR target.
/// Repeatedly scales each user's powers by min_j SINR_j / SINR_k. No user drops
/// below the current minimum, so the minimum never decreases. Returns the iterations used.
int balance_sinr(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d, PowerControl& eta, double tol,
                 int max_iter, FlopCounter* flops = nullptr);

MaxMinSolution solve_maxmin(const FadingMatrix& beta, const ScenarioConfig& cfg, const BisectionConfig& bis = {},
                            FlopCounter* flops = nullptr);

/// Bracket used when BisectionConfig::t_hi is not set: the smaller of
/// max_k rho_d (sum_m sqrt(alpha_mk))^2 and min_k sum_m alpha_mk / beta_mk.
double sinr_upper_bound(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d);

/// Exhaustive search over eta on the grid {0, step, 2 step, ...} restricted to
/// per-AP rows summing to at most 1. Exact grid optimum (branch and bound prunes
/// only provably dominated subtrees). Requires M*K <= 6.
MaxMinSolution brute_force_maxmin(const FadingMatrix& beta, const ScenarioConfig& cfg, double grid_step);

/// eta_mk = 1/K.
PowerControl equal_power(std::size_t num_aps, std::size_t num_ues);

}  // namespace cfgnn
