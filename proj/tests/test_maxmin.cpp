// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfgnn/maxmin.hpp"
#include "cfgnn/sinr.hpp"
#include "test_support.hpp"

namespace cfgnn {
namespace {

ScenarioConfig urban(std::size_t M, std::size_t K, std::uint64_t seed) {
  return make_scenario(M, K, default_morphology(MorphologyName::kUrban), seed);
}

double spread(const SinrVector& s) {
  return *std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end());
}

TEST(BisectionConfig, Validation) {
  BisectionConfig bis;
  EXPECT_NO_THROW(bis.validate());
  bis.rel_tol = 0.0;
  EXPECT_THROW(bis.validate(), std::invalid_argument);
  bis = {};
  bis.t_lo = 2.0;
  bis.t_hi = 1.0;
  EXPECT_THROW(bis.validate(), std::invalid_argument);
  bis = {};
  bis.max_iter = 0;
  EXPECT_THROW(bis.validate(), std::invalid_argument);
}

TEST(EqualPower, Example) {
  const auto eta = equal_power(2, 4);
  for (double e : eta.values()) EXPECT_EQ(e, 0.25);
  EXPECT_TRUE(is_feasible(eta, 0.0));
}

TEST(Feasibility, SingleLinkBoundary) {
  auto cfg = urban(1, 1, 0);
  FadingMatrix beta(1, 1, 1e-12);
  const auto alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
  const double t = cfg.rho_d * alpha(0, 0) / (1.0 + cfg.rho_d * beta(0, 0));
  const auto eta = feasibility_check(beta, alpha, cfg.rho_d, t);
  ASSERT_TRUE(eta.has_value());
  EXPECT_TRUE(is_feasible(*eta, 1e-6));
  EXPECT_GE(compute_sinr(beta, alpha, *eta, cfg.rho_d)[0], t * (1.0 - 1e-6));
  EXPECT_FALSE(feasibility_check(beta, alpha, cfg.rho_d, 1.01 * t).has_value());
}

TEST(Feasibility, VanishingTargetIsFeasible) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto beta = testing::random_fading(5, 3, rng);
    const auto cfg = urban(5, 3, 0);
    const auto alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
    const double t = 1e-6 * min_sinr(compute_sinr(beta, alpha, equal_power(5, 3), cfg.rho_d));
    const auto eta = feasibility_check(beta, alpha, cfg.rho_d, t);
    ASSERT_TRUE(eta.has_value());
    EXPECT_TRUE(is_feasible(*eta, 1e-6));
    EXPECT_GE(min_sinr(compute_sinr(beta, alpha, *eta, cfg.rho_d)), t * (1.0 - 1e-6));
  }
  FadingMatrix beta(1, 1, 1e-11);
  const auto alpha = compute_alpha(beta, 1e12, 1.0);
  EXPECT_THROW(feasibility_check(beta, alpha, 1e12, 0.0), DomainError);
}

TEST(Feasibility, CountsFlops) {
  const auto cfg = urban(4, 2, 3);
  const auto beta = generate_fading(cfg);
  const auto alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
  FlopCounter flops;
  const double t = min_sinr(compute_sinr(beta, alpha, equal_power(4, 2), cfg.rho_d));
  ASSERT_TRUE(feasibility_check(beta, alpha, cfg.rho_d, t, 1e-6, &flops).has_value());
  EXPECT_GT(flops.multiplies, 0u);
  EXPECT_GT(flops.adds, 0u);
}

TEST(SolveMaxMin, SingleLinkClosedForm) {
  auto cfg = urban(1, 1, 0);
  FadingMatrix beta(1, 1, 1e-12);
  const auto alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
  const double expected = cfg.rho_d * alpha(0, 0) / (1.0 + cfg.rho_d * beta(0, 0));
  const auto sol = solve_maxmin(beta, cfg);
  EXPECT_TRUE(sol.converged);
  EXPECT_NEAR(sol.t_star / expected, 1.0, 1e-4);
  EXPECT_LE(sol.t_star, expected * (1.0 + 1e-12));
  EXPECT_NEAR(sol.eta(0, 0), 1.0, 1e-3);
}

TEST(SolveMaxMin, MatchesGridOracleOnSmallInstances) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto cfg = urban(2, 2, 100 + seed);
    const auto beta = generate_fading(cfg);
    const auto sol = solve_maxmin(beta, cfg);
    ASSERT_TRUE(sol.converged);
    EXPECT_TRUE(is_feasible(sol.eta, 1e-6));
    const auto grid = brute_force_maxmin(beta, cfg, 0.01);
    const double gap = testing::grid_resolution_gap(beta, sol.eta, cfg.rho_d, cfg.rho_u, cfg.tau, 0.01);
    EXPECT_LE(sol.t_star - grid.t_star, gap + 1e-12 * sol.t_star) << "seed " << seed;
    EXPECT_GE(sol.t_star - grid.t_star, -1e-4 * sol.t_star) << "seed " << seed;
  }
}

TEST(SolveMaxMin, TStarIsTheAchievedMinimum) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = urban(8, 3, seed);
    const auto beta = generate_fading(cfg);
    const auto sol = solve_maxmin(beta, cfg);
    const auto sinr = testing::oracle_sinr(beta, sol.eta, cfg.rho_d, cfg.rho_u, cfg.tau);
    EXPECT_NEAR(sol.t_star, *std::min_element(sinr.begin(), sinr.end()), 1e-12 * sol.t_star);
    EXPECT_LE(spread(sinr), 1e-3 * sol.t_star);
    EXPECT_LE(sol.t_star, sinr_upper_bound(beta, compute_alpha(beta, cfg.rho_u, cfg.tau), cfg.rho_d));
    const auto alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
    EXPECT_GE(sol.t_star, min_sinr(compute_sinr(beta, alpha, equal_power(8, 3), cfg.rho_d)));
  }
}

TEST(SolveMaxMin, ColumnPermutationEquivariance) {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = urban(6, 3, 500 + seed);
    const auto beta = generate_fading(cfg);
    std::vector<std::size_t> perm(3);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    FadingMatrix bp(6, 3);
    for (std::size_t m = 0; m < 6; ++m)
      for (std::size_t k = 0; k < 3; ++k) bp(m, k) = beta(m, perm[k]);
    const auto a = solve_maxmin(beta, cfg);
    const auto b = solve_maxmin(bp, cfg);
    EXPECT_NEAR(b.t_star / a.t_star, 1.0, 1e-6);
    for (std::size_t m = 0; m < 6; ++m)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(b.eta(m, k), a.eta(m, perm[k]), 1e-6);
  }
}

TEST(SolveMaxMin, IterationCapReportsBestIterate) {
  const auto cfg = urban(4, 2, 8);
  const auto beta = generate_fading(cfg);
  BisectionConfig bis;
  bis.max_iter = 1;
  const auto sol = solve_maxmin(beta, cfg, bis);
  EXPECT_FALSE(sol.converged);
  EXPECT_TRUE(is_feasible(sol.eta, 1e-6));
  EXPECT_GT(sol.t_star, 0.0);
}

TEST(SolveMaxMin, Errors) {
  auto cfg = urban(2, 2, 0);
  EXPECT_THROW(solve_maxmin(FadingMatrix(3, 2, 1e-10), cfg), std::invalid_argument);
  FadingMatrix beta(2, 2, 1e-10);
  beta(1, 1) = 0.0;
  EXPECT_THROW(solve_maxmin(beta, cfg), DomainError);
  BisectionConfig bis;
  bis.t_lo = 1e9;
  EXPECT_THROW(solve_maxmin(FadingMatrix(2, 2, 1e-10), cfg, bis), BracketError);
}

TEST(SolveMaxMin, FlopsAreCounted) {
  const auto cfg = urban(4, 2, 1);
  FlopCounter flops;
  solve_maxmin(generate_fading(cfg), cfg, {}, &flops);
  EXPECT_GT(flops.total(), 10000u);
}

TEST(Balance, NeverLowersTheMinimum) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto beta = testing::random_fading(6, 3, rng);
    const auto alpha = compute_alpha(beta, 5e11, 3.0);
    auto eta = testing::random_powers(6, 3, rng);
    const double before = min_sinr(compute_sinr(beta, alpha, eta, 1e12));
    balance_sinr(beta, alpha, 1e12, eta, 1e-9, 500);
    const auto after = compute_sinr(beta, alpha, eta, 1e12);
    EXPECT_GE(min_sinr(after), before * (1.0 - 1e-12));
    EXPECT_TRUE(is_feasible(eta, 1e-12));
  }
}

TEST(BruteForce, SingleLinkUsesFullPower) {
  const auto cfg = urban(1, 1, 0);
  const auto sol = brute_force_maxmin(FadingMatrix(1, 1, 1e-11), cfg, 0.01);
  EXPECT_DOUBLE_EQ(sol.eta(0, 0), 1.0);
}

TEST(BruteForce, RefinedGridNeverWorse) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto cfg = urban(3, 2, 40 + seed);
    const auto beta = generate_fading(cfg);
    const auto coarse = brute_force_maxmin(beta, cfg, 0.1);
    const auto fine = brute_force_maxmin(beta, cfg, 0.05);
    EXPECT_GE(fine.t_star, coarse.t_star);
    EXPECT_TRUE(is_feasible(fine.eta, 1e-12));
  }
}

TEST(BruteForce, MatchesPlainEnumeration) {
  // Independent oracle: every grid point of a 2x2 instance, no pruning.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = urban(2, 2, 70 + seed);
    const auto beta = generate_fading(cfg);
    const int n = 20;
    double best = -1.0;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b)
        for (int c = 0; c <= n; ++c)
          for (int d = 0; c + d <= n; ++d) {
            PowerControl eta(2, 2, std::vector<double>{double(a) / n, double(b) / n, double(c) / n, double(d) / n});
            const auto s = testing::oracle_sinr(beta, eta, cfg.rho_d, cfg.rho_u, cfg.tau);
            best = std::max(best, std::min(s[0], s[1]));
          }
    EXPECT_NEAR(brute_force_maxmin(beta, cfg, 1.0 / n).t_star / best, 1.0, 1e-12);
  }
}

TEST(BruteForce, SymmetricUsersNearlyEqual) {
  auto cfg = urban(3, 2, 0);
  FadingMatrix beta(3, 2);
  beta(0, 0) = beta(0, 1) = 3e-11;
  beta(1, 0) = beta(1, 1) = 4e-12;
  beta(2, 0) = beta(2, 1) = 7e-13;
  const auto sol = brute_force_maxmin(beta, cfg, 0.01);
  const auto s = compute_sinr(beta, compute_alpha(beta, cfg.rho_u, cfg.tau), sol.eta, cfg.rho_d);
  const double gap = testing::grid_resolution_gap(beta, equal_power(3, 2), cfg.rho_d, cfg.rho_u, cfg.tau, 0.01);
  EXPECT_LE(std::abs(s[0] - s[1]), gap);
}

TEST(BruteForce, SizeGuard) {
  const auto cfg = urban(4, 2, 0);
  EXPECT_THROW(brute_force_maxmin(FadingMatrix(4, 2, 1e-11), cfg, 0.1), std::invalid_argument);
  const auto small = urban(2, 2, 0);
  EXPECT_THROW(brute_force_maxmin(FadingMatrix(2, 2, 1e-11), small, 0.3), std::invalid_argument);
}

}  // namespace
}  // namespace cfgnn
