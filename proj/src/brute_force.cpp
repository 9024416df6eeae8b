// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfgnn/maxmin.hpp"
#include "cfgnn/sinr.hpp"

namespace cfgnn {
namespace {

// Depth-first enumeration of grid power rows, AP by AP. Partial coherent sums
// and interference denominators are carried down the tree; a subtree is cut
// when a per-user SINR upper bound cannot beat the incumbent.
class GridSearch {
 public:
  GridSearch(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d, int levels)
      : M_(beta.num_aps()), K_(beta.num_ues()), levels_(levels), sqrt_a_(M_ * K_), b_(M_ * K_),
        ratio_tail_((M_ + 1) * K_, 0.0), sqrt_a_tail_((M_ + 1) * K_, 0.0), sqrt_level_(levels + 1),
        coherent_((M_ + 1) * K_, 0.0), denom_((M_ + 1) * K_, 1.0), choice_(M_, 0), best_choice_(M_, 0) {
    for (std::size_t i = 0; i < M_ * K_; ++i) {
      sqrt_a_[i] = std::sqrt(rho_d * alpha.values()[i]);
      b_[i] = rho_d * beta.values()[i];
    }
    for (std::size_t m = M_; m-- > 0;) {
      for (std::size_t k = 0; k < K_; ++k) {
        const double a = sqrt_a_[m * K_ + k];
        const double b = b_[m * K_ + k];
        ratio_tail_[m * K_ + k] = ratio_tail_[(m + 1) * K_ + k] + (b > 0.0 ? a * a / b : 0.0);
        sqrt_a_tail_[m * K_ + k] = sqrt_a_tail_[(m + 1) * K_ + k] + a;
      }
    }
    for (int j = 0; j <= levels; ++j) sqrt_level_[j] = std::sqrt(static_cast<double>(j) / levels);
    std::vector<int> row(K_, 0);
    enumerate_rows(row, 0, levels);
    std::stable_sort(rows_.begin(), rows_.end(), [](const Row& x, const Row& y) { return x.total > y.total; });
  }

  void seed_incumbent(double value, const std::vector<std::size_t>& choice) {
    best_ = value;
    best_choice_ = choice;
  }

  void run() { descend(0); }

  double best() const { return best_; }
  long long leaves() const { return leaves_; }
  const std::vector<std::size_t>& best_choice() const { return best_choice_; }

  PowerControl powers(const std::vector<std::size_t>& choice) const {
    PowerControl eta(M_, K_);
    for (std::size_t m = 0; m < M_; ++m)
      for (std::size_t k = 0; k < K_; ++k)
        eta(m, k) = static_cast<double>(rows_[choice[m]].levels[k]) / levels_;
    return eta;
  }

  // Index of the row with the given integer levels (used to map a coarse grid onto this one).
  std::size_t find_row(const std::vector<int>& levels) const {
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (rows_[i].levels == levels) return i;
    throw std::logic_error("grid row not found");
  }

  const std::vector<int>& row_levels(std::size_t i) const { return rows_[i].levels; }

 private:
  struct Row {
    std::vector<int> levels;
    int total = 0;
  };

  void enumerate_rows(std::vector<int>& row, std::size_t k, int budget) {
    if (k == K_) {
      rows_.push_back({row, levels_ - budget});
      return;
    }
    for (int j = 0; j <= budget; ++j) {
      row[k] = j;
      enumerate_rows(row, k + 1, budget - j);
    }
    row[k] = 0;
  }

  double upper_bound(std::size_t m) const {
    double bound = std::numeric_limits<double>::infinity();
    const double* c = &coherent_[m * K_];
    const double* d = &denom_[m * K_];
    for (std::size_t k = 0; k < K_; ++k) {
      double ub;
      if (m + 1 == M_) {
        // One AP left: maximise (c + sqrt(a) s)^2 / (d + b s^2) over s in [0, 1].
        const double a = sqrt_a_[m * K_ + k];
        const double b = b_[m * K_ + k];
        double s = 1.0;
        if (c[k] > 0.0 && b > 0.0) s = std::min(1.0, a * d[k] / (c[k] * b));
        const double num = c[k] + a * s;
        ub = num * num / (d[k] + b * s * s);
      } else {
        // Cauchy-Schwarz over the remaining APs, and the interference-free bound.
        const double cs = c[k] * c[k] / d[k] + ratio_tail_[m * K_ + k];
        const double full = c[k] + sqrt_a_tail_[m * K_ + k];
        ub = std::min(cs, full * full / d[k]);
      }
      bound = std::min(bound, ub);
    }
    return std::min(bound, split_bound(m));
  }

  // Dropping the interference of the undecided APs leaves a concave max-min
  // problem in sqrt(eta). Its Lagrangian dual for user weights w gives
  //   sqrt(min_k SINR_k) <= sum_k w_k c_k / sqrt(d_k) + sum_m ||(w_k sqrt(a_mk) / sqrt(d_k))_k||
  // for every w on the simplex; the per-AP maximum uses the whole budget.
  double dual_value(std::size_t m, const double* w) const {
    const double* c = &coherent_[m * K_];
    const double* d = &denom_[m * K_];
    double v = 0.0;
    for (std::size_t k = 0; k < K_; ++k) v += w[k] * c[k] / std::sqrt(d[k]);
    for (std::size_t j = m; j < M_; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < K_; ++k) {
        const double t = w[k] * sqrt_a_[j * K_ + k] / std::sqrt(d[k]);
        sq += t * t;
      }
      v += std::sqrt(sq);
    }
    return v;
  }

  double split_bound(std::size_t m) const {
    if (K_ != 2) return std::numeric_limits<double>::infinity();
    // Golden-section search on w = (x, 1 - x); any x yields a valid bound.
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
    double w1[2] = {x1, 1.0 - x1}, w2[2] = {x2, 1.0 - x2};
    double f1 = dual_value(m, w1), f2 = dual_value(m, w2);
    for (int it = 0; it < 24; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        w1[0] = x1;
        w1[1] = 1.0 - x1;
        f1 = dual_value(m, w1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        w2[0] = x2;
        w2[1] = 1.0 - x2;
        f2 = dual_value(m, w2);
      }
    }
    const double v = std::min(f1, f2);
    return v * v;
  }

  void descend(std::size_t m) {
    if (m == M_) {
      ++leaves_;
      double v = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K_; ++k) {
        const double c = coherent_[m * K_ + k];
        v = std::min(v, c * c / denom_[m * K_ + k]);
      }
      if (v > best_) {
        best_ = v;
        best_choice_ = choice_;
      }
      return;
    }
    if (upper_bound(m) <= best_) return;
    const double* c = &coherent_[m * K_];
    const double* d = &denom_[m * K_];
    double* c_next = &coherent_[(m + 1) * K_];
    double* d_next = &denom_[(m + 1) * K_];
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row& row = rows_[r];
      const double p = static_cast<double>(row.total) / levels_;
      for (std::size_t k = 0; k < K_; ++k) {
        c_next[k] = c[k] + sqrt_a_[m * K_ + k] * sqrt_level_[row.levels[k]];
        d_next[k] = d[k] + b_[m * K_ + k] * p;
      }
      choice_[m] = r;
      descend(m + 1);
    }
  }

  std::size_t M_, K_;
  int levels_;
  std::vector<double> sqrt_a_, b_, ratio_tail_, sqrt_a_tail_, sqrt_level_;
  std::vector<Row> rows_;
  std::vector<double> coherent_, denom_;
  std::vector<std::size_t> choice_, best_choice_;
  double best_ = -1.0;
  long long leaves_ = 0;
};

MaxMinSolution search(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d, int levels) {
  GridSearch grid(beta, alpha, rho_d, levels);
  // A coarser nested grid provides an achievable incumbent, which lets the
  // bounds prune from the start without changing the optimum found.
  if (levels >= 20 && levels % 5 == 0) {
    const MaxMinSolution coarse = search(beta, alpha, rho_d, levels / 5);
    std::vector<std::size_t> choice(beta.num_aps());
    for (std::size_t m = 0; m < beta.num_aps(); ++m) {
      std::vector<int> lv(beta.num_ues());
      for (std::size_t k = 0; k < beta.num_ues(); ++k)
        lv[k] = static_cast<int>(std::lround(coarse.eta(m, k) * levels));
      choice[m] = grid.find_row(lv);
    }
    grid.seed_incumbent(coarse.t_star, choice);
  }
  grid.run();
  MaxMinSolution sol;
  sol.eta = grid.powers(grid.best_choice());
  sol.t_star = min_sinr(compute_sinr(beta, alpha, sol.eta, rho_d));
  sol.iterations = static_cast<int>(std::min<long long>(grid.leaves(), std::numeric_limits<int>::max()));
  sol.converged = true;
  return sol;
}

}  // namespace

MaxMinSolution brute_force_maxmin(const FadingMatrix& beta, const ScenarioConfig& cfg, double grid_step) {
  const std::size_t M = beta.num_aps();
  const std::size_t K = beta.num_ues();
  if (M * K > 6) throw std::invalid_argument("brute_force_maxmin: exhaustive grid limited to M*K <= 6");
  if (M != cfg.num_aps || K != cfg.num_ues) throw std::invalid_argument("brute_force_maxmin: size mismatch");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw std::invalid_argument("brute_force_maxmin: step in (0, 1]");
  const long levels = std::lround(1.0 / grid_step);
  if (std::abs(static_cast<double>(levels) * grid_step - 1.0) > 1e-9)
    throw std::invalid_argument("brute_force_maxmin: grid step must divide 1");
  const AlphaMatrix alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
  // Strong APs first: a weak AP barely moves any SINR, so deciding it early
  // multiplies the tree by near-ties that no bound can separate.
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> strength(M, 0.0);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) strength[m] += alpha(m, k);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return strength[x] > strength[y]; });
  FadingMatrix beta_p(M, K);
  AlphaMatrix alpha_p(M, K);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      beta_p(i, k) = beta(order[i], k);
      alpha_p(i, k) = alpha(order[i], k);
    }
  }
  MaxMinSolution sol = search(beta_p, alpha_p, cfg.rho_d, static_cast<int>(levels));
  PowerControl eta(M, K);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < K; ++k) eta(order[i], k) = sol.eta(i, k);
  sol.eta = std::move(eta);
  sol.t_star = min_sinr(compute_sinr(beta, alpha, sol.eta, cfg.rho_d));
  return sol;
}

}  // namespace cfgnn
