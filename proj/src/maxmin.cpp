// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/maxmin.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "cfgnn/sinr.hpp"

namespace cfgnn {
namespace {

constexpr int kMaxOuter = 60;
constexpr int kMaxNewton = 200;
constexpr double kBarrierGrowth = 8.0;
constexpr double kCenteringTol = 1e-10;
constexpr double kGapTol = 1e-11;
constexpr double kStallTol = 1e-13;
constexpr double kStallDecrement = 1e-6;

void count(FlopCounter* f, std::uint64_t mul, std::uint64_t add) {
  if (f) {
    f->mul(mul);
    f->add(add);
  }
}

// Phase-one barrier for the cone constraints, written in units scaled by rho_d:
//   g_k(s) = r_k(s) - lin_k(s) / sqrt(t) <= slack,  r_k = sqrt(1 + sum_m b_mk |s_m|^2),
//                                                    lin_k = sum_m sqrt_a_mk s_mk
//   h_m(s) = |s_m|^2 - 1 <= slack.
// g_k <= 0 is the k-th SINR cone divided by sqrt(t) * sqrt(rho_d); h_m <= 0 is the AP budget.
class PhaseOne {
 public:
  PhaseOne(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d, double t, FlopCounter* flops)
      : M_(beta.num_aps()), K_(beta.num_ues()), N_(M_ * K_), inv_sqrt_t_(1.0 / std::sqrt(t)), flops_(flops),
        sqrt_a_(N_), b_(N_), q_(M_), r_(K_), lin_(K_), g_(K_), h_(M_) {
    for (std::size_t i = 0; i < N_; ++i) {
      sqrt_a_[i] = std::sqrt(rho_d * alpha.values()[i]);
      b_[i] = rho_d * beta.values()[i];
    }
    count(flops_, 3 * N_, 0);
  }

  std::size_t num_constraints() const { return M_ + K_; }

  // Fills q_, r_, lin_, g_, h_ at the power amplitudes `s` (length M*K).
  void evaluate(const double* s) {
    for (std::size_t m = 0; m < M_; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K_; ++k) acc += s[m * K_ + k] * s[m * K_ + k];
      q_[m] = acc;
      h_[m] = acc - 1.0;
    }
    for (std::size_t k = 0; k < K_; ++k) {
      double quad = 1.0;
      double lin = 0.0;
      for (std::size_t m = 0; m < M_; ++m) {
        quad += b_[m * K_ + k] * q_[m];
        lin += sqrt_a_[m * K_ + k] * s[m * K_ + k];
      }
      r_[k] = std::sqrt(quad);
      lin_[k] = lin;
      g_[k] = r_[k] - lin * inv_sqrt_t_;
    }
    count(flops_, N_ + 2 * N_ + 2 * K_, N_ + M_ + 2 * N_ + K_);
  }

  double max_violation() const {
    double v = -std::numeric_limits<double>::infinity();
    for (double g : g_) v = std::max(v, g);
    for (double h : h_) v = std::max(v, h);
    return v;
  }

  // Barrier objective mu*slack - sum log(slack - g) - sum log(slack - h); +inf outside the domain.
  double objective(double mu, double slack) const {
    double f = mu * slack;
    for (double g : g_) {
      if (!(slack - g > 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(slack - g);
    }
    for (double h : h_) {
      if (!(slack - h > 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(slack - h);
    }
    count(flops_, 1 + 2 * (M_ + K_), 1 + 2 * (M_ + K_));
    return f;
  }

  // Gradient and (lower triangle of the) Hessian of the barrier objective at (s, slack).
  void derivatives(double mu, const Eigen::VectorXd& x, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    const std::size_t n = N_ + 1;
    const double slack = x[N_];
    grad.setZero(n);
    hess.setZero(n, n);
    grad[N_] = mu;
    auto hss = hess.topLeftCorner(N_, N_).selfadjointView<Eigen::Lower>();
    Eigen::VectorXd u(N_), w(N_);

    for (std::size_t k = 0; k < K_; ++k) {
      const double phi = slack - g_[k];
      const double inv_phi = 1.0 / phi;
      const double inv_r = 1.0 / r_[k];
      for (std::size_t m = 0; m < M_; ++m) {
        const double bk = b_[m * K_ + k];
        for (std::size_t j = 0; j < K_; ++j) {
          const std::size_t idx = m * K_ + j;
          w[idx] = bk * x[idx];
          u[idx] = w[idx] * inv_r;
          hess(idx, idx) += bk * inv_r * inv_phi;
        }
        u[m * K_ + k] -= sqrt_a_[m * K_ + k] * inv_sqrt_t_;
      }
      grad.head(N_) += inv_phi * u;
      grad[N_] -= inv_phi;
      hss.rankUpdate(u, inv_phi * inv_phi);
      hss.rankUpdate(w, -inv_phi * inv_r * inv_r * inv_r);
      hess.block(N_, 0, 1, N_) -= (inv_phi * inv_phi) * u.transpose();
      hess(N_, N_) += inv_phi * inv_phi;
      const std::uint64_t tri = N_ * (N_ + 1) / 2;
      count(flops_, 2 + N_ * 4 + M_ + N_ + 2 * tri + 2 * N_ + N_ + 6, N_ + M_ + N_ + 2 * tri + N_ + 3);
    }
    for (std::size_t m = 0; m < M_; ++m) {
      const double psi = slack - h_[m];
      const double inv_psi = 1.0 / psi;
      for (std::size_t j = 0; j < K_; ++j) {
        const std::size_t a = m * K_ + j;
        grad[a] += 2.0 * x[a] * inv_psi;
        hess(N_, a) -= 2.0 * x[a] * inv_psi * inv_psi;
        hess(a, a) += 2.0 * inv_psi;
        for (std::size_t l = 0; l <= j; ++l) {
          const std::size_t c = m * K_ + l;
          hess(a, c) += 4.0 * x[a] * x[c] * inv_psi * inv_psi;
        }
      }
      grad[N_] -= inv_psi;
      hess(N_, N_) += inv_psi * inv_psi;
      const std::uint64_t tri = K_ * (K_ + 1) / 2;
      count(flops_, 3 + K_ * 7 + 3 * tri, 1 + K_ * 3 + tri + 2);
    }
  }

  void count_factor_and_solve(std::size_t n) const {
    // Cholesky: n^3/6 multiply-adds plus n divisions and n square roots; two triangular solves.
    const std::uint64_t nn = n;
    const std::uint64_t chol = nn * nn * nn / 6;
    count(flops_, chol + 2 * nn + nn * nn, chol + nn * nn);
  }

  PowerControl powers(const double* s) const {
    PowerControl eta(M_, K_);
    for (std::size_t i = 0; i < N_; ++i) eta.values()[i] = s[i] * s[i];
    count(flops_, N_, 0);
    return eta;
  }

  std::size_t dim() const { return N_; }

 private:
  std::size_t M_, K_, N_;
  double inv_sqrt_t_;
  FlopCounter* flops_;
  std::vector<double> sqrt_a_, b_;
  std::vector<double> q_, r_, lin_, g_, h_;
};

// Scales any over-budget AP row back onto the budget.
void clip_rows(PowerControl& eta) {
  for (std::size_t m = 0; m < eta.num_aps(); ++m) {
    double sum = 0.0;
    for (double e : eta.row(m)) sum += e;
    if (sum > 1.0)
      for (double& e : eta.row(m)) e /= sum;
  }
}

}  // namespace

void BisectionConfig::validate() const {
  if (!(t_lo >= 0.0)) throw std::invalid_argument("bisection t_lo must be >= 0");
  if (t_hi > 0.0 && !(t_hi > t_lo)) throw std::invalid_argument("bisection needs t_lo < t_hi");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("bisection rel_tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("bisection max_iter must be >= 1");
  if (!(feas_tol >= 0.0)) throw std::invalid_argument("bisection feas_tol must be >= 0");
  if (!(balance_tol >= 0.0)) throw std::invalid_argument("bisection balance_tol must be >= 0");
  if (balance_max_iter < 0) throw std::invalid_argument("bisection balance_max_iter must be >= 0");
}

std::optional<PowerControl> feasibility_check(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d,
                                              double t, double feas_tol, FlopCounter* flops) {
  if (!(t > 0.0)) throw DomainError("feasibility_check: target must be > 0");
  if (alpha.num_aps() != beta.num_aps() || alpha.num_ues() != beta.num_ues())
    throw DomainError("feasibility_check: shape mismatch");
  const std::size_t K = beta.num_ues();

  PhaseOne p1(beta, alpha, rho_d, t, flops);
  const std::size_t N = p1.dim();
  const std::size_t n = N + 1;
  const double num_c = static_cast<double>(p1.num_constraints());

  Eigen::VectorXd x(n);
  x.head(N).setConstant(std::sqrt(0.9 / static_cast<double>(K)));
  p1.evaluate(x.data());
  x[N] = p1.max_violation() + 1.0;

  auto accept = [&](const Eigen::VectorXd& pt) -> std::optional<PowerControl> {
    PowerControl eta = p1.powers(pt.data());
    clip_rows(eta);
    const SinrVector sinr = compute_sinr(beta, alpha, eta, rho_d);
    if (min_sinr(sinr) >= t * (1.0 - feas_tol)) return eta;
    return std::nullopt;
  };

  if (x[N] - 1.0 < 0.0) return p1.powers(x.data());

  Eigen::VectorXd grad(n), step(n), trial(n);
  Eigen::MatrixXd hess(n, n);
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(n);
  double mu = 1.0;

  for (int outer = 0; outer < kMaxOuter; ++outer) {
    p1.evaluate(x.data());
    double f = p1.objective(mu, x[N]);
    bool centered = false;
    for (int it = 0; it < kMaxNewton; ++it) {
      p1.derivatives(mu, x, grad, hess);
      llt.compute(hess);
      if (llt.info() != Eigen::Success) throw SolverFailure("feasibility_check: barrier Hessian not positive definite");
      step = llt.solve(-grad);
      p1.count_factor_and_solve(n);
      const double decrement = -grad.dot(step);
      count(flops, n, n);
      if (!std::isfinite(decrement)) throw SolverFailure("feasibility_check: non-finite Newton step");
      if (decrement * 0.5 <= kCenteringTol) {
        centered = true;
        break;
      }
      double alpha_ls = 1.0;
      double f_new = std::numeric_limits<double>::infinity();
      for (int ls = 0; ls < 60; ++ls) {
        trial = x + alpha_ls * step;
        count(flops, n, n);
        p1.evaluate(trial.data());
        f_new = p1.objective(mu, trial[N]);
        if (f_new <= f - 0.25 * alpha_ls * decrement) break;
        alpha_ls *= 0.5;
      }
      if (!std::isfinite(f_new)) throw SolverFailure("feasibility_check: line search left the barrier domain");
      if (f_new > f - kStallTol * std::max(1.0, std::abs(f)) && decrement <= kStallDecrement) {
        // The remaining decrease is below what the objective can resolve.
        centered = true;
        if (f_new > f) {
          p1.evaluate(x.data());
          break;
        }
        x = trial;
        break;
      }
      if (f_new > f) throw SolverFailure("feasibility_check: line search found no decrease");
      x = trial;
      f = f_new;
      if (x[N] < 0.0) return p1.powers(x.data());
    }
    if (!centered) throw SolverFailure("feasibility_check: centering did not converge");
    const double gap = num_c / mu;
    if (x[N] - gap > kGapTol) return std::nullopt;
    if (gap < kGapTol) return accept(x);
    mu *= kBarrierGrowth;
  }
  throw SolverFailure("feasibility_check: barrier iterations exhausted");
}

double sinr_upper_bound(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d) {
  const std::size_t M = beta.num_aps();
  const std::size_t K = beta.num_ues();
  double no_interference = 0.0;
  double cauchy_schwarz = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    double coherent = 0.0;
    double ratio = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      coherent += std::sqrt(alpha(m, k));
      if (beta(m, k) > 0.0) ratio += alpha(m, k) / beta(m, k);
    }
    no_interference = std::max(no_interference, rho_d * coherent * coherent);
    cauchy_schwarz = std::min(cauchy_schwarz, ratio);
  }
  return std::min(no_interference, cauchy_schwarz);
}

MaxMinSolution solve_maxmin(const FadingMatrix& beta, const ScenarioConfig& cfg, const BisectionConfig& bis,
                            FlopCounter* flops) {
  bis.validate();
  if (beta.num_aps() != cfg.num_aps || beta.num_ues() != cfg.num_ues)
    throw std::invalid_argument("solve_maxmin: fading matrix does not match the scenario size");
  for (double b : beta.values())
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("solve_maxmin: fading coefficients must be positive");

  const AlphaMatrix alpha = compute_alpha(beta, cfg.rho_u, cfg.tau);
  std::optional<PowerControl> best;
  double lo = bis.t_lo;
  if (lo <= 0.0) {
    best = equal_power(cfg.num_aps, cfg.num_ues);
    lo = min_sinr(compute_sinr(beta, alpha, *best, cfg.rho_d));
    count(flops, 3 * beta.size() + cfg.num_ues, 3 * beta.size());
    if (!(lo > 0.0)) throw BracketError("solve_maxmin: equal power sharing gives zero SINR");
  }
  double hi = bis.t_hi > 0.0 ? bis.t_hi : sinr_upper_bound(beta, alpha, cfg.rho_d);
  if (!(hi > lo)) {
    if (!best) throw BracketError("solve_maxmin: t_lo is above the SINR upper bound");
    hi = lo;  // equal sharing already meets the upper bound
  }
  if (!best) {
    best = feasibility_check(beta, alpha, cfg.rho_d, lo, bis.feas_tol, flops);
    if (!best) throw BracketError("solve_maxmin: t_lo is infeasible");
  }

  MaxMinSolution sol;
  while (!(hi - lo <= bis.rel_tol * lo) && sol.iterations < bis.max_iter) {
    const double mid = 0.5 * (lo + hi);
    ++sol.iterations;
    if (auto eta = feasibility_check(beta, alpha, cfg.rho_d, mid, bis.feas_tol, flops)) {
      lo = mid;
      best = std::move(eta);
    } else {
      hi = mid;
    }
  }
  sol.converged = hi - lo <= bis.rel_tol * lo;
  sol.eta = std::move(*best);
  if (bis.balance_tol > 0.0) balance_sinr(beta, alpha, cfg.rho_d, sol.eta, bis.balance_tol, bis.balance_max_iter, flops);
  sol.t_star = min_sinr(compute_sinr(beta, alpha, sol.eta, cfg.rho_d));
  return sol;
}

int balance_sinr(const FadingMatrix& beta, const AlphaMatrix& alpha, double rho_d, PowerControl& eta, double tol,
                 int max_iter, FlopCounter* flops) {
  const std::size_t M = eta.num_aps();
  const std::size_t K = eta.num_ues();
  for (int it = 0; it < max_iter; ++it) {
    const SinrVector sinr = compute_sinr(beta, alpha, eta, rho_d);
    count(flops, 3 * M * K + K, 3 * M * K);
    const double low = min_sinr(sinr);
    const double high = *std::max_element(sinr.begin(), sinr.end());
    if (!(low > 0.0) || high - low <= tol * low) return it;
    for (std::size_t k = 0; k < K; ++k) {
      const double scale = low / sinr[k];
      for (std::size_t m = 0; m < M; ++m) eta(m, k) *= scale;
    }
    count(flops, M * K + K, 0);
  }
  return max_iter;
}

PowerControl equal_power(std::size_t num_aps, std::size_t num_ues) {
  return PowerControl(num_aps, num_ues, 1.0 / static_cast<double>(num_ues));
}

}  // namespace cfgnn
