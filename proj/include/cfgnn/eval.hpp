// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cfgnn/channel.hpp"
#include "cfgnn/dataset.hpp"
#include "cfgnn/gnn.hpp"

namespace cfgnn {

inline constexpr const char* kMethodOptimal = "optimal";
inline constexpr const char* kMethodGnn = "gnn";
inline constexpr const char* kMethodEqualPower = "equal_power";

struct EvalReport {
  std::string scenario;
  std::size_t num_samples = 0;
  // method -> per-user spectral efficiencies pooled over all samples, ascending
  std::map<std::string, std::vector<double>> cdf;
  double loss_at_median = 0.0;  // percent, GNN vs optimal
  double likely95_loss = 0.0;   // percent at the 5th percentile
  double equal_power_loss_at_median = 0.0;
  double equal_power_likely95_loss = 0.0;
  // max over samples of min-SINR(GNN) / min-SINR(optimal)
  double worst_min_sinr_ratio = 0.0;
  double gnn_flops = 0.0;
  double solver_flops = 0.0;
};

/// Linear interpolation between order statistics, q in [0, 1].
double percentile(const std::vector<double>& sorted, double q);

/// (ref - x) / ref * 100 at quantile q of two sorted samples.
double percent_loss(const std::vector<double>& reference, const std::vector<double>& candidate, double q);

using PowerPredictor = std::function<PowerControl(const Sample&)>;

struct EvalOptions {
  RadioParams radio;
  std::size_t threads = 0;
  bool count_flops = true;
};

/// Pools every user of every sample into one CDF per method. `predictor` stands in
/// for the GNN; `model` (may be null) is only used for the FLOP count.
EvalReport evaluate_predictor(const PowerPredictor& predictor, const GnnModel* model, const std::vector<Sample>& samples,
                              const EvalOptions& opts);

EvalReport evaluate(const GnnModel& model, const std::vector<Sample>& samples, const EvalOptions& opts);

/// One report per scenario tag, in tag order.
std::vector<EvalReport> evaluate_by_scenario(const GnnModel& model, const std::vector<Sample>& samples,
                                             const EvalOptions& opts);

struct FlopComparison {
  double gnn = 0.0;
  double solver = 0.0;
};

/// GNN inference (instrumented) vs one full bisection solve of a random urban instance.
FlopComparison flop_comparison(std::size_t num_aps, std::size_t num_ues, const GnnModel& model, std::uint64_t seed,
                               const RadioParams& radio = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

void export_cdf_csv(const EvalReport& report, const std::string& path);
void export_summary_csv(const std::vector<EvalReport>& reports, const std::string& path);
/// Summary plus the equal-power baseline, median SEs and the min-SINR sanity ratio.
void export_details_csv(const std::vector<EvalReport>& reports, const std::string& path);

/// %.9g
std::string format_float(double v);

}  // namespace cfgnn
