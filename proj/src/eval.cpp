// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "cfgnn/maxmin.hpp"
#include "cfgnn/parallel.hpp"
#include "cfgnn/sinr.hpp"

namespace cfgnn {
namespace {

struct SampleResult {
  std::vector<double> se[3];
  double ratio = 0.0;
};

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile: q must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percent_loss(const std::vector<double>& reference, const std::vector<double>& candidate, double q) {
  const double ref = percentile(reference, q);
  if (!(ref > 0.0)) throw std::domain_error("percent_loss: reference percentile must be positive");
  return (ref - percentile(candidate, q)) / ref * 100.0;
}

EvalReport evaluate_predictor(const PowerPredictor& predictor, const GnnModel* model, const std::vector<Sample>& samples,
                              const EvalOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  std::vector<SampleResult> results(samples.size());
  parallel_for(samples.size(), opts.threads, [&](std::size_t i) {
    const Sample& s = samples[i];
    if (!s.labeled()) throw std::invalid_argument("evaluate: sample " + std::to_string(i) + " is unlabeled");
    const AlphaMatrix alpha = compute_alpha(s.beta, opts.radio.rho_u(), static_cast<double>(s.num_ues));
    const double rho_d = opts.radio.rho_d();
    const SinrVector opt = compute_sinr(s.beta, alpha, s.eta_opt, rho_d);
    const SinrVector gnn = compute_sinr(s.beta, alpha, predictor(s), rho_d);
    const SinrVector eq = compute_sinr(s.beta, alpha, equal_power(s.num_aps, s.num_ues), rho_d);
    results[i].se[0] = spectral_efficiency(opt);
    results[i].se[1] = spectral_efficiency(gnn);
    results[i].se[2] = spectral_efficiency(eq);
    results[i].ratio = min_sinr(gnn) / min_sinr(opt);
  });

  EvalReport report;
  report.scenario = samples.front().tag();
  for (const auto& s : samples) {
    if (s.tag() != report.scenario) {
      report.scenario = "mixed";
      break;
    }
  }
  report.num_samples = samples.size();
  const char* methods[3] = {kMethodOptimal, kMethodGnn, kMethodEqualPower};
  for (int m = 0; m < 3; ++m) {
    std::vector<double>& pooled = report.cdf[methods[m]];
    for (const auto& r : results) pooled.insert(pooled.end(), r.se[m].begin(), r.se[m].end());
    std::sort(pooled.begin(), pooled.end());
  }
  for (const auto& r : results) report.worst_min_sinr_ratio = std::max(report.worst_min_sinr_ratio, r.ratio);
  const auto& opt = report.cdf[kMethodOptimal];
  report.loss_at_median = percent_loss(opt, report.cdf[kMethodGnn], 0.5);
  report.likely95_loss = percent_loss(opt, report.cdf[kMethodGnn], 0.05);
  report.equal_power_loss_at_median = percent_loss(opt, report.cdf[kMethodEqualPower], 0.5);
  report.equal_power_likely95_loss = percent_loss(opt, report.cdf[kMethodEqualPower], 0.05);

  if (opts.count_flops && model) {
    const Sample& first = samples.front();
    report.gnn_flops = count_flops(first.num_aps, first.num_ues, *model, FlopMode::kInstrumented).total();
    DatasetOptions dopts;
    dopts.radio = opts.radio;
    FlopCounter solver;
    solve_maxmin(first.beta, sample_config(first, dopts), {}, &solver);
    report.solver_flops = solver.total();
  }
  return report;
}

EvalReport evaluate(const GnnModel& model, const std::vector<Sample>& samples, const EvalOptions& opts) {
  return evaluate_predictor([&](const Sample& s) { return predict_powers(model, s.beta); }, &model, samples, opts);
}

std::vector<EvalReport> evaluate_by_scenario(const GnnModel& model, const std::vector<Sample>& samples,
                                             const EvalOptions& opts) {
  std::map<std::string, std::vector<Sample>> groups;
  for (const auto& s : samples) groups[s.tag()].push_back(s);
  if (groups.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  std::vector<EvalReport> reports;
  for (const auto& [tag, members] : groups) reports.push_back(evaluate(model, members, opts));
  return reports;
}

FlopComparison flop_comparison(std::size_t num_aps, std::size_t num_ues, const GnnModel& model, std::uint64_t seed,
                               const RadioParams& radio) {
  FlopComparison out;
  out.gnn = count_flops(num_aps, num_ues, model, FlopMode::kInstrumented).total();
  const ScenarioConfig cfg = make_scenario(num_aps, num_ues, default_morphology(MorphologyName::kUrban), seed, radio);
  FlopCounter solver;
  solve_maxmin(generate_fading(cfg), cfg, {}, &solver);
  out.solver = solver.total();
  return out;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_linear: need two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_linear: x has no spread");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

void export_cdf_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "se_bits_per_s_hz,cdf,method\n";
  for (const char* method : {kMethodOptimal, kMethodGnn, kMethodEqualPower}) {
    const auto it = report.cdf.find(method);
    if (it == report.cdf.end()) continue;
    const auto& values = it->second;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << format_float(values[i]) << ","
          << format_float(static_cast<double>(i + 1) / static_cast<double>(values.size())) << "," << method << "\n";
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void export_summary_csv(const std::vector<EvalReport>& reports, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "scenario,gnn_flops,solver_flops,loss_median_pct,likely95_loss_pct\n";
  for (const auto& r : reports) {
    out << r.scenario << "," << format_float(r.gnn_flops) << "," << format_float(r.solver_flops) << ","
        << format_float(r.loss_at_median) << "," << format_float(r.likely95_loss) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void export_details_csv(const std::vector<EvalReport>& reports, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "scenario,num_samples,loss_median_pct,likely95_loss_pct,equal_power_loss_median_pct,"
         "equal_power_likely95_loss_pct,median_se_optimal,median_se_gnn,median_se_equal_power,worst_min_sinr_ratio\n";
  for (const auto& r : reports) {
    out << r.scenario << "," << r.num_samples << "," << format_float(r.loss_at_median) << ","
        << format_float(r.likely95_loss) << "," << format_float(r.equal_power_loss_at_median) << ","
        << format_float(r.equal_power_likely95_loss);
    for (const char* method : {kMethodOptimal, kMethodGnn, kMethodEqualPower}) {
      out << "," << format_float(percentile(r.cdf.at(method), 0.5));
    }
    out << "," << format_float(r.worst_min_sinr_ratio) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace cfgnn
