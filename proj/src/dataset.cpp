// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cfgnn/parallel.hpp"
#include "cfgnn/sinr.hpp"

namespace cfgnn {
namespace {

using nlohmann::json;

std::size_t parse_count(const std::string& text, const std::string& entry) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw std::invalid_argument("scenario '" + entry + "': expected <M>x<K>:<morphology>");
  }
  const std::size_t value = std::stoull(text);
  if (value == 0) throw std::invalid_argument("scenario '" + entry + "': sizes must be positive");
  return value;
}

// Labels one sample; returns an error message on failure.
std::optional<std::string> label_sample(Sample& s, const DatasetOptions& opts) {
  try {
    const ScenarioConfig cfg = sample_config(s, opts);
    MaxMinSolution sol = solve_maxmin(s.beta, cfg, opts.bisection);
    s.sinr_opt = compute_sinr(s.beta, compute_alpha(s.beta, cfg.rho_u, cfg.tau), sol.eta, cfg.rho_d);
    s.eta_opt = std::move(sol.eta);
    return std::nullopt;
  } catch (const std::exception& e) {
    return std::string(e.what());
  }
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return (z ^ (z >> 31)) ^ index;
}

std::string scenario_tag(std::size_t num_aps, std::size_t num_ues, MorphologyName morphology) {
  return std::to_string(num_aps) + "x" + std::to_string(num_ues) + ":" + to_string(morphology);
}

std::vector<ScenarioSpec> parse_scenarios(const std::string& text, std::size_t count) {
  std::vector<ScenarioSpec> out;
  std::stringstream ss(text);
  std::string entry;
  while (std::getline(ss, entry, ',')) {
    const auto colon = entry.find(':');
    const auto x = entry.find('x');
    if (colon == std::string::npos || x == std::string::npos || x > colon) {
      throw std::invalid_argument("scenario '" + entry + "': expected <M>x<K>:<morphology>");
    }
    ScenarioSpec spec;
    spec.num_aps = parse_count(entry.substr(0, x), entry);
    spec.num_ues = parse_count(entry.substr(x + 1, colon - x - 1), entry);
    spec.morphology = parse_morphology(entry.substr(colon + 1));
    spec.count = count;
    out.push_back(spec);
  }
  if (out.empty()) throw std::invalid_argument("scenario list is empty");
  return out;
}

ScenarioConfig sample_config(const Sample& sample, const DatasetOptions& opts) {
  return make_scenario(sample.num_aps, sample.num_ues, opts.morphologies.get(sample.morphology), sample.seed,
                       opts.radio);
}

std::vector<Sample> generate_dataset(const std::vector<ScenarioSpec>& scenarios, std::uint64_t seed,
                                     const DatasetOptions& opts) {
  std::vector<Sample> samples;
  for (const auto& spec : scenarios) {
    for (std::size_t i = 0; i < spec.count; ++i) {
      Sample s;
      s.num_aps = spec.num_aps;
      s.num_ues = spec.num_ues;
      s.morphology = spec.morphology;
      s.seed = sample_seed(seed, samples.size());
      samples.push_back(std::move(s));
    }
  }
  parallel_for(samples.size(), opts.threads, [&](std::size_t i) {
    samples[i].beta = generate_fading(sample_config(samples[i], opts));
  });
  if (opts.label) label_dataset(samples, opts);
  return samples;
}

std::size_t label_dataset(std::vector<Sample>& samples, const DatasetOptions& opts) {
  std::vector<std::optional<std::string>> errors(samples.size());
  parallel_for(samples.size(), opts.threads, [&](std::size_t i) { errors[i] = label_sample(samples[i], opts); });
  std::vector<Sample> kept;
  kept.reserve(samples.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (errors[i]) {
      ++dropped;
      if (opts.log) {
        *opts.log << "skipping sample " << i << " (" << samples[i].tag() << ", seed " << samples[i].seed
                  << "): " << *errors[i] << "\n";
      }
      continue;
    }
    kept.push_back(std::move(samples[i]));
  }
  samples = std::move(kept);
  return dropped;
}

std::string sample_to_json(const Sample& s) {
  json j;
  j["M"] = s.num_aps;
  j["K"] = s.num_ues;
  j["morphology"] = to_string(s.morphology);
  j["seed"] = s.seed;
  j["beta"] = s.beta.values();
  if (s.labeled()) {
    j["eta_opt"] = s.eta_opt.values();
    j["sinr_opt"] = s.sinr_opt;
  }
  return j.dump();
}

Sample sample_from_json(const std::string& line) {
  const json j = json::parse(line);
  Sample s;
  s.num_aps = j.at("M").get<std::size_t>();
  s.num_ues = j.at("K").get<std::size_t>();
  if (s.num_aps == 0 || s.num_ues == 0) throw std::invalid_argument("sample: M and K must be positive");
  s.morphology = parse_morphology(j.at("morphology").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto beta = j.at("beta").get<std::vector<double>>();
  if (beta.size() != s.num_aps * s.num_ues) throw std::invalid_argument("sample: beta must have M*K entries");
  s.beta = FadingMatrix(s.num_aps, s.num_ues);
  std::copy(beta.begin(), beta.end(), s.beta.values().begin());
  if (j.contains("eta_opt") != j.contains("sinr_opt")) {
    throw std::invalid_argument("sample: eta_opt and sinr_opt must appear together");
  }
  if (j.contains("eta_opt")) {
    const auto eta = j.at("eta_opt").get<std::vector<double>>();
    if (eta.size() != beta.size()) throw std::invalid_argument("sample: eta_opt must have M*K entries");
    s.eta_opt = PowerControl(s.num_aps, s.num_ues);
    std::copy(eta.begin(), eta.end(), s.eta_opt.values().begin());
    s.sinr_opt = j.at("sinr_opt").get<std::vector<double>>();
    if (s.sinr_opt.size() != s.num_ues) throw std::invalid_argument("sample: sinr_opt must have K entries");
  }
  return s;
}

void write_dataset(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& s : samples) out << sample_to_json(s) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<Sample> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      samples.push_back(sample_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return samples;
}

double label_consistency_error(const Sample& s, const DatasetOptions& opts) {
  if (!s.labeled()) throw std::invalid_argument("label_consistency_error: sample is unlabeled");
  const ScenarioConfig cfg = sample_config(s, opts);
  const SinrVector sinr = compute_sinr(s.beta, compute_alpha(s.beta, cfg.rho_u, cfg.tau), s.eta_opt, cfg.rho_d);
  double worst = 0.0;
  for (std::size_t k = 0; k < sinr.size(); ++k) {
    const double scale = std::max(std::abs(sinr[k]), std::abs(s.sinr_opt[k]));
    if (scale > 0.0) worst = std::max(worst, std::abs(sinr[k] - s.sinr_opt[k]) / scale);
  }
  return worst;
}

namespace {

struct RunningMoments {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double std() const { return std::max(std::sqrt(std::max(m2 / static_cast<double>(n), 0.0)), kStdFloor); }
};

}  // namespace

NormStats compute_norm_stats(const std::vector<Sample>& samples) {
  RunningMoments in, out;
  for (const auto& s : samples) {
    for (double b : s.beta.values()) in.add(std::log2(b));
    if (!s.labeled()) continue;
    for (double e : s.eta_opt.values()) out.add(std::log2(std::max(e, kPowerFloor)));
  }
  if (in.n == 0 || out.n == 0) throw std::invalid_argument("compute_norm_stats: need at least one labeled sample");
  NormStats stats;
  stats.in_mean = in.mean;
  stats.in_std = in.std();
  stats.out_mean = out.mean;
  stats.out_std = out.std();
  return stats;
}

std::vector<double> normalize_log2(std::span<const double> values, double mean, double std, double floor) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (std::log2(std::max(values[i], floor)) - mean) / std;
  return out;
}

std::vector<double> denormalize_log2(std::span<const double> normalized, double mean, double std) {
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) out[i] = std::exp2(normalized[i] * std + mean);
  return out;
}

Split split_dataset(const std::vector<Sample>& samples, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("split: val_fraction in [0, 1)");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].tag()].push_back(i);
  Split split;
  std::mt19937_64 rng(seed);
  for (auto& [tag, idx] : groups) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      (r < n_val ? split.validation : split.train).push_back(samples[idx[r]]);
    }
  }
  return split;
}

}  // namespace cfgnn
