// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfgnn/channel.hpp"
#include "cfgnn/gnn.hpp"
#include "cfgnn/maxmin.hpp"
#include "cfgnn/types.hpp"

namespace cfgnn {

struct ScenarioSpec {
  std::size_t num_aps = 0;
  std::size_t num_ues = 0;
  MorphologyName morphology = MorphologyName::kUrban;
  std::size_t count = 0;

  bool operator==(const ScenarioSpec&) const = default;
};

/// "<M>x<K>:<morphology>" entries separated by commas, each given `count` samples.
std::vector<ScenarioSpec> parse_scenarios(const std::string& text, std::size_t count);
std::string scenario_tag(std::size_t num_aps, std::size_t num_ues, MorphologyName morphology);

struct Sample {
  std::size_t num_aps = 0;
  std::size_t num_ues = 0;
  MorphologyName morphology = MorphologyName::kUrban;
  std::uint64_t seed = 0;
  FadingMatrix beta;
  PowerControl eta_opt;
  SinrVector sinr_opt;

  bool labeled() const { return !sinr_opt.empty(); }
  std::string tag() const { return scenario_tag(num_aps, num_ues, morphology); }
};

struct DatasetOptions {
  RadioParams radio;
  MorphologyTable morphologies;
  BisectionConfig bisection;
  bool label = true;
  std::size_t threads = 0;
  std::ostream* log = nullptr;
};

/// Channel configuration that reproduces a sample's fading from its seed.
ScenarioConfig sample_config(const Sample& sample, const DatasetOptions& opts);

/// Seed of sample `index`: the base seed is scrambled once (splitmix64) and XORed with
/// the index, so datasets drawn from nearby base seeds do not share samples.
std::uint64_t sample_seed(std::uint64_t base, std::uint64_t index);

/// Sample i (counted across all scenarios in order) draws its fading from sample_seed(seed, i).
/// Samples whose solve fails are dropped and reported to opts.log.
std::vector<Sample> generate_dataset(const std::vector<ScenarioSpec>& scenarios, std::uint64_t seed,
                                     const DatasetOptions& opts);

/// Solves every sample in place; failures are removed. Returns the number removed.
std::size_t label_dataset(std::vector<Sample>& samples, const DatasetOptions& opts);

std::string sample_to_json(const Sample& sample);
Sample sample_from_json(const std::string& line);
void write_dataset(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> read_dataset(const std::string& path);

/// Relative mismatch between the stored SINR and a recomputation from (beta, eta_opt).
double label_consistency_error(const Sample& sample, const DatasetOptions& opts);

inline constexpr double kStdFloor = 1e-8;

/// Log2 statistics of beta (inputs) and eta_opt floored at kPowerFloor (outputs).
NormStats compute_norm_stats(const std::vector<Sample>& samples);
std::vector<double> normalize_log2(std::span<const double> values, double mean, double std, double floor = 0.0);
std::vector<double> denormalize_log2(std::span<const double> normalized, double mean, double std);

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};

/// Per-scenario seeded shuffle, then the first round(val_fraction * n) samples of each go to validation.
Split split_dataset(const std::vector<Sample>& samples, double val_fraction, std::uint64_t seed);

}  // namespace cfgnn
