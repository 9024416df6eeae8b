// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cfgnn/config.hpp"
#include "cfgnn/types.hpp"

namespace cfgnn {

enum class MorphologyName { kUrban, kSuburban, kRural };

std::string to_string(MorphologyName name);
MorphologyName parse_morphology(const std::string& text);

/// Deployment disc and single-slope log-distance propagation for one morphology.
struct Morphology {
  MorphologyName name = MorphologyName::kUrban;
  double radius_m = 500.0;
  double pl_exponent = 3.67;
  double pl_intercept_db = 30.5;
  double shadow_sigma_db = 8.0;

  void validate() const;
};

/// Built-in parameters: urban 500 m, suburban 1 km, rural 4 km discs.
Morphology default_morphology(MorphologyName name);

/// Table of the three morphologies, overridable from a key=value file with
/// keys such as `suburban.radius_m` or `rural.shadow_sigma_db`.
class MorphologyTable {
 public:
  MorphologyTable();
  const Morphology& get(MorphologyName name) const { return entries_[static_cast<int>(name)]; }
  void apply_overrides(const KeyValueConfig& cfg);

 private:
  std::array<Morphology, 3> entries_;
};

/// Radio budget used to derive the normalized SNRs.
struct RadioParams {
  double dl_power_w = 0.2;
  double ul_power_w = 0.1;
  double bandwidth_hz = 20e6;
  double noise_figure_db = 9.0;
  double temperature_k = 290.0;

  double noise_power_w() const;
  double rho_d() const { return dl_power_w / noise_power_w(); }
  double rho_u() const { return ul_power_w / noise_power_w(); }

  /// Reads `radio.dl_power_w`, `radio.ul_power_w`, `radio.bandwidth_hz`,
  /// `radio.noise_figure_db`, `radio.temperature_k`.
  void apply_overrides(const KeyValueConfig& cfg);
};

struct ScenarioConfig {
  std::size_t num_aps = 1;
  std::size_t num_ues = 1;
  Morphology morphology;
  double rho_d = 1.0;
  double rho_u = 1.0;
  double tau = 1.0;
  double min_distance_m = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scenario with SNRs from `radio` and the default pilot length tau = K.
ScenarioConfig make_scenario(std::size_t num_aps, std::size_t num_ues, const Morphology& morphology,
                             std::uint64_t seed, const RadioParams& radio = {});

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct Deployment {
  std::vector<Point2> ap_positions;
  std::vector<Point2> ue_positions;
  bool operator==(const Deployment&) const = default;
};

/// Area-uniform draw of M APs and K UEs over the morphology disc.
Deployment generate_deployment(const ScenarioConfig& cfg, std::mt19937_64& rng);

/// pl_intercept_db + 10 * pl_exponent * log10(distance_m). Throws DomainError for distance <= 0.
double path_loss_db(double distance_m, const Morphology& morphology);

/// beta = 10^(-(PL(d) + X)/10), X ~ N(0, sigma^2) i.i.d. per (AP, UE); d clamped to min_distance_m.
FadingMatrix generate_fading(const Deployment& dep, const ScenarioConfig& cfg, std::mt19937_64& rng);

/// Deployment then fading from a fresh generator seeded with `cfg.seed`.
FadingMatrix generate_fading(const ScenarioConfig& cfg);

}  // namespace cfgnn
