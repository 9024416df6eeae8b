// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/channel.hpp"

#include <cmath>
#include <numbers>

namespace cfgnn {
namespace {

constexpr double kBoltzmann = 1.380649e-23;

}  // namespace

std::string to_string(MorphologyName name) {
  switch (name) {
    case MorphologyName::kUrban:
      return "urban";
    case MorphologyName::kSuburban:
      return "suburban";
    case MorphologyName::kRural:
      return "rural";
  }
  return "unknown";
}

MorphologyName parse_morphology(const std::string& text) {
  if (text == "urban") return MorphologyName::kUrban;
  if (text == "suburban") return MorphologyName::kSuburban;
  if (text == "rural") return MorphologyName::kRural;
  throw std::invalid_argument("unknown morphology '" + text + "'");
}

void Morphology::validate() const {
  if (!(radius_m > 0.0)) throw std::invalid_argument("morphology radius_m must be > 0");
  if (!(shadow_sigma_db >= 0.0)) throw std::invalid_argument("morphology shadow_sigma_db must be >= 0");
  if (!(pl_exponent > 0.0)) throw std::invalid_argument("morphology pl_exponent must be > 0");
  if (!std::isfinite(pl_intercept_db)) throw std::invalid_argument("morphology pl_intercept_db must be finite");
}

Morphology default_morphology(MorphologyName name) {
  switch (name) {
    case MorphologyName::kUrban:
      return {name, 500.0, 3.67, 30.5, 8.0};
    case MorphologyName::kSuburban:
      return {name, 1000.0, 3.91, 19.0, 8.0};
    case MorphologyName::kRural:
      return {name, 4000.0, 3.91, 14.0, 8.0};
  }
  throw std::invalid_argument("unknown morphology");
}

MorphologyTable::MorphologyTable()
    : entries_{default_morphology(MorphologyName::kUrban), default_morphology(MorphologyName::kSuburban),
               default_morphology(MorphologyName::kRural)} {}

void MorphologyTable::apply_overrides(const KeyValueConfig& cfg) {
  for (auto& m : entries_) {
    const std::string p = to_string(m.name) + ".";
    m.radius_m = cfg.get_double(p + "radius_m", m.radius_m);
    m.pl_exponent = cfg.get_double(p + "pl_exponent", m.pl_exponent);
    m.pl_intercept_db = cfg.get_double(p + "pl_intercept_db", m.pl_intercept_db);
    m.shadow_sigma_db = cfg.get_double(p + "shadow_sigma_db", m.shadow_sigma_db);
    m.validate();
  }
}

double RadioParams::noise_power_w() const {
  return kBoltzmann * temperature_k * bandwidth_hz * std::pow(10.0, noise_figure_db / 10.0);
}

void RadioParams::apply_overrides(const KeyValueConfig& cfg) {
  dl_power_w = cfg.get_double("radio.dl_power_w", dl_power_w);
  ul_power_w = cfg.get_double("radio.ul_power_w", ul_power_w);
  bandwidth_hz = cfg.get_double("radio.bandwidth_hz", bandwidth_hz);
  noise_figure_db = cfg.get_double("radio.noise_figure_db", noise_figure_db);
  temperature_k = cfg.get_double("radio.temperature_k", temperature_k);
  if (!(dl_power_w > 0 && ul_power_w > 0 && bandwidth_hz > 0 && temperature_k > 0))
    throw std::invalid_argument("radio parameters must be positive");
}

void ScenarioConfig::validate() const {
  if (num_aps < 1 || num_ues < 1) throw std::invalid_argument("scenario needs M >= 1 and K >= 1");
  if (!(rho_d > 0.0) || !(rho_u > 0.0)) throw std::invalid_argument("scenario SNRs must be > 0");
  if (!(tau >= static_cast<double>(num_ues))) throw std::invalid_argument("pilot length tau must be >= K");
  if (!(min_distance_m >= 0.0)) throw std::invalid_argument("min_distance_m must be >= 0");
  morphology.validate();
}

ScenarioConfig make_scenario(std::size_t num_aps, std::size_t num_ues, const Morphology& morphology,
                             std::uint64_t seed, const RadioParams& radio) {
  ScenarioConfig cfg;
  cfg.num_aps = num_aps;
  cfg.num_ues = num_ues;
  cfg.morphology = morphology;
  cfg.rho_d = radio.rho_d();
  cfg.rho_u = radio.rho_u();
  cfg.tau = static_cast<double>(num_ues);
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

Deployment generate_deployment(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = cfg.morphology.radius_m;
  auto draw = [&] {
    // Inverse-CDF radius gives a uniform density over the disc area.
    const double r = radius * std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    return Point2{r * std::cos(theta), r * std::sin(theta)};
  };
  Deployment dep;
  dep.ap_positions.reserve(cfg.num_aps);
  dep.ue_positions.reserve(cfg.num_ues);
  for (std::size_t m = 0; m < cfg.num_aps; ++m) dep.ap_positions.push_back(draw());
  for (std::size_t k = 0; k < cfg.num_ues; ++k) dep.ue_positions.push_back(draw());
  return dep;
}

double path_loss_db(double distance_m, const Morphology& morphology) {
  if (!(distance_m > 0.0)) throw DomainError("path_loss_db: distance must be > 0");
  return morphology.pl_intercept_db + 10.0 * morphology.pl_exponent * std::log10(distance_m);
}

FadingMatrix generate_fading(const Deployment& dep, const ScenarioConfig& cfg, std::mt19937_64& rng) {
  const std::size_t M = dep.ap_positions.size();
  const std::size_t K = dep.ue_positions.size();
  std::normal_distribution<double> shadow(0.0, 1.0);
  FadingMatrix beta(M, K);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) {
      const double dx = dep.ap_positions[m].x - dep.ue_positions[k].x;
      const double dy = dep.ap_positions[m].y - dep.ue_positions[k].y;
      const double d = std::max(std::hypot(dx, dy), cfg.min_distance_m);
      const double x_db = cfg.morphology.shadow_sigma_db * shadow(rng);
      beta(m, k) = std::pow(10.0, -(path_loss_db(d, cfg.morphology) + x_db) / 10.0);
    }
  }
  return beta;
}

FadingMatrix generate_fading(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const Deployment dep = generate_deployment(cfg, rng);
  return generate_fading(dep, cfg, rng);
}

}  // namespace cfgnn
