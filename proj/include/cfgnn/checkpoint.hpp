// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfgnn/gnn.hpp"

namespace cfgnn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  bool operator==(const AdamState&) const = default;
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainingState {
  std::size_t epoch = 0;  // completed epochs
  AdamState adam;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;

  bool operator==(const TrainingState&) const = default;
};

struct Checkpoint {
  GnnModel model;
  std::optional<TrainingState> training;
};

/// JSON document; doubles are written in shortest round-trip form so loading is bit-exact.
std::string checkpoint_to_json(const GnnModel& model, const TrainingState* training = nullptr);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const GnnModel& model, const TrainingState* training = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cfgnn
