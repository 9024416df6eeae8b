// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfgnn/channel.hpp"
#include "cfgnn/checkpoint.hpp"
#include "cfgnn/config.hpp"
#include "cfgnn/dataset.hpp"
#include "cfgnn/gnn.hpp"

namespace cfgnn {

/// Whether the loss sees the decoded powers as-is or after budget projection.
enum class LossTarget { kRaw, kProjected };

struct TrainConfig {
  double learning_rate = 7e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double grad_clip = 0.0;  // global L2 norm; 0 disables
  LossTarget loss_target = LossTarget::kRaw;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  LayerPlan plan;
  RadioParams radio;

  void validate() const;
  /// Stable hash of every field that shapes the training trajectory; epochs and threads are excluded.
  std::string fingerprint() const;
  /// Keys: learning_rate, batch_size, epochs, adam_beta1, adam_beta2, adam_epsilon,
  /// weight_decay, grad_clip, loss_target (raw|projected), val_fraction, seed,
  /// layer_sizes (comma list), heads, radio.*. Unknown keys are rejected.
  static TrainConfig from_config(const KeyValueConfig& cfg);
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (1/K) sum_k (a_k - b_k)^2.
double sinr_mse_loss(const SinrVector& sinr_opt, const SinrVector& sinr_pred);

/// Per-sample data the loss needs, precomputed once.
struct PreparedSample {
  std::shared_ptr<const HeteroGraph> graph;
  std::vector<double> inputs;
  FadingMatrix beta;
  AlphaMatrix alpha;
  SinrVector sinr_opt;
  double rho_d = 1.0;
};

PreparedSample prepare_sample(const Sample& sample, const NormStats& norm, const RadioParams& radio);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // empty when not requested
};

/// SINR-MSE of one sample and, optionally, its exact gradient w.r.t. all parameters.
LossAndGrad sample_loss(const GnnModel& model, const PreparedSample& sample, LossTarget target, bool want_grad);

/// dLoss/d(raw network output) per node for given raw outputs.
std::vector<double> loss_output_gradient(const PreparedSample& sample, std::span<const double> raw,
                                         const NormStats& norm, LossTarget target, double* loss = nullptr);

/// Bias-corrected Adam update; increments state.step first.
void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_ms = 0.0;
};

struct TrainOutputs {
  std::string checkpoint_path;  // latest state, rewritten each epoch; "" disables
  std::string best_path;        // best validation loss so far; "" disables
  std::string metrics_path;     // CSV epoch,train_loss,val_loss,wall_ms; "" disables
  bool keep_epoch_checkpoints = false;  // also write <checkpoint_path>.epochNNN
  std::function<void(const EpochMetrics&, const std::string& checkpoint_json)> on_epoch;
  std::ostream* log = nullptr;
};

struct TrainResult {
  GnnModel model;
  TrainingState state;
  std::vector<EpochMetrics> history;
};

/// Runs epochs state.epoch+1 .. cfg.epochs. When `resume` is given its parameters,
/// normalization and optimizer state are used; otherwise the model is initialized
/// from cfg.seed and normalized on `train_set`.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, const TrainConfig& cfg,
                  const TrainOutputs& outputs = {}, const Checkpoint* resume = nullptr);

/// Mean per-sample loss.
double mean_loss(const GnnModel& model, const std::vector<PreparedSample>& samples, LossTarget target,
                 std::size_t threads);

}  // namespace cfgnn
