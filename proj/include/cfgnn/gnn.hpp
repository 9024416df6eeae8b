// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfgnn/graph.hpp"
#include "cfgnn/types.hpp"

namespace cfgnn {

/// Node feature widths from input to output; T = sizes.size() - 1 transitions.
/// The first T-1 transitions are attention layers, the last a linear read-out.
struct LayerPlan {
  std::vector<std::size_t> sizes{1, 8, 8, 16, 16, 32, 16, 16, 8, 8, 1};
  std::size_t heads = 2;

  std::size_t transitions() const { return sizes.size() - 1; }
  std::size_t attention_layers() const { return sizes.size() - 2; }
  std::size_t head_width(std::size_t layer) const { return sizes[layer + 1] / heads; }
  void validate() const;
  bool operator==(const LayerPlan&) const = default;
};

/// Log2-domain standardization statistics for fading inputs and power outputs.
struct NormStats {
  double in_mean = 0.0;
  double in_std = 1.0;
  double out_mean = 0.0;
  double out_std = 1.0;

  void validate() const;
  bool operator==(const NormStats&) const = default;
};

/// The four per-head maps of one edge type: the self term added to the
/// aggregate, the neighbor value, and the query/key pair scoring neighbors.
enum class MapRole { kSelf = 0, kValue = 1, kQuery = 2, kKey = 3 };
inline constexpr int kNumMapRoles = 4;

/// Offsets of a dense map y = W x + b inside the flat parameter vector.
/// W is out x in, row-major.
struct LinearRef {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

/// All trainable parameters live in one flat vector; `tensors()` names the
/// slices, e.g. "layer3.ue.head1.query.weight" or "layer0.norm.gain".
class GnnModel {
 public:
  explicit GnnModel(LayerPlan plan = {});

  const LayerPlan& plan() const { return plan_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(const std::string& name) const;

  LinearRef map(std::size_t layer, EdgeType type, std::size_t head, MapRole role) const;
  std::size_t norm_gain(std::size_t layer) const { return norm_[layer][0]; }
  std::size_t norm_bias(std::size_t layer) const { return norm_[layer][1]; }
  LinearRef output() const { return output_; }

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases 0, norm gain 1 and bias 0.
  void initialize(std::uint64_t seed);

  NormStats norm;
  std::string fingerprint;

 private:
  std::size_t add_tensor(const std::string& name, std::size_t rows, std::size_t cols);

  LayerPlan plan_;
  std::vector<double> params_;
  std::vector<TensorInfo> tensors_;
  // [layer][type][head][role]
  std::vector<std::array<std::vector<std::array<LinearRef, kNumMapRoles>>, kNumEdgeTypes>> maps_;
  std::vector<std::array<std::size_t, 2>> norm_;
  LinearRef output_;
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kPowerFloor = 1e-12;

/// log2(beta), standardized with the input statistics; node order i = m*K + k.
std::vector<double> encode_fading(const FadingMatrix& beta, const NormStats& norm);

/// Softmax of q.k_j / sqrt(d) over the keys, with max-logit subtraction.
std::vector<double> softmax_scores(std::span<const double> query, std::span<const std::vector<double>> keys,
                                   std::size_t head_width);

/// Attention weights of node i over `neighbors` for one layer, edge type and head.
std::vector<double> attention_coeffs(std::span<const double> h_i, std::span<const std::vector<double>> neighbors,
                                     const GnnModel& model, std::size_t layer, EdgeType type, std::size_t head);

/// f_type(i): per head, self map of h_i plus the attention-weighted value maps
/// of the typed neighbors; heads concatenated. H is row-major num_nodes x width.
std::vector<double> typed_aggregate(const HeteroGraph& graph, std::size_t node, EdgeType type,
                                    std::span<const double> features, const GnnModel& model, std::size_t layer);

/// h(t+1) = LayerNorm(ReLU(f_AP + f_UE)) for every node.
std::vector<double> layer_forward(const HeteroGraph& graph, std::span<const double> features, const GnnModel& model,
                                  std::size_t layer, FlopCounter* flops = nullptr);

/// Intermediates of one attention layer kept for the reverse pass.
struct LayerTrace {
  std::vector<double> input;
  // [type][head][role]: num_nodes x head_width activations of the four maps.
  std::vector<std::vector<double>> maps[kNumEdgeTypes];
  // [type][head]: attention weights aligned with the neighbor lists.
  std::vector<std::vector<double>> attention[kNumEdgeTypes];
  std::vector<double> pre_activation;
  std::vector<double> normalized;
  std::vector<double> inv_std;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  std::vector<double> last_hidden;
  std::vector<double> output;
};

/// Raw per-node outputs (normalized log2 domain) for normalized inputs.
std::vector<double> forward(const HeteroGraph& graph, std::span<const double> inputs, const GnnModel& model,
                            FlopCounter* flops = nullptr);

/// Forward pass that records everything the reverse pass needs.
ForwardTrace forward_trace(const HeteroGraph& graph, std::span<const double> inputs, const GnnModel& model);

/// Gradient of a scalar loss w.r.t. every parameter, given dLoss/d(output) per node.
std::vector<double> backward(const HeteroGraph& graph, const GnnModel& model, const ForwardTrace& trace,
                             std::span<const double> d_output);

/// eta = 2^(x * out_std + out_mean) per node, no budget projection.
PowerControl decode_powers(std::span<const double> raw, std::size_t num_aps, std::size_t num_ues,
                           const NormStats& norm, FlopCounter* flops = nullptr);

/// Decoded powers, negatives clamped to zero, over-budget AP rows divided by their sum.
PowerControl project_powers(std::span<const double> raw, std::size_t num_aps, std::size_t num_ues,
                            const NormStats& norm, FlopCounter* flops = nullptr);

/// Budget projection alone (clamp, then row renormalization).
void project_onto_budget(PowerControl& eta, FlopCounter* flops = nullptr);

/// Encode, forward, project.
PowerControl predict_powers(const GnnModel& model, const FadingMatrix& beta);

enum class FlopMode { kInstrumented, kAnalytic };

/// FLOPs of one inference (forward pass and projection) on an M x K instance.
FlopCounter count_flops(std::size_t num_aps, std::size_t num_ues, const GnnModel& model, FlopMode mode);

}  // namespace cfgnn
