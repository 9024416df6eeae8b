// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnn_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfgnn::detail {
namespace {

// Softmax-weighted sum of neighbor values added into `o`; writes the weights to `w`.
void attend(const double* query, const double* keys, const double* values, std::span<const std::size_t> nbrs,
            std::size_t d, double scale, double* w, double* o, FlopCounter* flops) {
  const std::size_t n = nbrs.size();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double* key = keys + nbrs[idx] * d;
    double dot = 0.0;
    for (std::size_t r = 0; r < d; ++r) dot += query[r] * key[r];
    w[idx] = dot * scale;
    top = std::max(top, w[idx]);
  }
  double sum = 0.0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    w[idx] = std::exp(w[idx] - top);
    sum += w[idx];
  }
  const double inv = 1.0 / sum;
  for (std::size_t idx = 0; idx < n; ++idx) w[idx] *= inv;
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double* value = values + nbrs[idx] * d;
    for (std::size_t r = 0; r < d; ++r) o[r] += w[idx] * value[r];
  }
  if (flops) {
    flops->mul(2 * n * d + 2 * n);
    flops->transcendental(n);
    flops->div(1);
    flops->add(2 * n * d + 2 * n);
  }
}

}  // namespace

void apply_linear(const double* params, const LinearRef& ref, const double* x, std::size_t n, double* y,
                  FlopCounter* flops) {
  const double* W = params + ref.weight;
  const double* b = params + ref.bias;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * ref.in;
    double* yi = y + i * ref.out;
    for (std::size_t o = 0; o < ref.out; ++o) {
      const double* wo = W + o * ref.in;
      double acc = b[o];
      for (std::size_t c = 0; c < ref.in; ++c) acc += wo[c] * xi[c];
      yi[o] = acc;
    }
  }
  if (flops) {
    flops->mul(n * ref.out * ref.in);
    flops->add(n * ref.out * ref.in);
  }
}

void run_layer(const HeteroGraph& graph, const GnnModel& model, std::size_t layer, const double* in, double* out,
               LayerTrace* trace, FlopCounter* flops) {
  const LayerPlan& plan = model.plan();
  const std::size_t N = graph.num_nodes();
  const std::size_t din = plan.sizes[layer];
  const std::size_t dout = plan.sizes[layer + 1];
  const std::size_t C = plan.heads;
  const std::size_t d = plan.head_width(layer);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double* p = model.params().data();

  std::vector<double> z(N * dout, 0.0);
  std::vector<double> local[kNumMapRoles];
  std::vector<double> local_w;
  std::vector<double> o(d);
  if (trace) trace->input.assign(in, in + N * din);

  for (int t = 0; t < kNumEdgeTypes; ++t) {
    const EdgeType type = static_cast<EdgeType>(t);
    const NeighborLists& nb = graph.neighbors(type);
    if (trace) {
      trace->maps[t].assign(C * kNumMapRoles, {});
      trace->attention[t].assign(C, {});
    }
    for (std::size_t c = 0; c < C; ++c) {
      double* act[kNumMapRoles];
      for (int r = 0; r < kNumMapRoles; ++r) {
        std::vector<double>& buf = trace ? trace->maps[t][c * kNumMapRoles + r] : local[r];
        buf.resize(N * d);
        apply_linear(p, model.map(layer, type, c, static_cast<MapRole>(r)), in, N, buf.data(), flops);
        act[r] = buf.data();
      }
      std::vector<double>& weights = trace ? trace->attention[t][c] : local_w;
      weights.resize(trace ? nb.num_edges() : N);
      const double* self = act[static_cast<int>(MapRole::kSelf)];
      const double* value = act[static_cast<int>(MapRole::kValue)];
      const double* query = act[static_cast<int>(MapRole::kQuery)];
      const double* key = act[static_cast<int>(MapRole::kKey)];
      for (std::size_t i = 0; i < N; ++i) {
        std::copy_n(self + i * d, d, o.begin());
        const auto nbrs = nb.of(i);
        if (!nbrs.empty()) {
          double* w = trace ? weights.data() + nb.offsets[i] : weights.data();
          attend(query + i * d, key, value, nbrs, d, scale, w, o.data(), flops);
        }
        double* zi = z.data() + i * dout + c * d;
        if (t == 0) {
          std::copy(o.begin(), o.end(), zi);
        } else {
          for (std::size_t r = 0; r < d; ++r) zi[r] += o[r];
          if (flops) flops->add(d);
        }
      }
    }
  }

  const double* gain = p + model.norm_gain(layer);
  const double* bias = p + model.norm_bias(layer);
  if (trace) {
    trace->pre_activation = z;
    trace->normalized.resize(N * dout);
    trace->inv_std.resize(N);
  }
  const double inv_width = 1.0 / static_cast<double>(dout);
  std::vector<double> centered(dout);
  for (std::size_t i = 0; i < N; ++i) {
    const double* zi = z.data() + i * dout;
    double mean = 0.0;
    for (std::size_t r = 0; r < dout; ++r) mean += std::max(zi[r], 0.0);
    mean *= inv_width;
    double var = 0.0;
    for (std::size_t r = 0; r < dout; ++r) {
      centered[r] = std::max(zi[r], 0.0) - mean;
      var += centered[r] * centered[r];
    }
    var *= inv_width;
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    double* yi = out + i * dout;
    for (std::size_t r = 0; r < dout; ++r) {
      const double xhat = centered[r] * inv_std;
      if (trace) trace->normalized[i * dout + r] = xhat;
      yi[r] = gain[r] * xhat + bias[r];
    }
    if (trace) trace->inv_std[i] = inv_std;
  }
  if (flops) {
    flops->mul(N * (3 * dout + 2));
    flops->sqrt(N);
    flops->div(N);
    flops->add(N * (4 * dout + 1));
  }
}

}  // namespace cfgnn::detail
