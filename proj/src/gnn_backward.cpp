// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "cfgnn/gnn.hpp"

namespace cfgnn {
namespace {

// Accumulates dW, db into `grads` and dx (n x in) from dy (n x out).
void linear_backward(const double* params, const LinearRef& ref, const double* x, const double* dy, std::size_t n,
                     double* grads, double* dx) {
  const double* W = params + ref.weight;
  double* dW = grads + ref.weight;
  double* db = grads + ref.bias;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * ref.in;
    const double* dyi = dy + i * ref.out;
    double* dxi = dx + i * ref.in;
    for (std::size_t o = 0; o < ref.out; ++o) {
      const double g = dyi[o];
      if (g == 0.0) continue;
      db[o] += g;
      double* dWo = dW + o * ref.in;
      const double* Wo = W + o * ref.in;
      for (std::size_t c = 0; c < ref.in; ++c) {
        dWo[c] += g * xi[c];
        dxi[c] += g * Wo[c];
      }
    }
  }
}

std::vector<double> layer_backward(const HeteroGraph& graph, const GnnModel& model, std::size_t layer,
                                   const LayerTrace& tr, const std::vector<double>& dy, double* grads) {
  const LayerPlan& plan = model.plan();
  const std::size_t N = graph.num_nodes();
  const std::size_t din = plan.sizes[layer];
  const std::size_t dout = plan.sizes[layer + 1];
  const std::size_t C = plan.heads;
  const std::size_t d = plan.head_width(layer);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double* p = model.params().data();

  const double* gain = p + model.norm_gain(layer);
  double* dgain = grads + model.norm_gain(layer);
  double* dbias = grads + model.norm_bias(layer);
  std::vector<double> dz(N * dout);
  std::vector<double> dxhat(dout);
  for (std::size_t i = 0; i < N; ++i) {
    const double* dyi = dy.data() + i * dout;
    const double* xhat = tr.normalized.data() + i * dout;
    double mean_dx = 0.0;
    double mean_dxx = 0.0;
    for (std::size_t r = 0; r < dout; ++r) {
      dgain[r] += dyi[r] * xhat[r];
      dbias[r] += dyi[r];
      dxhat[r] = dyi[r] * gain[r];
      mean_dx += dxhat[r];
      mean_dxx += dxhat[r] * xhat[r];
    }
    mean_dx /= static_cast<double>(dout);
    mean_dxx /= static_cast<double>(dout);
    const double* z = tr.pre_activation.data() + i * dout;
    for (std::size_t r = 0; r < dout; ++r) {
      const double dr = tr.inv_std[i] * (dxhat[r] - mean_dx - xhat[r] * mean_dxx);
      dz[i * dout + r] = z[r] > 0.0 ? dr : 0.0;
    }
  }

  std::vector<double> dx(N * din, 0.0);
  std::vector<double> dmap[kNumMapRoles];
  std::vector<double> da;
  for (int t = 0; t < kNumEdgeTypes; ++t) {
    const EdgeType type = static_cast<EdgeType>(t);
    const NeighborLists& nb = graph.neighbors(type);
    for (std::size_t c = 0; c < C; ++c) {
      for (auto& m : dmap) m.assign(N * d, 0.0);
      const auto& maps = tr.maps[t];
      const double* value = maps[c * kNumMapRoles + static_cast<int>(MapRole::kValue)].data();
      const double* query = maps[c * kNumMapRoles + static_cast<int>(MapRole::kQuery)].data();
      const double* key = maps[c * kNumMapRoles + static_cast<int>(MapRole::kKey)].data();
      const double* weights = tr.attention[t][c].data();
      double* dself = dmap[static_cast<int>(MapRole::kSelf)].data();
      double* dvalue = dmap[static_cast<int>(MapRole::kValue)].data();
      double* dquery = dmap[static_cast<int>(MapRole::kQuery)].data();
      double* dkey = dmap[static_cast<int>(MapRole::kKey)].data();
      for (std::size_t i = 0; i < N; ++i) {
        const double* doi = dz.data() + i * dout + c * d;
        for (std::size_t r = 0; r < d; ++r) dself[i * d + r] = doi[r];
        const auto nbrs = nb.of(i);
        if (nbrs.empty()) continue;
        const double* w = weights + nb.offsets[i];
        da.resize(nbrs.size());
        double wda = 0.0;
        for (std::size_t idx = 0; idx < nbrs.size(); ++idx) {
          const std::size_t j = nbrs[idx];
          double dot = 0.0;
          for (std::size_t r = 0; r < d; ++r) {
            dot += doi[r] * value[j * d + r];
            dvalue[j * d + r] += w[idx] * doi[r];
          }
          da[idx] = dot;
          wda += w[idx] * dot;
        }
        for (std::size_t idx = 0; idx < nbrs.size(); ++idx) {
          const std::size_t j = nbrs[idx];
          const double dlogit = w[idx] * (da[idx] - wda) * scale;
          for (std::size_t r = 0; r < d; ++r) {
            dquery[i * d + r] += dlogit * key[j * d + r];
            dkey[j * d + r] += dlogit * query[i * d + r];
          }
        }
      }
      for (int r = 0; r < kNumMapRoles; ++r) {
        linear_backward(p, model.map(layer, type, c, static_cast<MapRole>(r)), tr.input.data(), dmap[r].data(), N,
                        grads, dx.data());
      }
    }
  }
  return dx;
}

}  // namespace

std::vector<double> backward(const HeteroGraph& graph, const GnnModel& model, const ForwardTrace& trace,
                             std::span<const double> d_output) {
  const std::size_t N = graph.num_nodes();
  if (d_output.size() != N) throw std::invalid_argument("backward: expected one output gradient per node");
  if (trace.layers.size() != model.plan().attention_layers()) throw std::invalid_argument("backward: trace/model mismatch");
  std::vector<double> grads(model.params().size(), 0.0);
  const LinearRef out = model.output();
  std::vector<double> dh(N * out.in, 0.0);
  linear_backward(model.params().data(), out, trace.last_hidden.data(), d_output.data(), N, grads.data(), dh.data());
  for (std::size_t l = trace.layers.size(); l-- > 0;) {
    dh = layer_backward(graph, model, l, trace.layers[l], dh, grads.data());
  }
  return grads;
}

}  // namespace cfgnn
