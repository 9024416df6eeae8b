// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "gnn_kernels.hpp"

namespace cfgnn {
namespace {

const char* type_name(int t) { return t == static_cast<int>(EdgeType::kAp) ? "ap" : "ue"; }

const char* role_name(int r) {
  static const char* names[kNumMapRoles] = {"self", "value", "query", "key"};
  return names[r];
}

std::vector<double> apply_one(const GnnModel& model, const LinearRef& ref, std::span<const double> x) {
  std::vector<double> y(ref.out);
  detail::apply_linear(model.params().data(), ref, x.data(), 1, y.data(), nullptr);
  return y;
}

}  // namespace

void LayerPlan::validate() const {
  if (sizes.size() < 2) throw std::invalid_argument("LayerPlan: need at least input and output sizes");
  if (sizes.front() != 1 || sizes.back() != 1) throw std::invalid_argument("LayerPlan: input and output width must be 1");
  if (heads < 1) throw std::invalid_argument("LayerPlan: need at least one head");
  for (std::size_t l = 1; l + 1 < sizes.size(); ++l)
    if (sizes[l] == 0 || sizes[l] % heads != 0)
      throw std::invalid_argument("LayerPlan: hidden width " + std::to_string(sizes[l]) + " not divisible by heads");
}

void NormStats::validate() const {
  if (!std::isfinite(in_mean) || !std::isfinite(out_mean) || !std::isfinite(in_std) || !std::isfinite(out_std) ||
      !(in_std > 0.0) || !(out_std > 0.0))
    throw std::invalid_argument("NormStats: statistics must be finite with positive deviations");
}

GnnModel::GnnModel(LayerPlan plan) : plan_(std::move(plan)) {
  plan_.validate();
  const std::size_t layers = plan_.attention_layers();
  maps_.resize(layers);
  norm_.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t din = plan_.sizes[l];
    const std::size_t dout = plan_.sizes[l + 1];
    const std::size_t d = plan_.head_width(l);
    for (int t = 0; t < kNumEdgeTypes; ++t) {
      maps_[l][t].resize(plan_.heads);
      for (std::size_t c = 0; c < plan_.heads; ++c) {
        for (int r = 0; r < kNumMapRoles; ++r) {
          const std::string base =
              "layer" + std::to_string(l) + "." + type_name(t) + ".head" + std::to_string(c) + "." + role_name(r);
          LinearRef& ref = maps_[l][t][c][r];
          ref.in = din;
          ref.out = d;
          ref.weight = add_tensor(base + ".weight", d, din);
          ref.bias = add_tensor(base + ".bias", d, 1);
        }
      }
    }
    norm_[l][0] = add_tensor("layer" + std::to_string(l) + ".norm.gain", dout, 1);
    norm_[l][1] = add_tensor("layer" + std::to_string(l) + ".norm.bias", dout, 1);
  }
  const std::size_t last = plan_.sizes[plan_.sizes.size() - 2];
  output_.in = last;
  output_.out = 1;
  output_.weight = add_tensor("output.weight", 1, last);
  output_.bias = add_tensor("output.bias", 1, 1);
  params_.assign(params_.size(), 0.0);
  for (std::size_t l = 0; l < layers; ++l)
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(norm_[l][0]), plan_.sizes[l + 1], 1.0);
}

std::size_t GnnModel::add_tensor(const std::string& name, std::size_t rows, std::size_t cols) {
  const std::size_t offset = params_.size();
  tensors_.push_back({name, rows, cols, offset});
  params_.resize(offset + rows * cols, 0.0);
  return offset;
}

const TensorInfo& GnnModel::tensor(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw std::out_of_range("GnnModel: no tensor named " + name);
}

LinearRef GnnModel::map(std::size_t layer, EdgeType type, std::size_t head, MapRole role) const {
  return maps_.at(layer)[static_cast<int>(type)].at(head)[static_cast<int>(role)];
}

void GnnModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  auto init_weight = [&](const LinearRef& ref) {
    const double limit = std::sqrt(6.0 / static_cast<double>(ref.in + ref.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < ref.in * ref.out; ++i) params_[ref.weight + i] = dist(rng);
  };
  for (std::size_t l = 0; l < maps_.size(); ++l) {
    for (int t = 0; t < kNumEdgeTypes; ++t)
      for (const auto& head : maps_[l][t])
        for (const auto& ref : head) init_weight(ref);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(norm_[l][0]), plan_.sizes[l + 1], 1.0);
  }
  init_weight(output_);
}

std::vector<double> encode_fading(const FadingMatrix& beta, const NormStats& norm) {
  std::vector<double> x(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double b = beta.values()[i];
    if (!(b > 0.0)) throw DomainError("encode_fading: fading coefficients must be positive");
    x[i] = (std::log2(b) - norm.in_mean) / norm.in_std;
  }
  return x;
}

std::vector<double> softmax_scores(std::span<const double> query, std::span<const std::vector<double>> keys,
                                   std::size_t head_width) {
  std::vector<double> w(keys.size());
  if (keys.empty()) return w;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_width));
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < keys.size(); ++j) {
    if (keys[j].size() != query.size()) throw std::invalid_argument("softmax_scores: key width mismatch");
    double dot = 0.0;
    for (std::size_t r = 0; r < query.size(); ++r) dot += query[r] * keys[j][r];
    w[j] = dot * scale;
    top = std::max(top, w[j]);
  }
  double sum = 0.0;
  for (double& v : w) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> attention_coeffs(std::span<const double> h_i, std::span<const std::vector<double>> neighbors,
                                     const GnnModel& model, std::size_t layer, EdgeType type, std::size_t head) {
  const LinearRef q_ref = model.map(layer, type, head, MapRole::kQuery);
  const LinearRef k_ref = model.map(layer, type, head, MapRole::kKey);
  const std::vector<double> q = apply_one(model, q_ref, h_i);
  std::vector<std::vector<double>> keys;
  keys.reserve(neighbors.size());
  for (const auto& h_j : neighbors) keys.push_back(apply_one(model, k_ref, h_j));
  return softmax_scores(q, keys, model.plan().head_width(layer));
}

std::vector<double> typed_aggregate(const HeteroGraph& graph, std::size_t node, EdgeType type,
                                    std::span<const double> features, const GnnModel& model, std::size_t layer) {
  const std::size_t din = model.plan().sizes.at(layer);
  const std::size_t d = model.plan().head_width(layer);
  if (features.size() != graph.num_nodes() * din) throw std::invalid_argument("typed_aggregate: feature shape mismatch");
  auto row = [&](std::size_t i) { return features.subspan(i * din, din); };
  const auto nbrs = graph.neighbors(type).of(node);
  std::vector<std::vector<double>> neighbor_features;
  for (std::size_t j : nbrs) neighbor_features.emplace_back(row(j).begin(), row(j).end());

  std::vector<double> out;
  out.reserve(d * model.plan().heads);
  for (std::size_t c = 0; c < model.plan().heads; ++c) {
    std::vector<double> o = apply_one(model, model.map(layer, type, c, MapRole::kSelf), row(node));
    if (!nbrs.empty()) {
      const std::vector<double> w = attention_coeffs(row(node), neighbor_features, model, layer, type, c);
      const LinearRef v_ref = model.map(layer, type, c, MapRole::kValue);
      for (std::size_t j = 0; j < nbrs.size(); ++j) {
        const std::vector<double> v = apply_one(model, v_ref, neighbor_features[j]);
        for (std::size_t r = 0; r < d; ++r) o[r] += w[j] * v[r];
      }
    }
    out.insert(out.end(), o.begin(), o.end());
  }
  return out;
}

std::vector<double> layer_forward(const HeteroGraph& graph, std::span<const double> features, const GnnModel& model,
                                  std::size_t layer, FlopCounter* flops) {
  if (layer >= model.plan().attention_layers()) throw std::out_of_range("layer_forward: no such attention layer");
  if (features.size() != graph.num_nodes() * model.plan().sizes[layer])
    throw std::invalid_argument("layer_forward: feature shape mismatch");
  std::vector<double> out(graph.num_nodes() * model.plan().sizes[layer + 1]);
  detail::run_layer(graph, model, layer, features.data(), out.data(), nullptr, flops);
  return out;
}

namespace {

void check_inputs(const HeteroGraph& graph, std::span<const double> inputs, const GnnModel& model) {
  if (inputs.size() != graph.num_nodes()) throw std::invalid_argument("forward: expected one input per node");
  (void)model;
}

std::vector<double> read_out(const GnnModel& model, const std::vector<double>& hidden, std::size_t n,
                             FlopCounter* flops) {
  std::vector<double> y(n);
  detail::apply_linear(model.params().data(), model.output(), hidden.data(), n, y.data(), flops);
  return y;
}

}  // namespace

std::vector<double> forward(const HeteroGraph& graph, std::span<const double> inputs, const GnnModel& model,
                            FlopCounter* flops) {
  check_inputs(graph, inputs, model);
  const std::size_t n = graph.num_nodes();
  std::vector<double> h(inputs.begin(), inputs.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < model.plan().attention_layers(); ++l) {
    next.assign(n * model.plan().sizes[l + 1], 0.0);
    detail::run_layer(graph, model, l, h.data(), next.data(), nullptr, flops);
    h.swap(next);
  }
  return read_out(model, h, n, flops);
}

ForwardTrace forward_trace(const HeteroGraph& graph, std::span<const double> inputs, const GnnModel& model) {
  check_inputs(graph, inputs, model);
  const std::size_t n = graph.num_nodes();
  ForwardTrace trace;
  trace.layers.resize(model.plan().attention_layers());
  std::vector<double> h(inputs.begin(), inputs.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    next.assign(n * model.plan().sizes[l + 1], 0.0);
    detail::run_layer(graph, model, l, h.data(), next.data(), &trace.layers[l], nullptr);
    h.swap(next);
  }
  trace.output = read_out(model, h, n, nullptr);
  trace.last_hidden = std::move(h);
  return trace;
}

PowerControl decode_powers(std::span<const double> raw, std::size_t num_aps, std::size_t num_ues,
                           const NormStats& norm, FlopCounter* flops) {
  if (raw.size() != num_aps * num_ues) throw std::invalid_argument("decode_powers: expected M*K outputs");
  PowerControl eta(num_aps, num_ues);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw DomainError("decode_powers: non-finite network output");
    eta.values()[i] = std::exp2(raw[i] * norm.out_std + norm.out_mean);
  }
  if (flops) {
    flops->mul(raw.size());
    flops->add(raw.size());
    flops->transcendental(raw.size());
  }
  return eta;
}

void project_onto_budget(PowerControl& eta, FlopCounter* flops) {
  const std::size_t K = eta.num_ues();
  for (std::size_t m = 0; m < eta.num_aps(); ++m) {
    auto row = eta.row(m);
    double sum = 0.0;
    for (double& e : row) {
      if (!(e >= 0.0)) e = 0.0;
      sum += e;
    }
    if (flops) flops->add(K);
    if (sum > 1.0) {
      const double inv = 1.0 / sum;
      for (double& e : row) e *= inv;
      if (flops) {
        flops->div(1);
        flops->mul(K);
      }
      // Rounding can leave the renormalized sum an ulp above 1.
      for (;;) {
        double again = 0.0;
        for (double e : row) again += e;
        if (again <= 1.0) break;
        for (double& e : row) e = std::nextafter(e, 0.0);
      }
    }
  }
}

PowerControl project_powers(std::span<const double> raw, std::size_t num_aps, std::size_t num_ues,
                            const NormStats& norm, FlopCounter* flops) {
  PowerControl eta = decode_powers(raw, num_aps, num_ues, norm, flops);
  project_onto_budget(eta, flops);
  return eta;
}

PowerControl predict_powers(const GnnModel& model, const FadingMatrix& beta) {
  const auto graph = cached_graph(beta.num_aps(), beta.num_ues());
  const std::vector<double> raw = forward(*graph, encode_fading(beta, model.norm), model);
  return project_powers(raw, beta.num_aps(), beta.num_ues(), model.norm);
}

FlopCounter count_flops(std::size_t num_aps, std::size_t num_ues, const GnnModel& model, FlopMode mode) {
  FlopCounter f;
  if (mode == FlopMode::kInstrumented) {
    const auto graph = cached_graph(num_aps, num_ues);
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(graph->num_nodes());
    for (double& v : x) v = dist(rng);
    const std::vector<double> raw = forward(*graph, x, model, &f);
    project_powers(raw, num_aps, num_ues, model.norm, &f);
    return f;
  }

  const LayerPlan& plan = model.plan();
  const std::uint64_t M = num_aps;
  const std::uint64_t K = num_ues;
  const std::uint64_t N = M * K;
  const std::uint64_t C = plan.heads;
  const std::uint64_t degree[kNumEdgeTypes] = {K - 1, M - 1};
  for (std::size_t l = 0; l < plan.attention_layers(); ++l) {
    const std::uint64_t din = plan.sizes[l];
    const std::uint64_t dout = plan.sizes[l + 1];
    const std::uint64_t d = dout / C;
    for (int t = 0; t < kNumEdgeTypes; ++t) {
      f.mul(C * kNumMapRoles * N * d * din);
      f.add(C * kNumMapRoles * N * d * din);
      const std::uint64_t deg = degree[t];
      if (deg > 0) {
        f.mul(C * N * (2 * deg * d + 2 * deg));
        f.transcendental(C * N * deg);
        f.div(C * N);
        f.add(C * N * (2 * deg * d + 2 * deg));
      }
    }
    f.add(N * dout);
    f.mul(N * (3 * dout + 2));
    f.sqrt(N);
    f.div(N);
    f.add(N * (4 * dout + 1));
  }
  const std::uint64_t last = plan.sizes[plan.sizes.size() - 2];
  f.mul(N * last);
  f.add(N * last);
  // Projection, assuming every AP row needs renormalization.
  f.mul(N);
  f.add(N);
  f.transcendental(N);
  f.add(N);
  f.div(M);
  f.mul(N);
  return f;
}

}  // namespace cfgnn
