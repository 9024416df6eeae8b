// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cfgnn/gnn.hpp"
#include "cfgnn/sinr.hpp"
#include "test_support.hpp"

namespace cfgnn {
namespace {

// Independent forward pass written from the update rule, looking parameters up by name.
class ReferenceGnn {
 public:
  explicit ReferenceGnn(const GnnModel& model) : model_(model) {}

  std::vector<double> run(std::size_t M, std::size_t K, const std::vector<double>& x) const {
    const auto& plan = model_.plan();
    const std::size_t n = M * K;
    std::vector<std::vector<double>> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = {x[i]};
    for (std::size_t l = 0; l < plan.attention_layers(); ++l) {
      std::vector<std::vector<double>> next(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = i / K, k = i % K;
        std::vector<double> z(plan.sizes[l + 1], 0.0);
        for (const char* type : {"ap", "ue"}) {
          std::vector<std::size_t> nb;
          for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const bool same_ap = j / K == m, same_ue = j % K == k;
            if ((type[0] == 'a' && same_ap) || (type[0] == 'u' && same_ue)) nb.push_back(j);
          }
          const std::size_t d = plan.sizes[l + 1] / plan.heads;
          for (std::size_t c = 0; c < plan.heads; ++c) {
            const std::string base = "layer" + std::to_string(l) + "." + type + ".head" + std::to_string(c) + ".";
            const auto self = apply(base + "self", h[i]);
            const auto q = apply(base + "query", h[i]);
            std::vector<double> logits, w;
            for (std::size_t j : nb) {
              const auto key = apply(base + "key", h[j]);
              double dot = 0.0;
              for (std::size_t r = 0; r < d; ++r) dot += q[r] * key[r];
              logits.push_back(dot / std::sqrt(static_cast<double>(d)));
            }
            double denom = 0.0;
            for (double g : logits) denom += std::exp(g);
            for (double g : logits) w.push_back(std::exp(g) / denom);
            for (std::size_t r = 0; r < d; ++r) z[c * d + r] += self[r];
            for (std::size_t a = 0; a < nb.size(); ++a) {
              const auto v = apply(base + "value", h[nb[a]]);
              for (std::size_t r = 0; r < d; ++r) z[c * d + r] += w[a] * v[r];
            }
          }
        }
        for (double& v : z) v = std::max(v, 0.0);
        const double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
        double var = 0.0;
        for (double v : z) var += (v - mean) * (v - mean);
        var /= z.size();
        const auto& gain = tensor("layer" + std::to_string(l) + ".norm.gain");
        const auto& bias = tensor("layer" + std::to_string(l) + ".norm.bias");
        for (std::size_t r = 0; r < z.size(); ++r)
          next[i].push_back(gain[r] * (z[r] - mean) / std::sqrt(var + 1e-5) + bias[r]);
      }
      h = std::move(next);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = apply("output", h[i])[0];
    return out;
  }

 private:
  std::vector<double> tensor(const std::string& name) const {
    const auto& t = model_.tensor(name);
    return {model_.params().begin() + t.offset, model_.params().begin() + t.offset + t.size()};
  }
  std::vector<double> apply(const std::string& base, const std::vector<double>& in) const {
    const auto& wt = model_.tensor(base + ".weight");
    const auto b = tensor(base + ".bias");
    std::vector<double> y(wt.rows);
    for (std::size_t r = 0; r < wt.rows; ++r) {
      y[r] = b[r];
      for (std::size_t c = 0; c < wt.cols; ++c) y[r] += model_.params()[wt.offset + r * wt.cols + c] * in[c];
    }
    return y;
  }

  const GnnModel& model_;
};

void set_tensor(GnnModel& model, const std::string& name, const std::vector<double>& values) {
  const auto& t = model.tensor(name);
  ASSERT_EQ(values.size(), t.size()) << name;
  std::copy(values.begin(), values.end(), model.params().begin() + static_cast<std::ptrdiff_t>(t.offset));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TEST(LayerPlan, DefaultShape) {
  const LayerPlan plan;
  plan.validate();
  EXPECT_EQ(plan.transitions(), 10u);
  EXPECT_EQ(plan.attention_layers(), 9u);
  EXPECT_EQ(plan.head_width(4), 16u);
  LayerPlan bad;
  bad.sizes = {1, 7, 1};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.sizes = {2, 8, 1};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.heads = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(GnnModel, TensorLayoutAndInitialization) {
  GnnModel model;
  std::size_t expected = 0;
  const auto& s = model.plan().sizes;
  for (std::size_t l = 0; l + 2 < s.size(); ++l) expected += 2 * 4 * (s[l + 1] * s[l] + s[l + 1]) + 2 * s[l + 1];
  expected += s[s.size() - 2] + 1;
  EXPECT_EQ(model.params().size(), expected);
  std::size_t covered = 0;
  for (const auto& t : model.tensors()) {
    EXPECT_EQ(t.offset, covered);
    covered += t.size();
  }
  EXPECT_EQ(covered, expected);
  model.initialize(3);
  for (const auto& t : model.tensors()) {
    const bool weight = t.name.ends_with(".weight");
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double v = model.params()[t.offset + i];
      if (weight) EXPECT_LE(std::abs(v), limit);
      else if (t.name.ends_with(".gain")) EXPECT_EQ(v, 1.0);
      else EXPECT_EQ(v, 0.0);
    }
  }
  EXPECT_EQ(model.tensor("layer3.ue.head1.query.weight").rows, 8u);
  EXPECT_THROW(model.tensor("layer99.norm.gain"), std::out_of_range);
  GnnModel again;
  again.initialize(3);
  EXPECT_EQ(model.params(), again.params());
}

TEST(Softmax, Examples) {
  const std::vector<double> q{1.0};
  EXPECT_EQ(softmax_scores(q, std::vector<std::vector<double>>{{4.0}}, 1)[0], 1.0);
  const auto same = softmax_scores(q, std::vector<std::vector<double>>(4, {2.5}), 1);
  for (double w : same) EXPECT_DOUBLE_EQ(w, 0.25);
  const auto w = softmax_scores(q, std::vector<std::vector<double>>{{0.0}, {std::log(3.0)}}, 1);
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);
  const auto big = softmax_scores(q, std::vector<std::vector<double>>{{1000.0}, {1000.0 + std::log(3.0)}}, 1);
  EXPECT_NEAR(big[1], 0.75, 1e-12);
  EXPECT_TRUE(softmax_scores(q, std::vector<std::vector<double>>{}, 1).empty());
}

LayerPlan tiny_plan() {
  LayerPlan plan;
  plan.sizes = {1, 2, 1};
  plan.heads = 1;
  return plan;
}

TEST(Attention, SingleNeighborGetsFullWeight) {
  const auto model = testing::random_model(4, tiny_plan());
  const std::vector<double> h{0.3};
  const auto w = attention_coeffs(h, std::vector<std::vector<double>>{{-1.2}}, model, 0, EdgeType::kAp, 0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], 1.0);
}

// One AP and three UEs: node 0 sees nodes 1 and 2 through AP edges and nobody through UE edges.
GnnModel hand_model() {
  GnnModel model(tiny_plan());
  set_tensor(model, "layer0.ap.head0.self.weight", {3.0, 0.0});
  set_tensor(model, "layer0.ap.head0.query.bias", {1.0, 0.0});
  set_tensor(model, "layer0.ap.head0.key.weight", {std::sqrt(2.0) * std::log(3.0), 0.0});
  set_tensor(model, "layer0.ap.head0.value.weight", {1.0, 2.0});
  set_tensor(model, "layer0.ap.head0.value.bias", {0.5, -1.0});
  set_tensor(model, "layer0.ue.head0.self.weight", {0.0, 1.0});
  set_tensor(model, "layer0.ue.head0.self.bias", {0.0, 0.25});
  return model;
}

TEST(Attention, HandComputedAggregate) {
  const GnnModel model = hand_model();
  const auto graph = build_graph(1, 3);
  const std::vector<double> h{2.0, 0.0, 1.0};
  const auto w = attention_coeffs(std::vector<double>{2.0}, std::vector<std::vector<double>>{{0.0}, {1.0}}, model, 0,
                                  EdgeType::kAp, 0);
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);
  // self (6, 0) + 0.25 (0.5, -1) + 0.75 (1.5, 1)
  const auto ap = typed_aggregate(graph, 0, EdgeType::kAp, h, model, 0);
  EXPECT_NEAR(ap[0], 7.25, 1e-14);
  EXPECT_NEAR(ap[1], 0.5, 1e-14);
  // M = 1: no UE neighbors, so only the self map remains.
  const auto ue = typed_aggregate(graph, 0, EdgeType::kUe, h, model, 0);
  EXPECT_DOUBLE_EQ(ue[0], 0.0);
  EXPECT_DOUBLE_EQ(ue[1], 2.25);
  // z = (7.25, 2.75): LayerNorm of (+2.25, -2.25) around the mean with unit gain.
  const auto out = layer_forward(graph, h, model, 0);
  const double xhat = 2.25 / std::sqrt(2.25 * 2.25 + 1e-5);
  EXPECT_NEAR(out[0], xhat, 1e-14);
  EXPECT_NEAR(out[1], -xhat, 1e-14);
}

TEST(Attention, ZeroValueMapsLeaveSelfTerm) {
  auto model = testing::random_model(9);
  for (std::size_t c = 0; c < 2; ++c)
    for (EdgeType t : {EdgeType::kAp, EdgeType::kUe}) {
      const auto ref = model.map(0, t, c, MapRole::kValue);
      std::fill_n(model.params().begin() + static_cast<std::ptrdiff_t>(ref.weight), ref.in * ref.out, 0.0);
      std::fill_n(model.params().begin() + static_cast<std::ptrdiff_t>(ref.bias), ref.out, 0.0);
    }
  const auto graph = build_graph(3, 4);
  std::mt19937_64 rng(1);
  const auto h = testing::random_inputs(12, rng);
  for (std::size_t i = 0; i < 12; ++i)
    for (EdgeType t : {EdgeType::kAp, EdgeType::kUe}) {
      const auto agg = typed_aggregate(graph, i, t, h, model, 0);
      for (std::size_t c = 0; c < 2; ++c) {
        const auto ref = model.map(0, t, c, MapRole::kSelf);
        for (std::size_t r = 0; r < ref.out; ++r) {
          const double self = model.params()[ref.bias + r] + model.params()[ref.weight + r] * h[i];
          EXPECT_NEAR(agg[c * ref.out + r], self, 1e-14);
        }
      }
    }
}

TEST(LayerForward, DeadActivationYieldsNormBias) {
  GnnModel model(tiny_plan());
  set_tensor(model, "layer0.ap.head0.self.bias", {-1.0, -2.0});
  set_tensor(model, "layer0.norm.bias", {0.3, -0.7});
  const auto graph = build_graph(2, 2);
  const auto out = layer_forward(graph, std::vector<double>{0.1, -0.4, 2.0, 0.0}, model, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(out[2 * i], 0.3);
    EXPECT_EQ(out[2 * i + 1], -0.7);
  }
  EXPECT_THROW(layer_forward(graph, std::vector<double>{0.0}, model, 0), std::invalid_argument);
  EXPECT_THROW(layer_forward(graph, std::vector<double>(4, 0.0), model, 1), std::out_of_range);
}

TEST(Forward, MatchesReferenceImplementation) {
  std::mt19937_64 rng(7);
  const std::pair<std::size_t, std::size_t> sizes[] = {{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 4}, {6, 3}};
  for (const auto& [M, K] : sizes) {
    const auto model = testing::random_model(100 + M * 10 + K);
    const auto x = testing::random_inputs(M * K, rng);
    const auto got = forward(build_graph(M, K), x, model);
    const auto ref = ReferenceGnn(model).run(M, K, x);
    EXPECT_LE(max_abs_diff(got, ref), 1e-12) << M << "x" << K;
  }
}

TEST(Forward, TraceAgreesWithForward) {
  std::mt19937_64 rng(8);
  const auto model = testing::random_model(5);
  const auto graph = build_graph(4, 3);
  const auto x = testing::random_inputs(12, rng);
  const auto trace = forward_trace(graph, x, model);
  EXPECT_EQ(trace.output, forward(graph, x, model));
  EXPECT_EQ(trace.layers.size(), model.plan().attention_layers());
  EXPECT_THROW(forward(graph, std::vector<double>(5, 0.0), model), std::invalid_argument);
}

TEST(Forward, GoldenTwoByTwo) {
  const auto model = testing::random_model(2024);
  const FadingMatrix beta(2, 2, std::vector<double>{1e-10, 3e-12, 5e-11, 2e-13});
  const auto raw = forward(build_graph(2, 2), encode_fading(beta, model.norm), model);
  const std::vector<double> golden{1.9887975414829002, -2.7921765087051997, 2.6568516643738183, -1.0421127820547831};
  ASSERT_EQ(raw.size(), golden.size());
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(raw[i], golden[i], 1e-12);
}

TEST(Forward, PermutationEquivariance) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t M = 5, K = 3;
    const auto model = testing::random_model(300 + trial);
    const auto x = testing::random_inputs(M * K, rng);
    std::vector<std::size_t> pm(M), pk(K);
    std::iota(pm.begin(), pm.end(), 0);
    std::iota(pk.begin(), pk.end(), 0);
    std::shuffle(pm.begin(), pm.end(), rng);
    std::shuffle(pk.begin(), pk.end(), rng);
    std::vector<double> xp(M * K);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t k = 0; k < K; ++k) xp[m * K + k] = x[pm[m] * K + pk[k]];
    const auto y = forward(build_graph(M, K), x, model);
    const auto yp = forward(build_graph(M, K), xp, model);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(yp[m * K + k], y[pm[m] * K + pk[k]], 1e-9);
  }
}

TEST(Forward, DuplicateUsersGetIdenticalOutputs) {
  std::mt19937_64 rng(10);
  const auto model = testing::random_model(11);
  const std::size_t M = 4, K = 3;
  auto x = testing::random_inputs(M * K, rng);
  for (std::size_t m = 0; m < M; ++m) x[m * K + 2] = x[m * K + 0];
  const auto y = forward(build_graph(M, K), x, model);
  for (std::size_t m = 0; m < M; ++m) EXPECT_NEAR(y[m * K + 2], y[m * K + 0], 1e-12);
}

TEST(Backward, MatchesFiniteDifferencesOfProjection) {
  LayerPlan plan;
  plan.sizes = {1, 4, 6, 1};
  auto model = testing::random_model(12, plan);
  const auto graph = build_graph(3, 2);
  std::mt19937_64 rng(13);
  const auto x = testing::random_inputs(6, rng);
  const auto dy = testing::random_inputs(6, rng);
  const auto grad = backward(graph, model, forward_trace(graph, x, model), dy);
  ASSERT_EQ(grad.size(), model.params().size());
  auto objective = [&] {
    const auto y = forward(graph, x, model);
    return std::inner_product(y.begin(), y.end(), dy.begin(), 0.0);
  };
  for (std::size_t p = 0; p < model.params().size(); ++p) {
    const double saved = model.params()[p];
    model.params()[p] = saved + 1e-6;
    const double up = objective();
    model.params()[p] = saved - 1e-6;
    const double down = objective();
    model.params()[p] = saved;
    const double fd = (up - down) / 2e-6;
    EXPECT_NEAR(grad[p], fd, 1e-6 * std::max(1.0, std::abs(fd))) << p;
  }
}

TEST(Encode, Log2Range) {
  FadingMatrix beta(1, 4, std::vector<double>{1e-15, 1e-12, 1e-8, 1e-5});
  const auto x = encode_fading(beta, {0.0, 1.0, 0.0, 1.0});
  for (double v : x) {
    EXPECT_GT(v, -50.0);
    EXPECT_LT(v, -16.0);
  }
  const auto z = encode_fading(beta, {-30.0, 2.0, 0.0, 1.0});
  EXPECT_NEAR(z[0], (std::log2(1e-15) + 30.0) / 2.0, 1e-12);
  beta(0, 0) = 0.0;
  EXPECT_THROW(encode_fading(beta, {}), DomainError);
}

TEST(Projection, Examples) {
  PowerControl row(1, 2, std::vector<double>{0.8, 1.2});
  project_onto_budget(row);
  EXPECT_NEAR(row(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(row(0, 1), 0.6, 1e-15);
  PowerControl ok(2, 3, std::vector<double>{0.2, 0.3, 0.1, 0.0, 0.5, 0.5});
  const PowerControl before = ok;
  project_onto_budget(ok);
  EXPECT_EQ(ok, before);
  PowerControl neg(1, 3, std::vector<double>{-0.5, 0.4, 0.3});
  project_onto_budget(neg);
  EXPECT_EQ(neg(0, 0), 0.0);
  EXPECT_EQ(neg(0, 1), 0.4);
}

TEST(Projection, DecodesThenProjects) {
  const NormStats norm{0.0, 1.0, -1.0, 2.0};
  const std::vector<double> raw{(std::log2(0.8) + 1.0) / 2.0, (std::log2(1.2) + 1.0) / 2.0};
  const auto eta = project_powers(raw, 1, 2, norm);
  EXPECT_NEAR(eta(0, 0), 0.4, 1e-14);
  EXPECT_NEAR(eta(0, 1), 0.6, 1e-14);
  const auto decoded = decode_powers(raw, 1, 2, norm);
  EXPECT_NEAR(decoded(0, 1), 1.2, 1e-14);
  EXPECT_THROW(project_powers(std::vector<double>{0.0, NAN}, 1, 2, norm), DomainError);
  EXPECT_THROW(project_powers(std::vector<double>{0.0}, 1, 2, norm), std::invalid_argument);
}

TEST(Projection, AlwaysFeasibleAndIdempotent) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> d(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t M = 1 + rng() % 6, K = 1 + rng() % 40;
    PowerControl eta(M, K);
    for (double& e : eta.values()) e = std::exp2(d(rng));
    project_onto_budget(eta);
    EXPECT_TRUE(is_feasible(eta, 0.0));
    const PowerControl once = eta;
    project_onto_budget(eta);
    EXPECT_EQ(eta, once);
  }
}

TEST(PredictPowers, FeasibleAndFinite) {
  const auto model = testing::random_model(15);
  const auto cfg = make_scenario(6, 3, default_morphology(MorphologyName::kUrban), 2);
  const auto eta = predict_powers(model, generate_fading(cfg));
  EXPECT_TRUE(is_feasible(eta, 0.0));
  for (double e : eta.values()) EXPECT_TRUE(std::isfinite(e));
}

TEST(Flops, InstrumentedAndAnalyticAgree) {
  GnnModel model;
  model.initialize(1);
  for (const auto& [M, K] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {4, 2}, {8, 5}, {32, 9}}) {
    const double a = static_cast<double>(count_flops(M, K, model, FlopMode::kAnalytic).total());
    const double b = static_cast<double>(count_flops(M, K, model, FlopMode::kInstrumented).total());
    EXPECT_GT(b, 0.0);
    EXPECT_NEAR(a / b, 1.0, 0.01) << M << "x" << K;
  }
}

TEST(Flops, TableScale) {
  GnnModel model;
  model.initialize(1);
  const double f = static_cast<double>(count_flops(32, 9, model, FlopMode::kAnalytic).total());
  EXPECT_GE(f, 3.2e7 / 2.0);
  EXPECT_LE(f, 3.2e7 * 2.0);
}

}  // namespace
}  // namespace cfgnn
