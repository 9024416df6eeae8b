// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "cfgnn/parallel.hpp"
#include "cfgnn/sinr.hpp"

namespace cfgnn {
namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const long long v = std::stoll(item, &used);
    if (used != item.size() || v <= 0) throw std::invalid_argument("layer_sizes: bad entry '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// Mini-batches of same-size graphs; order depends only on (seed, epoch).
std::vector<std::vector<std::size_t>> make_batches(const std::map<std::pair<std::size_t, std::size_t>,
                                                                  std::vector<std::size_t>>& groups,
                                                   std::size_t batch_size, std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::vector<std::vector<std::size_t>> batches;
  for (const auto& [shape, members] : groups) {
    std::vector<std::size_t> order = members;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

[[noreturn]] void diverge(const TrainOutputs& outputs, const GnnModel& model, std::size_t epoch, std::size_t batch,
                          const std::vector<std::size_t>& members, const std::vector<Sample>& train_set,
                          const std::string& reason) {
  std::string where;
  if (!outputs.checkpoint_path.empty()) {
    nlohmann::json dump;
    dump["reason"] = reason;
    dump["epoch"] = epoch;
    dump["batch"] = batch;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i : members) seeds.push_back(train_set[i].seed);
    dump["sample_seeds"] = seeds;
    std::size_t bad = 0;
    for (double p : model.params()) bad += std::isfinite(p) ? 0 : 1;
    dump["non_finite_params"] = bad;
    dump["params"] = model.params();
    where = outputs.checkpoint_path + ".diverged.json";
    try {
      write_text(where, dump.dump(1) + "\n");
    } catch (const std::exception&) {
      where.clear();
    }
  }
  throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                         ": " + reason + (where.empty() ? "" : " (state dumped to " + where + ")"));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(grad_clip >= 0.0)) throw std::invalid_argument("grad_clip must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must lie in [0, 1)");
  plan.validate();
}

std::string TrainConfig::fingerprint() const {
  std::string canon = "lr=" + fmt17(learning_rate) + ";batch=" + std::to_string(batch_size) +
                      ";b1=" + fmt17(beta1) + ";b2=" + fmt17(beta2) +
                      ";eps=" + fmt17(epsilon) + ";wd=" + fmt17(weight_decay) + ";clip=" + fmt17(grad_clip) +
                      ";loss=" + (loss_target == LossTarget::kRaw ? "raw" : "projected") +
                      ";val=" + fmt17(val_fraction) + ";seed=" + std::to_string(seed) + ";heads=" +
                      std::to_string(plan.heads) + ";sizes=";
  for (std::size_t s : plan.sizes) canon += std::to_string(s) + ",";
  canon += ";rho_d=" + fmt17(radio.rho_d()) + ";rho_u=" + fmt17(radio.rho_u());
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  static const std::set<std::string> known = {"learning_rate", "batch_size", "epochs",      "adam_beta1",
                                              "adam_beta2",    "adam_epsilon", "weight_decay", "grad_clip",
                                              "loss_target",   "val_fraction", "seed",        "layer_sizes",
                                              "heads"};
  for (const auto& [key, value] : kv.entries()) {
    if (!known.count(key) && key.rfind("radio.", 0) != 0) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  TrainConfig cfg;
  cfg.learning_rate = kv.get_double("learning_rate", cfg.learning_rate);
  const long long batch = kv.get_int("batch_size", static_cast<long long>(cfg.batch_size));
  const long long epochs = kv.get_int("epochs", static_cast<long long>(cfg.epochs));
  if (batch < 1 || epochs < 1) throw std::invalid_argument("batch_size and epochs must be >= 1");
  cfg.batch_size = static_cast<std::size_t>(batch);
  cfg.epochs = static_cast<std::size_t>(epochs);
  cfg.beta1 = kv.get_double("adam_beta1", cfg.beta1);
  cfg.beta2 = kv.get_double("adam_beta2", cfg.beta2);
  cfg.epsilon = kv.get_double("adam_epsilon", cfg.epsilon);
  cfg.weight_decay = kv.get_double("weight_decay", cfg.weight_decay);
  cfg.grad_clip = kv.get_double("grad_clip", cfg.grad_clip);
  cfg.val_fraction = kv.get_double("val_fraction", cfg.val_fraction);
  const long long seed = kv.get_int("seed", 0);
  if (seed < 0) throw std::invalid_argument("seed must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  if (auto target = kv.get("loss_target")) {
    if (*target == "raw") {
      cfg.loss_target = LossTarget::kRaw;
    } else if (*target == "projected") {
      cfg.loss_target = LossTarget::kProjected;
    } else {
      throw std::invalid_argument("loss_target must be 'raw' or 'projected'");
    }
  }
  if (auto sizes = kv.get("layer_sizes")) cfg.plan.sizes = parse_sizes(*sizes);
  const long long heads = kv.get_int("heads", static_cast<long long>(cfg.plan.heads));
  if (heads < 1) throw std::invalid_argument("heads must be >= 1");
  cfg.plan.heads = static_cast<std::size_t>(heads);
  cfg.radio.apply_overrides(kv);
  cfg.validate();
  return cfg;
}

double sinr_mse_loss(const SinrVector& sinr_opt, const SinrVector& sinr_pred) {
  if (sinr_opt.size() != sinr_pred.size()) throw std::invalid_argument("sinr_mse_loss: length mismatch");
  if (sinr_opt.empty()) throw std::invalid_argument("sinr_mse_loss: empty SINR vectors");
  double acc = 0.0;
  for (std::size_t k = 0; k < sinr_opt.size(); ++k) {
    const double r = sinr_pred[k] - sinr_opt[k];
    acc += r * r;
  }
  return acc / static_cast<double>(sinr_opt.size());
}

PreparedSample prepare_sample(const Sample& sample, const NormStats& norm, const RadioParams& radio) {
  if (!sample.labeled()) throw std::invalid_argument("prepare_sample: sample is unlabeled");
  PreparedSample p;
  p.graph = cached_graph(sample.num_aps, sample.num_ues);
  p.inputs = encode_fading(sample.beta, norm);
  p.beta = sample.beta;
  p.alpha = compute_alpha(sample.beta, radio.rho_u(), static_cast<double>(sample.num_ues));
  p.sinr_opt = sample.sinr_opt;
  p.rho_d = radio.rho_d();
  return p;
}

std::vector<double> loss_output_gradient(const PreparedSample& s, std::span<const double> raw, const NormStats& norm,
                                         LossTarget target, double* loss) {
  const std::size_t M = s.beta.num_aps();
  const std::size_t K = s.beta.num_ues();
  PowerControl eta = decode_powers(raw, M, K, norm);
  std::vector<double> row_sum(M, 0.0);
  std::vector<bool> scaled(M, false);
  if (target == LossTarget::kProjected) {
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k = 0; k < K; ++k) row_sum[m] += eta(m, k);
      if (row_sum[m] > 1.0) {
        scaled[m] = true;
        for (std::size_t k = 0; k < K; ++k) eta(m, k) /= row_sum[m];
      }
    }
  }
  const SinrVector sinr = compute_sinr(s.beta, s.alpha, eta, s.rho_d);
  const double value = sinr_mse_loss(s.sinr_opt, sinr);
  if (loss) *loss = value;

  std::vector<double> power(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) power[m] += eta(m, k);
  }
  std::vector<double> num(K, 0.0), den(K, 1.0), g(K), c(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      num[k] += std::sqrt(s.alpha(m, k) * eta(m, k));
      den[k] += s.rho_d * s.beta(m, k) * power[m];
    }
    g[k] = 2.0 * (sinr[k] - s.sinr_opt[k]) / static_cast<double>(K);
    c[k] = s.rho_d * g[k] * sinr[k] / den[k];
  }
  // h(m,k) = dL/d(eta_mk) * eta_mk, finite even where eta is tiny.
  const double chain = std::numbers::ln2 * norm.out_std;
  std::vector<double> grad(M * K);
  std::vector<double> h(K);
  for (std::size_t m = 0; m < M; ++m) {
    double interference = 0.0;
    for (std::size_t k = 0; k < K; ++k) interference += c[k] * s.beta(m, k);
    double weighted = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      h[k] = g[k] * s.rho_d * num[k] * std::sqrt(s.alpha(m, k) * eta(m, k)) / den[k] - eta(m, k) * interference;
      weighted += h[k];
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double d = scaled[m] ? h[k] - eta(m, k) * weighted : h[k];
      grad[m * K + k] = d * chain;
    }
  }
  return grad;
}

LossAndGrad sample_loss(const GnnModel& model, const PreparedSample& s, LossTarget target, bool want_grad) {
  LossAndGrad out;
  if (!want_grad) {
    const auto raw = forward(*s.graph, s.inputs, model);
    loss_output_gradient(s, raw, model.norm, target, &out.loss);
    return out;
  }
  const ForwardTrace trace = forward_trace(*s.graph, s.inputs, model);
  const auto d_out = loss_output_gradient(s, trace.output, model.norm, target, &out.loss);
  out.grad = backward(*s.graph, model, trace, d_out);
  return out;
}

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state, const TrainConfig& cfg) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (state.m.empty()) state.m.assign(params.size(), 0.0);
  if (state.v.empty()) state.v.assign(params.size(), 0.0);
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: state size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + cfg.weight_decay * params[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

double mean_loss(const GnnModel& model, const std::vector<PreparedSample>& samples, LossTarget target,
                 std::size_t threads) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> losses(samples.size());
  parallel_for(samples.size(), threads,
               [&](std::size_t i) { losses[i] = sample_loss(model, samples[i], target, false).loss; });
  double acc = 0.0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(samples.size());
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, const TrainConfig& cfg,
                  const TrainOutputs& outputs, const Checkpoint* resume) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  TrainResult result{GnnModel(cfg.plan), {}, {}};
  GnnModel& model = result.model;
  TrainingState& state = result.state;
  if (resume) {
    if (!(resume->model.plan() == cfg.plan)) throw std::invalid_argument("train: checkpoint layer plan differs");
    model = resume->model;
    if (resume->training) state = *resume->training;
  } else {
    model.initialize(cfg.seed);
    model.norm = compute_norm_stats(train_set);
    model.fingerprint = cfg.fingerprint();
  }
  if (state.adam.m.empty()) {
    state.adam.m.assign(model.params().size(), 0.0);
    state.adam.v.assign(model.params().size(), 0.0);
  }

  std::vector<PreparedSample> train_prep(train_set.size());
  std::vector<PreparedSample> val_prep(val_set.size());
  parallel_for(train_set.size(), cfg.threads,
               [&](std::size_t i) { train_prep[i] = prepare_sample(train_set[i], model.norm, cfg.radio); });
  parallel_for(val_set.size(), cfg.threads,
               [&](std::size_t i) { val_prep[i] = prepare_sample(val_set[i], model.norm, cfg.radio); });
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    groups[{train_set[i].num_aps, train_set[i].num_ues}].push_back(i);
  }

  std::ofstream metrics;
  if (!outputs.metrics_path.empty()) {
    const bool append = state.epoch > 0 && std::filesystem::exists(outputs.metrics_path);
    metrics.open(outputs.metrics_path, append ? std::ios::app : std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot open '" + outputs.metrics_path + "' for writing");
    if (!append) metrics << "epoch,train_loss,val_loss,wall_ms\n";
  }

  std::vector<LossAndGrad> results;
  std::vector<double> grad(model.params().size());
  for (std::size_t epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto batches = make_batches(groups, cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& members = batches[b];
      results.assign(members.size(), {});
      try {
        parallel_for(members.size(), cfg.threads, [&](std::size_t i) {
          results[i] = sample_loss(model, train_prep[members[i]], cfg.loss_target, true);
        });
      } catch (const DomainError& e) {
        diverge(outputs, model, epoch, b, members, train_set, e.what());
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (const auto& r : results) {
        batch_loss += r.loss;
        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += r.grad[p];
      }
      if (!std::isfinite(batch_loss)) diverge(outputs, model, epoch, b, members, train_set, "non-finite loss");
      loss_sum += batch_loss;
      const double inv = 1.0 / static_cast<double>(members.size());
      double norm_sq = 0.0;
      for (double& g : grad) {
        g *= inv;
        norm_sq += g * g;
      }
      if (!std::isfinite(norm_sq)) diverge(outputs, model, epoch, b, members, train_set, "non-finite gradient");
      if (cfg.grad_clip > 0.0 && std::sqrt(norm_sq) > cfg.grad_clip) {
        const double scale = cfg.grad_clip / std::sqrt(norm_sq);
        for (double& g : grad) g *= scale;
      }
      adam_step(model.params(), grad, state.adam, cfg);
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(train_set.size());
    em.val_loss = mean_loss(model, val_prep, cfg.loss_target, cfg.threads);
    const double tracked = val_prep.empty() ? em.train_loss : em.val_loss;
    if (!std::isfinite(tracked)) diverge(outputs, model, epoch, batches.size(), {}, train_set, "non-finite validation loss");
    state.epoch = epoch;
    const bool is_best = state.best_epoch == 0 || tracked < state.best_val_loss;
    if (is_best) {
      state.best_val_loss = tracked;
      state.best_epoch = epoch;
    }
    const std::string json = checkpoint_to_json(model, &state);
    if (!outputs.checkpoint_path.empty()) {
      write_text(outputs.checkpoint_path, json);
      if (outputs.keep_epoch_checkpoints) {
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), ".epoch%03zu", epoch);
        write_text(outputs.checkpoint_path + suffix, json);
      }
    }
    if (is_best && !outputs.best_path.empty()) write_text(outputs.best_path, json);
    em.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (metrics.is_open()) {
      metrics << epoch << "," << fmt9(em.train_loss) << "," << fmt9(em.val_loss) << "," << fmt9(em.wall_ms) << "\n";
      metrics.flush();
    }
    if (outputs.log) {
      *outputs.log << "epoch " << epoch << "/" << cfg.epochs << " train_loss " << fmt9(em.train_loss) << " val_loss "
                   << fmt9(em.val_loss) << " (" << fmt9(em.wall_ms) << " ms)\n";
    }
    result.history.push_back(em);
    if (outputs.on_epoch) outputs.on_epoch(em, json);
  }
  return result;
}

}  // namespace cfgnn
