// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/checkpoint.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace cfgnn {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "cfgnn-checkpoint";
constexpr int kVersion = 1;

void check_finite(const std::vector<double>& v, const std::string& what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::runtime_error("checkpoint: non-finite value in " + what);
  }
}

}  // namespace

std::string checkpoint_to_json(const GnnModel& model, const TrainingState* training) {
  check_finite(model.params(), "parameters");
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["plan"] = {{"sizes", model.plan().sizes}, {"heads", model.plan().heads}};
  j["norm"] = {{"in_mean", model.norm.in_mean},
               {"in_std", model.norm.in_std},
               {"out_mean", model.norm.out_mean},
               {"out_std", model.norm.out_std}};
  j["fingerprint"] = model.fingerprint;
  json tensors = json::array();
  for (const auto& t : model.tensors()) {
    const auto first = model.params().begin() + static_cast<std::ptrdiff_t>(t.offset);
    tensors.push_back({{"name", t.name},
                       {"shape", {t.rows, t.cols}},
                       {"data", std::vector<double>(first, first + static_cast<std::ptrdiff_t>(t.size()))}});
  }
  j["tensors"] = std::move(tensors);
  if (training) {
    check_finite(training->adam.m, "adam.m");
    check_finite(training->adam.v, "adam.v");
    j["training"] = {{"epoch", training->epoch},
                     {"best_val_loss", training->best_val_loss},
                     {"best_epoch", training->best_epoch},
                     {"adam_step", training->adam.step},
                     {"adam_m", training->adam.m},
                     {"adam_v", training->adam.v}};
  }
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("format").get<std::string>() != kFormat) throw std::runtime_error("checkpoint: unknown format");
  if (j.at("version").get<int>() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  LayerPlan plan;
  plan.sizes = j.at("plan").at("sizes").get<std::vector<std::size_t>>();
  plan.heads = j.at("plan").at("heads").get<std::size_t>();
  plan.validate();
  Checkpoint ckpt{GnnModel(plan), std::nullopt};
  GnnModel& model = ckpt.model;
  const json& norm = j.at("norm");
  model.norm.in_mean = norm.at("in_mean").get<double>();
  model.norm.in_std = norm.at("in_std").get<double>();
  model.norm.out_mean = norm.at("out_mean").get<double>();
  model.norm.out_std = norm.at("out_std").get<double>();
  model.norm.validate();
  model.fingerprint = j.at("fingerprint").get<std::string>();

  const json& tensors = j.at("tensors");
  if (tensors.size() != model.tensors().size()) throw std::runtime_error("checkpoint: tensor count mismatch");
  for (const json& t : tensors) {
    const std::string name = t.at("name").get<std::string>();
    const TensorInfo& info = model.tensor(name);
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != info.rows || shape[1] != info.cols) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    const auto data = t.at("data").get<std::vector<double>>();
    if (data.size() != info.size()) throw std::runtime_error("checkpoint: size mismatch for " + name);
    std::copy(data.begin(), data.end(), model.params().begin() + static_cast<std::ptrdiff_t>(info.offset));
  }
  check_finite(model.params(), "parameters");

  if (j.contains("training")) {
    const json& tr = j.at("training");
    TrainingState state;
    state.epoch = tr.at("epoch").get<std::size_t>();
    state.best_val_loss = tr.at("best_val_loss").get<double>();
    state.best_epoch = tr.at("best_epoch").get<std::size_t>();
    state.adam.step = tr.at("adam_step").get<std::uint64_t>();
    state.adam.m = tr.at("adam_m").get<std::vector<double>>();
    state.adam.v = tr.at("adam_v").get<std::vector<double>>();
    if (state.adam.m.size() != model.params().size() || state.adam.v.size() != model.params().size()) {
      throw std::runtime_error("checkpoint: optimizer state size mismatch");
    }
    ckpt.training = std::move(state);
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const GnnModel& model, const TrainingState* training) {
  const std::string text = checkpoint_to_json(model, training);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return checkpoint_from_json(ss.str());
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace cfgnn
