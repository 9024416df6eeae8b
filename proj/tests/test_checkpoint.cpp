// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "cfgnn/checkpoint.hpp"
#include "test_support.hpp"

namespace cfgnn {
namespace {

TrainingState some_state(std::size_t n) {
  TrainingState st;
  st.epoch = 7;
  st.best_epoch = 5;
  st.best_val_loss = 0.123456789012345678;
  st.adam.step = 210;
  std::mt19937_64 rng(1);
  st.adam.m = testing::random_inputs(n, rng);
  st.adam.v = testing::random_inputs(n, rng);
  for (double& v : st.adam.v) v = v * v * 1e-7;
  return st;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  auto model = testing::random_model(3);
  model.fingerprint = "abc123";
  model.norm = {-33.3333333333333, 3.14159265358979, -7.1, 2.718281828459045};
  const auto st = some_state(model.params().size());
  const auto back = checkpoint_from_json(checkpoint_to_json(model, &st));
  EXPECT_EQ(back.model.params(), model.params());
  EXPECT_EQ(back.model.norm, model.norm);
  EXPECT_EQ(back.model.plan(), model.plan());
  EXPECT_EQ(back.model.fingerprint, "abc123");
  ASSERT_TRUE(back.training.has_value());
  EXPECT_EQ(*back.training, st);
  EXPECT_EQ(checkpoint_to_json(back.model, &*back.training), checkpoint_to_json(model, &st));
}

TEST(Checkpoint, ModelOnly) {
  LayerPlan plan;
  plan.sizes = {1, 4, 1};
  const auto model = testing::random_model(4, plan);
  const auto back = checkpoint_from_json(checkpoint_to_json(model));
  EXPECT_FALSE(back.training.has_value());
  EXPECT_EQ(back.model.params(), model.params());
  EXPECT_EQ(back.model.plan().sizes, plan.sizes);
}

TEST(Checkpoint, DocumentLayout) {
  const auto model = testing::random_model(5);
  const auto j = nlohmann::json::parse(checkpoint_to_json(model));
  EXPECT_EQ(j.at("format"), "cfgnn-checkpoint");
  EXPECT_EQ(j.at("version"), 1);
  EXPECT_EQ(j.at("tensors").size(), model.tensors().size());
  EXPECT_EQ(j.at("tensors")[0].at("name"), model.tensors()[0].name);
  EXPECT_TRUE(j.at("norm").contains("out_std"));
}

TEST(Checkpoint, RejectsInconsistentDocuments) {
  const auto model = testing::random_model(6);
  auto j = nlohmann::json::parse(checkpoint_to_json(model));
  auto bad = j;
  bad["format"] = "other";
  EXPECT_THROW(checkpoint_from_json(bad.dump()), std::runtime_error);
  bad = j;
  bad["version"] = 2;
  EXPECT_THROW(checkpoint_from_json(bad.dump()), std::runtime_error);
  bad = j;
  bad["tensors"][0]["data"].erase(0);
  EXPECT_THROW(checkpoint_from_json(bad.dump()), std::runtime_error);
  bad = j;
  bad["tensors"][0]["shape"] = {99, 1};
  EXPECT_THROW(checkpoint_from_json(bad.dump()), std::runtime_error);
  bad = j;
  bad["tensors"].erase(bad["tensors"].size() - 1);
  EXPECT_THROW(checkpoint_from_json(bad.dump()), std::runtime_error);
  EXPECT_ANY_THROW(checkpoint_from_json("{not json"));
  auto nan_model = model;
  nan_model.params()[0] = NAN;
  EXPECT_THROW(checkpoint_to_json(nan_model), std::runtime_error);
}

TEST(Checkpoint, SaveAndLoadFile) {
  testing::TempDir dir;
  const auto model = testing::random_model(7);
  const auto st = some_state(model.params().size());
  const std::string path = dir.file("model.json");
  save_checkpoint(path, model, &st);
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.model.params(), model.params());
  EXPECT_EQ(*back.training, st);
  EXPECT_EQ(testing::read_file(path), checkpoint_to_json(model, &st));
  EXPECT_THROW(load_checkpoint(dir.file("missing.json")), std::runtime_error);
  EXPECT_THROW(save_checkpoint(dir.file("no/such/dir/m.json"), model), std::runtime_error);
}

}  // namespace
}  // namespace cfgnn
