// Copyright 2026 The s2mlp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "s2mlp/errors.hpp"
#include "s2mlp/model.hpp"

namespace s2mlp {
namespace {

const std::string kBlock = "stage0/block0";

WeightArchive zero_block(WeightArchive w) {
  for (auto& e : w) {
    if (e.name.rfind(kBlock, 0) == 0) {
      for (auto& v : e.tensor.values()) v = 0.0f;
    }
  }
  return w;
}

TEST(Presets, MatchTheTableRows) {
  const auto s7 = build_config("Small/7");
  EXPECT_EQ(s7.stages, (std::vector<StageConfig>{{7, 192, 4}, {2, 384, 14}}));
  EXPECT_EQ(s7.expansion_ratio, 3u);
  EXPECT_EQ(s7.reduction, 4u);
  EXPECT_EQ(s7.num_classes, 1000u);
  EXPECT_EQ(s7.branch_count(), 3u);
  EXPECT_EQ(build_config("Medium/7").stages, (std::vector<StageConfig>{{7, 256, 7}, {2, 512, 17}}));
  EXPECT_EQ(build_config("Small/14").stages, (std::vector<StageConfig>{{14, 384, 4}, {2, 384, 14}}));
  EXPECT_THROW(build_config("Large/7"), ConfigError);
  for (const auto& name : preset_names()) EXPECT_NO_THROW(build_config(name).validate());
}

TEST(Presets, ValidationCatchesBadConfigs) {
  auto cfg = build_config("Tiny");
  cfg.active_branches = {1, 1};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = build_config("Tiny");
  cfg.stages[0].hidden_size = 6;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = build_config("Tiny");
  cfg.drop_path_rate = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Presets, StageGrids) {
  const auto s7 = build_config("Small/7");
  EXPECT_EQ(stage_grids(s7, 224, 224), (std::vector<std::pair<std::size_t, std::size_t>>{{32, 32}, {16, 16}}));
  EXPECT_EQ(stage_grids(s7, 252, 252), (std::vector<std::pair<std::size_t, std::size_t>>{{36, 36}, {18, 18}}));
  EXPECT_THROW(stage_grids(s7, 256, 256), ShapeError);
}

TEST(PatchEmbed, Shapes) {
  std::mt19937_64 rng(1);
  const Tensor x = oracle::random_normal<float>({1, 224, 224, 3}, rng);
  const AffineParams<float> p{oracle::random_normal<float>({147, 192}, rng, 0.02), Tensor({192})};
  EXPECT_EQ(patch_embed(x, p, 7).dims(), (Shape{1, 32, 32, 192}));
  EXPECT_THROW(patch_embed(Tensor({1, 10, 10, 3}), p, 7), ShapeError);
}

TEST(PatchEmbed, ZeroWeightsGiveBias) {
  const AffineParams<float> p{Tensor({12, 3}), Tensor({3}, {1, -2, 3})};
  std::mt19937_64 rng(2);
  const Tensor y = patch_embed(oracle::random_normal<float>({2, 4, 6, 3}, rng), p, 2);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], p.bias[i % 3]);
}

TEST(Component, OnlyOutputBiasSurvivesZeroWeights) {
  const auto cfg = build_config("Tiny");
  auto w = zero_block(init_weights(cfg, 1));
  for (std::size_t j = 0; j < 8; ++j) w.at(kBlock + "/mlp2/bias")[j] = static_cast<float>(j) - 3.5f;
  const auto p = BlockParams<float>::from_archive(w, kBlock, cfg);
  std::mt19937_64 rng(3);
  const Tensor y = s2mlpv2_component(oracle::random_normal<float>({2, 3, 3, 8}, rng), p, cfg);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], static_cast<float>(i % 8) - 3.5f);
}

TEST(Component, SumPoolingMatchesUniformAttentionOnRepeatedThirds) {
  const auto cfg = build_config("Tiny");
  auto w = init_weights(cfg, 2);
  // MLP1 = [I I I], so the three thirds coincide.
  Tensor& w1 = w.at(kBlock + "/mlp1/weight");
  for (auto& v : w1.values()) v = 0.0f;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t k = 0; k < 3; ++k) w1[i * 24 + k * 8 + i] = 1.0f;
  for (auto& v : w.at(kBlock + "/sa/fc1/weight").values()) v = 0.0f;
  const auto sa = BlockParams<float>::from_archive(w, kBlock, cfg);
  auto pooled_cfg = cfg;
  pooled_cfg.fusion_mode = FusionMode::SumPooling;
  const auto pooled = BlockParams<float>::from_archive(w, kBlock, pooled_cfg);
  EXPECT_FALSE(pooled.sa.has_value());

  Tensor x({1, 3, 3, 8});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.25f * static_cast<float>(i % 8) - 1.0f;
  const Tensor a = s2mlpv2_component(x, sa, cfg);
  const Tensor b = s2mlpv2_component(x, pooled, pooled_cfg);
  EXPECT_LE(max_abs_diff(a, b), 1e-6);
  // Constant maps stay constant.
  for (std::size_t i = 8; i < a.size(); ++i) EXPECT_FLOAT_EQ(a[i], a[i % 8]);
}

TEST(CmMlp, Examples) {
  const auto cfg = build_config("Small/7");
  for (const auto& spec : parameter_layout(cfg)) {
    if (spec.name == "stage0/block0/cm/fc1/weight") {
      EXPECT_EQ(spec.dims, (Shape{192, 576}));
    }
  }
  BlockParams<float> p;
  p.cm_fc1 = {Tensor({1, 1}, {1}), Tensor({1})};
  p.cm_fc2 = {Tensor({1, 1}, {2}), Tensor({1})};
  EXPECT_NEAR(cm_mlp(Tensor({1, 1, 1, 1}, {1}), p)[0], 1.6826895f, 1e-6f);
  p.cm_fc1 = {Tensor({2, 6}), Tensor({6})};
  p.cm_fc2 = {Tensor({6, 2}), Tensor({2}, {7, 8})};
  EXPECT_EQ(cm_mlp(Tensor::full({1, 1, 2, 2}, 3.0f), p), Tensor({1, 1, 2, 2}, {7, 8, 7, 8}));
}

TEST(Block, ZeroInnerWeightsGiveIdentity) {
  auto cfg = build_config("Tiny");
  const auto p = BlockParams<float>::from_archive(zero_block(init_weights(cfg, 3)), kBlock, cfg);
  std::mt19937_64 rng(4);
  const Tensor x = oracle::random_normal<float>({2, 4, 4, 8}, rng);
  EXPECT_EQ(block_forward(x, p, cfg), x);
}

TEST(Block, DropPathOnlyWhenTraining) {
  auto cfg = build_config("Tiny");
  cfg.drop_path_rate = 0.5;
  const auto w = init_weights(cfg, 5);
  auto p = BlockParams<float>::from_archive(w, kBlock, cfg);
  std::mt19937_64 rng(6);
  const Tensor x = oracle::random_normal<float>({16, 2, 2, 8}, rng);
  auto eval_cfg = cfg;
  eval_cfg.drop_path_rate = 0.0;
  const auto p0 = BlockParams<float>::from_archive(w, kBlock, eval_cfg);
  const Tensor reference = block_forward(x, p0, eval_cfg);
  EXPECT_EQ(block_forward(x, p, cfg, {false, 1}), reference);
  const Tensor trained = block_forward(x, p, cfg, {true, 1});
  EXPECT_NE(trained, reference);
  EXPECT_EQ(block_forward(x, p, cfg, {true, 1}), trained);
}

TEST(Model, TinyShapesAndDeterminism) {
  const auto cfg = build_config("Tiny");
  const auto w = init_weights(cfg, 7);
  std::mt19937_64 rng(8);
  const Tensor x = oracle::random_normal<float>({3, 8, 8, 3}, rng);
  std::vector<Shape> stages;
  const Tensor logits = model_forward(x, w, cfg, {}, &stages);
  EXPECT_EQ(logits.dims(), (Shape{3, 10}));
  EXPECT_EQ(stages, (std::vector<Shape>{{3, 2, 2, 8}}));
  EXPECT_EQ(model_forward(x, w, cfg), logits);
  EXPECT_EQ(model_forward(oracle::random_normal<float>({1, 16, 12, 3}, rng), w, cfg).dims(), (Shape{1, 10}));
}

TEST(Model, CropRemainderMatchesExplicitCrop) {
  const auto cfg = build_config("Tiny");
  const auto w = init_weights(cfg, 7);
  std::mt19937_64 rng(9);
  const Tensor x = oracle::random_normal<float>({1, 11, 9, 3}, rng);
  EXPECT_THROW(model_forward(x, w, cfg), ShapeError);
  ForwardOptions opts;
  opts.crop_remainder = true;
  std::vector<Shape> stages;
  EXPECT_EQ(model_forward(x, w, cfg, opts, &stages), model_forward(crop_spatial(x, 8, 8), w, cfg));
  EXPECT_EQ(stages, (std::vector<Shape>{{1, 2, 2, 8}}));
}

TEST(Model, Errors) {
  const auto cfg = build_config("Tiny");
  auto w = init_weights(cfg, 7);
  EXPECT_THROW(model_forward(Tensor({1, 6, 8, 3}), w, cfg), ShapeError);
  EXPECT_THROW(model_forward(Tensor({1, 8, 8, 2}), w, cfg), ShapeError);
  WeightArchive partial;
  for (const auto& e : w) {
    if (e.name != "head/bias") partial.add(e.name, e.tensor);
  }
  try {
    model_forward(Tensor({1, 8, 8, 3}), partial, cfg);
    FAIL();
  } catch (const ArchiveError& e) {
    EXPECT_NE(std::string(e.what()).find("head/bias"), std::string::npos);
  }
}

TEST(Model, TwoBranchAblations) {
  for (std::vector<int> branches : {std::vector<int>{1, 3}, std::vector<int>{1, 2}}) {
    auto cfg = build_config("Tiny");
    cfg.active_branches = branches;
    const auto w = init_weights(cfg, 9);
    EXPECT_EQ(w.at(kBlock + "/mlp1/weight").dims(), (Shape{8, 16}));
    EXPECT_EQ(w.at(kBlock + "/sa/fc2/weight").dims(), (Shape{2, 16}));
    std::mt19937_64 rng(10);
    EXPECT_EQ(model_forward(oracle::random_normal<float>({2, 8, 8, 3}, rng), w, cfg).dims(), (Shape{2, 10}));
  }
}

TEST(Model, InitConvention) {
  const auto cfg = build_config("Small/7");
  const auto w = init_weights(cfg, 11);
  EXPECT_EQ(w, init_weights(cfg, 11));
  const Tensor& embed = w.at("stage0/embed/weight");
  double sum = 0, sq = 0;
  for (float v : embed.values()) {
    EXPECT_LE(std::abs(v), 0.04f);
    sum += v;
    sq += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(embed.size());
  // Truncating a normal at 2 sigma leaves a std of about 0.88 sigma.
  EXPECT_NEAR(std::sqrt(sq / n - (sum / n) * (sum / n)), 0.02 * 0.8796, 0.001);
  for (float v : w.at("stage1/block3/ln2/gamma").values()) EXPECT_EQ(v, 1.0f);
  for (float v : w.at("stage1/block3/ln2/beta").values()) EXPECT_EQ(v, 0.0f);
  for (float v : w.at("head/bias").values()) EXPECT_EQ(v, 0.0f);
}

}  // namespace
}  // namespace s2mlp
