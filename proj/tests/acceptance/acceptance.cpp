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

// Acceptance checks. Each criterion prints one PASS/FAIL line; tolerances
// are fixed here. Run with --criterion N to evaluate a single one.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "s2mlp/analysis.hpp"
#include "s2mlp/archive.hpp"
#include "s2mlp/attention.hpp"
#include "s2mlp/gradcheck_suite.hpp"
#include "s2mlp/model.hpp"
#include "s2mlp/shift.hpp"
#include "s2mlp/training.hpp"

namespace {

using namespace s2mlp;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [out of range]");
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

ModelConfig ablation(FusionMode fusion, std::vector<int> branches) {
  auto cfg = build_config("Small/7");
  cfg.fusion_mode = fusion;
  cfg.name += fusion == FusionMode::SumPooling ? " sum-pooling" : "";
  if (branches.size() != 3) cfg.name += " branches " + std::to_string(branches[0]) + "," + std::to_string(branches[1]);
  cfg.active_branches = std::move(branches);
  return cfg;
}

void parameter_counts(Outcome& o) {
  const double s7 = count_params(build_config("Small/7")).total_params / 1e6;
  const double m7 = count_params(build_config("Medium/7")).total_params / 1e6;
  o.check(within(s7, 24.5, 25.5), fmt("Small/7 %.2fM in [24.5, 25.5]", s7));
  o.check(within(m7, 53.9, 56.1), fmt("Medium/7 %.2fM in [53.9, 56.1]", m7));
}

void flop_counts(Outcome& o) {
  const double s7 = count_flops(build_config("Small/7"), 224, 224).total_flops / 1e9;
  const double m7 = count_flops(build_config("Medium/7"), 224, 224).total_flops / 1e9;
  o.check(within(s7, 6.69, 7.11), fmt("Small/7 %.3fB in [6.69, 7.11]", s7));
  o.check(within(m7, 15.8, 16.8), fmt("Medium/7 %.3fB in [15.8, 16.8]", m7));
}

void variants(Outcome& o) {
  const auto s14 = count_flops(build_config("Small/14"), 224, 224);
  o.check(within(s14.total_params / 1e6, 28.5, 31.5), fmt("Small/14 params %.2fM in [28.5, 31.5]", s14.total_params / 1e6));
  o.check(within(s14.total_flops / 1e9, 5.4, 6.0), fmt("Small/14 flops %.3fB in [5.4, 6.0]", s14.total_flops / 1e9));
  const double pooled = count_params(ablation(FusionMode::SumPooling, {1, 2, 3})).total_params / 1e6;
  o.check(within(pooled, 21.0, 24.0), fmt("sum pooling params %.2fM in [21, 24]", pooled));
  for (std::vector<int> b : {std::vector<int>{1, 2}, std::vector<int>{1, 3}, std::vector<int>{2, 3}}) {
    const auto r = count_flops(ablation(FusionMode::SplitAttention, b), 224, 224);
    const std::string tag = "branches " + std::to_string(b[0]) + "," + std::to_string(b[1]);
    o.check(within(r.total_params / 1e6, 21.0, 23.0), tag + fmt(" params %.2fM in [21, 23]", r.total_params / 1e6));
    o.check(within(r.total_flops / 1e9, 5.9, 6.5), tag + fmt(" flops %.3fB in [5.9, 6.5]", r.total_flops / 1e9));
  }
}

void shift_oracle(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> side(1, 8), quarter(1, 4);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const Tensor x = oracle::random_integer_map({1, side(rng), side(rng), 4 * quarter(rng)}, rng, -1000, 1000);
    if (spatial_shift1(x) != oracle::shift(x, true)) ++mismatches;
    if (spatial_shift2(x) != oracle::shift(x, false)) ++mismatches;
  }
  o.check(mismatches == 0, fmt("%.0f of 400 comparisons differ from the index oracle", mismatches));
}

void gradient_suite(Outcome& o) {
  const auto start = Clock::now();
  const auto cases = run_gradcheck_suite();
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  double worst = 0;
  std::string worst_name;
  std::size_t failed = 0;
  for (const auto& c : cases) {
    if (c.result.max_rel_error > worst) {
      worst = c.result.max_rel_error;
      worst_name = c.name;
    }
    if (c.result.max_rel_error > 1e-5) ++failed;
  }
  o.check(failed == 0, fmt("%.0f/%.0f cases <= 1e-5", static_cast<double>(cases.size() - failed),
                           static_cast<double>(cases.size())) +
                           fmt(", worst %.2e", worst) + " (" + worst_name + ")");
  o.check(secs < 120.0, fmt("%.1f s < 120 s", secs));
}

void adjoint_identity(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> side(1, 8), quarter(1, 4);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const Shape d{1, side(rng), side(rng), 4 * quarter(rng)};
    const Tensor x = oracle::random_integer_map(d, rng, -100, 100);
    const Tensor y = oracle::random_integer_map(d, rng, -100, 100);
    for (const auto& spec : {ShiftSpec::first(), ShiftSpec::second()}) {
      if (oracle::dot(spatial_shift(x, spec), y) != oracle::dot(x, spatial_shift_adjoint(y, spec))) ++bad;
    }
  }
  o.check(bad == 0, fmt("%.0f of 200 inner-product pairs differ", bad));
}

void attention_properties(Outcome& o) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> side(1, 4), quarter(1, 4);
  double convex_violation = 0, identity_error = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t c = 4 * quarter(rng), bn = bottleneck_width(c, 4);
    SplitAttentionParams<float> p;
    p.fc1 = {oracle::random_normal<float>({c, bn}, rng, 0.5), oracle::random_normal<float>({bn}, rng)};
    p.fc2 = {oracle::random_normal<float>({bn, 3 * c}, rng), oracle::random_normal<float>({3 * c}, rng)};
    const Shape d{2, side(rng), side(rng), c};
    std::vector<Tensor> xs;
    for (int k = 0; k < 3; ++k) xs.push_back(oracle::random_normal<float>(d, rng));
    const Tensor out = split_attention<float>(xs, p);
    for (std::size_t j = 0; j < out.size(); ++j) {
      const float lo = std::min({xs[0][j], xs[1][j], xs[2][j]});
      const float hi = std::max({xs[0][j], xs[1][j], xs[2][j]});
      convex_violation = std::max(convex_violation, static_cast<double>(std::max(lo - out[j], out[j] - hi)));
    }
    const std::vector<Tensor> same{xs[0], xs[0], xs[0]};
    identity_error = std::max(identity_error, max_abs_diff(split_attention<float>(same, p), xs[0]));
  }
  o.check(convex_violation <= 1e-6, fmt("convex bound violation %.2e <= 1e-6", std::max(convex_violation, 0.0)));
  o.check(identity_error <= 1e-6, fmt("identical-branch error %.2e <= 1e-6", identity_error));
}

Tensor reduced_pipeline(const Tensor& image, const WeightArchive& w, const ModelConfig& cfg) {
  Tensor x = image;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const std::string sp = "stage" + std::to_string(s);
    x = affine(patchify(x, cfg.stages[s].patch_size), w.at(sp + "/embed/weight"), w.at(sp + "/embed/bias"));
  }
  x = layer_norm(x, w.at("norm/gamma"), w.at("norm/beta"));
  return affine(mean_over_tokens(x), w.at("head/weight"), w.at("head/bias"));
}

void residual_identity(Outcome& o) {
  ModelConfig two;
  two.name = "two-stage";
  two.stages = {{2, 8, 2}, {2, 16, 2}};
  two.num_classes = 7;
  for (const auto& cfg : {build_config("Tiny"), two}) {
    WeightArchive w = init_weights(cfg, 5);
    std::mt19937_64 rng(6);
    for (auto& e : w) {
      if (e.name.find("/block") != std::string::npos) {
        for (auto& v : e.tensor.values()) v = 0.0f;
      } else {
        for (auto& v : e.tensor.values()) v += static_cast<float>(std::normal_distribution<double>(0.0, 0.5)(rng));
      }
    }
    const std::size_t side = 2 * cfg.downsampling();
    const Tensor image = oracle::random_normal<float>({3, side, side + cfg.downsampling(), 3}, rng);
    const bool same = model_forward(image, w, cfg) == reduced_pipeline(image, w, cfg);
    o.check(same, cfg.name + (same ? " bit-identical" : " differs"));
  }
}

void resolution_invariance(Outcome& o) {
  const auto cfg = build_config("Small/7");
  const auto weights = init_weights(cfg, 9);
  const auto snapshot = weights;
  std::mt19937_64 rng(10);
  ForwardOptions opts;
  opts.crop_remainder = true;
  for (std::size_t side : {224u, 256u}) {
    std::vector<Shape> stages;
    const Tensor logits = model_forward(oracle::random_normal<float>({1, side, side, 3}, rng), weights, cfg, opts, &stages);
    std::ostringstream grid;
    for (const auto& d : stages) grid << ' ' << d[1] << 'x' << d[2] << 'x' << d[3];
    o.check(logits.dims() == Shape{1, 1000},
            std::to_string(side) + "^2 -> " + std::to_string(logits.size()) + " logits, grids" + grid.str());
  }
  o.check(weights == snapshot, "weights untouched");
}

void toy_training(Outcome& o) {
  const auto start = Clock::now();
  const auto cfg = build_config("Tiny");
  TrainSettings s;
  s.steps = 2000;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    ToySpec spec;
    spec.size = 64;
    spec.seed = seed;
    s.seed = seed;
    const auto data = make_toy_dataset(spec);
    const auto r = train_loop(cfg, data, s);
    const double acc = accuracy(cfg, r.weights, data);
    o.check(acc >= 0.99, fmt("seed %.0f accuracy %.4f >= 0.99", static_cast<double>(seed), acc));
    if (seed == 0) {
      const auto again = train_loop(cfg, data, s);
      bool same = again.weights == r.weights && again.history.size() == r.history.size();
      for (std::size_t i = 0; same && i < r.history.size(); ++i) same = again.history[i].loss == r.history[i].loss;
      o.check(same, same ? "rerun identical" : "rerun differs");
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  o.check(secs < 300.0, fmt("%.1f s < 300 s", secs));
}

void serialization(Outcome& o) {
  const auto dir = std::filesystem::temp_directory_path();
  for (const auto& cfg : {build_config("Tiny"), build_config("Small/7"), ablation(FusionMode::SumPooling, {1, 2, 3}),
                          ablation(FusionMode::SplitAttention, {1, 3})}) {
    const auto w = init_weights(cfg, 12);
    const auto path = dir / ("s2mlp_acceptance_" + std::to_string(std::random_device{}()) + ".s2v2");
    save_weights(w, path);
    const auto back = load_weights(path);
    const auto bytes = encode_weights(back);
    std::filesystem::remove(path);
    bool exact = back.size() == w.size();
    auto a = w.begin();
    for (auto b = back.begin(); exact && b != back.end(); ++a, ++b) {
      exact = a->name == b->name && a->tensor.dims() == b->tensor.dims() &&
              std::memcmp(a->tensor.data(), b->tensor.data(), a->tensor.size() * sizeof(float)) == 0;
    }
    exact = exact && bytes == encode_weights(w);
    const auto params = count_params(cfg).total_params;
    o.check(exact, cfg.name + (exact ? " round trip bit-exact" : " round trip differs"));
    o.check(back.scalar_count() == params,
            cfg.name + " scalars " + std::to_string(back.scalar_count()) + " vs params " + std::to_string(params));
  }
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Outcome&)> run;
  double budget_seconds;  // 0: no runtime bound
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "parameter counts", parameter_counts, 1.0},
      {2, "FLOP counts at 224x224", flop_counts, 1.0},
      {3, "variant counts", variants, 0},
      {4, "shift oracle equivalence", shift_oracle, 0},
      {5, "gradient suite", gradient_suite, 0},
      {6, "shift adjoint identity", adjoint_identity, 0},
      {7, "split-attention properties", attention_properties, 0},
      {8, "residual identity", residual_identity, 0},
      {9, "resolution invariance", resolution_invariance, 0},
      {10, "toy training", toy_training, 0},
      {11, "serialization", serialization, 0},
  };
  int only = 0;
  if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) {
    only = std::atoi(argv[2]);
  } else if (argc != 1) {
    std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
    return 2;
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Outcome o;
    const auto start = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_seconds > 0) o.check(secs < c.budget_seconds, fmt("%.3f s < %.0f s", secs, c.budget_seconds));
    std::printf("%s  %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion %d\n", only);
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
