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

#include "s2mlp/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <utility>

namespace s2mlp {

using ad::Tape;
using ad::Var;

BasicArchive<double> random_weights(const ModelConfig& cfg, std::uint64_t seed, double gain) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BasicArchive<double> out;
  for (const auto& spec : parameter_layout(cfg)) {
    TensorD t(spec.dims);
    double base = 0.0, std = 0.3 * gain;
    if (spec.init == ParamInit::Ones) base = 1.0;
    if (spec.dims.size() == 2) std = gain / std::sqrt(static_cast<double>(spec.dims[0]));
    // Keep the branch softmax away from saturation.
    if (spec.name.find("/sa/") != std::string::npos) std *= 0.1;
    for (auto& v : t.values()) v = base + std * normal(rng);
    out.add(spec.name, std::move(t));
  }
  return out;
}

namespace {

TensorD random_tensor(Shape dims, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  TensorD t(std::move(dims));
  for (auto& v : t.values()) v = normal(rng);
  return t;
}

// Wraps `body` so its output is reduced by a fixed random projection.
ad::ScalarFunction projected(std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)> body,
                             TensorD projection) {
  return [body = std::move(body), projection = std::move(projection)](
             Tape<double>& t, std::span<const Var<double>> in) {
    return ad::weighted_sum(t, body(t, in), projection);
  };
}

struct Case {
  std::string name;
  std::vector<TensorD> inputs;
  ad::ScalarFunction fn;
};

// Gradcheck over x plus every parameter whose name starts with `prefix`.
Case param_case(std::string name, const ModelConfig& cfg, const BasicArchive<double>& weights,
                const std::string& prefix, TensorD x, Shape out_dims, std::mt19937_64& rng,
                std::function<Var<double>(ParamSource<double>&, const Var<double>&)> body) {
  std::vector<std::string> names;
  std::vector<TensorD> inputs{std::move(x)};
  for (const auto& e : weights) {
    if (e.name.rfind(prefix, 0) == 0) {
      names.push_back(e.name);
      inputs.push_back(e.tensor);
    }
  }
  TensorD projection = random_tensor(std::move(out_dims), rng);
  (void)cfg;
  auto fn = [names, body = std::move(body), projection = std::move(projection)](
                Tape<double>& t, std::span<const Var<double>> in) {
    static const BasicArchive<double> kEmpty;
    ParamSource<double> params(t, kEmpty);
    for (std::size_t i = 0; i < names.size(); ++i) params.bind(names[i], in[i + 1]);
    return ad::weighted_sum(t, body(params, in[0]), projection);
  };
  return {std::move(name), std::move(inputs), std::move(fn)};
}

std::vector<Case> build_cases(const ModelConfig& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Case> cases;
  auto add = [&](std::string name, std::vector<TensorD> inputs, Shape out_dims,
                 std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)> body) {
    cases.push_back({std::move(name), std::move(inputs),
                     projected(std::move(body), random_tensor(std::move(out_dims), rng))});
  };

  add("affine", {random_tensor({2, 2, 3, 5}, rng), random_tensor({5, 4}, rng), random_tensor({4}, rng)},
      {2, 2, 3, 4}, [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::affine(t, in[0], in[1], in[2]);
      });
  {
    TensorD gamma = random_tensor({8}, rng, 0.3);
    for (auto& v : gamma.values()) v += 1.0;
    add("layer_norm", {random_tensor({2, 3, 2, 8}, rng), gamma, random_tensor({8}, rng)},
        {2, 3, 2, 8}, [](Tape<double>& t, std::span<const Var<double>> in) {
          return ad::layer_norm(t, in[0], in[1], in[2]);
        });
  }
  add("gelu", {random_tensor({2, 2, 2, 4}, rng, 2.0)}, {2, 2, 2, 4},
      [](Tape<double>& t, std::span<const Var<double>> in) { return ad::gelu(t, in[0]); });
  add("add", {random_tensor({1, 2, 2, 4}, rng), random_tensor({1, 2, 2, 4}, rng)}, {1, 2, 2, 4},
      [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::add(t, ad::gelu(t, in[0]), in[1]);
      });
  add("spatial_shift1", {random_tensor({2, 4, 3, 8}, rng)}, {2, 4, 3, 8},
      [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::spatial_shift(t, in[0], ShiftSpec::first());
      });
  add("spatial_shift2", {random_tensor({2, 3, 4, 8}, rng)}, {2, 3, 4, 8},
      [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::spatial_shift(t, in[0], ShiftSpec::second());
      });
  add("slice_channels", {random_tensor({1, 2, 2, 12}, rng)}, {1, 2, 2, 4},
      [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::slice_channels(t, in[0], 4, 8);
      });
  add("patchify", {random_tensor({2, 4, 6, 2}, rng)}, {2, 2, 3, 8},
      [](Tape<double>& t, std::span<const Var<double>> in) { return ad::patchify(t, in[0], 2); });
  add("branch_token_sum",
      {random_tensor({2, 2, 3, 4}, rng), random_tensor({2, 2, 3, 4}, rng), random_tensor({2, 2, 3, 4}, rng)},
      {2, 4}, [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::branch_token_sum(t, in);
      });
  add("branch_softmax", {random_tensor({2, 12}, rng, 2.0)}, {2, 12},
      [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::branch_softmax(t, in[0], 3);
      });
  add("combine_branches",
      {random_tensor({2, 2, 2, 4}, rng), random_tensor({2, 2, 2, 4}, rng), random_tensor({2, 2, 2, 4}, rng),
       random_tensor({2, 12}, rng)},
      {2, 2, 2, 4}, [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::combine_branches(t, in.first(3), in[3]);
      });
  add("branch_mean", {random_tensor({1, 2, 2, 4}, rng), random_tensor({1, 2, 2, 4}, rng)}, {1, 2, 2, 4},
      [](Tape<double>& t, std::span<const Var<double>> in) { return ad::branch_mean(t, in); });
  add("drop_path", {random_tensor({4, 2, 2, 4}, rng)}, {4, 2, 2, 4},
      [seed](Tape<double>& t, std::span<const Var<double>> in) {
        std::mt19937_64 mask_rng(seed);  // same mask on every evaluation
        return ad::drop_path(t, in[0], 0.5, mask_rng);
      });
  add("mean_over_tokens", {random_tensor({2, 3, 2, 4}, rng)}, {2, 4},
      [](Tape<double>& t, std::span<const Var<double>> in) { return ad::mean_over_tokens(t, in[0]); });
  add("sum", {random_tensor({2, 2, 2, 3}, rng)}, {1},
      [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::sum(t, ad::gelu(t, in[0]));
      });
  {
    const std::vector<std::size_t> targets{0, 3, 4};
    cases.push_back({"smoothed_cross_entropy", {random_tensor({3, 5}, rng, 2.0)},
                     [targets](Tape<double>& t, std::span<const Var<double>> in) {
                       return ad::smoothed_cross_entropy<double>(t, in[0], targets, 0.1);
                     }});
  }
  add("split_attention",
      {random_tensor({2, 3, 2, 8}, rng), random_tensor({2, 3, 2, 8}, rng), random_tensor({2, 3, 2, 8}, rng),
       random_tensor({8, 2}, rng, 0.1), random_tensor({2}, rng), random_tensor({2, 24}, rng, 0.5),
       random_tensor({24}, rng)},
      {2, 3, 2, 8}, [](Tape<double>& t, std::span<const Var<double>> in) {
        return ad::split_attention(t, in.first(3), in[3], in[4], in[5], in[6]);
      });

  const BasicArchive<double> weights = random_weights(model, seed);
  const std::size_t c = model.stages.front().hidden_size;
  const Shape block_in{1, 4, 4, c};
  cases.push_back(param_case("s2mlpv2_component", model, weights, "stage0/block0/",
                             random_tensor(block_in, rng, 0.1), block_in, rng,
                             [&model](ParamSource<double>& p, const Var<double>& x) {
                               return graph::s2mlpv2_component(p, "stage0/block0", x, model);
                             }));
  cases.push_back(param_case("cm_mlp", model, weights, "stage0/block0/cm/",
                             random_tensor(block_in, rng, 0.1), block_in, rng,
                             [](ParamSource<double>& p, const Var<double>& x) {
                               return graph::cm_mlp(p, "stage0/block0", x);
                             }));
  cases.push_back(param_case("block_forward", model, weights, "stage0/block0/",
                             random_tensor(block_in, rng, 0.1), block_in, rng,
                             [&model](ParamSource<double>& p, const Var<double>& x) {
                               std::mt19937_64 unused(0);
                               return graph::block_forward(p, "stage0/block0", x, model, false, unused);
                             }));

  auto model_case = [&](std::string name, ModelConfig cfg) {
    cfg.drop_path_rate = 0.0;
    const BasicArchive<double> w = random_weights(cfg, seed);
    const std::size_t side = 2 * cfg.downsampling();
    cases.push_back(param_case(
        std::move(name), cfg, w, "", random_tensor({1, side, side, cfg.in_channels}, rng),
        {1, cfg.num_classes}, rng, [cfg](ParamSource<double>& p, const Var<double>& image) {
          return graph::model_forward(p, image, cfg, ForwardOptions{});
        }));
  };
  model_case("model", model);
  ModelConfig pooled = model;
  pooled.fusion_mode = FusionMode::SumPooling;
  model_case("model_sum_pooling", pooled);
  ModelConfig two = model;
  two.active_branches = {1, 3};
  model_case("model_branches_1_3", two);
  return cases;
}

}  // namespace

std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& opts) {
  opts.model.validate();
  std::vector<GradcheckCase> out;
  for (std::uint64_t seed : opts.seeds) {
    for (auto& c : build_cases(opts.model, seed)) {
      GradcheckCase r;
      r.name = c.name;
      r.seed = seed;
      r.result = ad::gradcheck(c.fn, std::move(c.inputs), opts.step);
      r.passed = r.result.max_rel_error <= opts.tolerance;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace s2mlp
