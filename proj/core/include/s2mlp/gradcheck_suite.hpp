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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2mlp/gradcheck.hpp"
#include "s2mlp/model.hpp"

namespace s2mlp {

struct GradcheckCase {
  std::string name;
  std::uint64_t seed = 0;
  ad::GradcheckResult result;
  bool passed = false;
};

struct GradcheckSuiteOptions {
  double tolerance = 1e-5;
  double step = 1e-5;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  ModelConfig model = build_config("Tiny");
};

/// Gradient checks of every differentiable operation, the block pieces and
/// the full model (input and all parameters), in f64 with drop rate 0 for
/// the model-level cases.
std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& opts = {});

/// Model weights in f64 with fan-in scaled spread (std gain/sqrt(fan_in) for
/// matrices, 0.3 gain around the default for vectors) so that gradients sit
/// well above finite-difference noise. Split-attention weights are damped
/// further to keep the branch softmax out of saturation.
BasicArchive<double> random_weights(const ModelConfig& cfg, std::uint64_t seed, double gain = 1.0);

}  // namespace s2mlp
