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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "s2mlp/model.hpp"

namespace s2mlp {

/// Cost of one layer. FLOPs count one multiply-accumulate per weight use of
/// an affine layer; normalization, activations, shifts, softmax and the
/// elementwise reweighting are not counted.
struct LayerCost {
  std::string name;
  std::string group;  // "stage0", "stage1", ..., or "head"
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  bool per_image = false;  // applied once per image rather than per token
};

struct GroupCost {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::vector<GroupCost> groups;
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
  std::size_t input_height = 0;
  std::size_t input_width = 0;

  /// FLOPs of layers evaluated at every token (scale with image area).
  std::uint64_t token_flops() const;
  /// FLOPs of layers evaluated once per image (split-attention MLPs, head).
  std::uint64_t image_flops() const;
};

/// Parameter count only (flops left at zero). Exact integer count of every
/// weight, bias and layer-norm scale/shift.
CostReport count_params(const ModelConfig& cfg);

/// Parameters and FLOPs for a height x width input. Throws ShapeError if the
/// input is not divisible by the stage patch sizes.
CostReport count_flops(const ModelConfig& cfg, std::size_t height, std::size_t width);

/// Human-readable table with per-stage subtotals and a totals line.
std::string format_table(const CostReport& report);

/// One `name<TAB>params<TAB>flops` line per layer, then one per group
/// ("<group>/total") and a final "total" line.
std::string format_tsv(const CostReport& report);

/// "25.13M" style rendering.
std::string format_millions(std::uint64_t n);
/// "6.90B" style rendering.
std::string format_billions(std::uint64_t n);

}  // namespace s2mlp
