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
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s2mlp/archive.hpp"
#include "s2mlp/attention.hpp"
#include "s2mlp/autograd.hpp"
#include "s2mlp/tensor.hpp"

namespace s2mlp {

enum class FusionMode { SplitAttention, SumPooling };

std::string_view to_string(FusionMode mode);
/// Accepts "split_attention" or "sum_pooling"; throws ConfigError otherwise.
FusionMode parse_fusion_mode(std::string_view text);

/// One pyramid level: a p x p patch embedding followed by `num_blocks`
/// blocks of width `hidden_size`.
struct StageConfig {
  std::size_t patch_size = 1;
  std::size_t hidden_size = 1;
  std::size_t num_blocks = 1;

  bool operator==(const StageConfig&) const = default;
};

struct ModelConfig {
  std::string name;
  std::vector<StageConfig> stages;
  std::size_t expansion_ratio = 3;
  std::size_t reduction = 4;
  std::size_t num_classes = 1000;
  std::size_t in_channels = 3;
  FusionMode fusion_mode = FusionMode::SplitAttention;
  // Which of the three branches (1: first shift, 2: second shift,
  // 3: unshifted) feed the fusion. Ablations drop one of them.
  std::vector<int> active_branches{1, 2, 3};
  double drop_path_rate = 0.1;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
  std::size_t branch_count() const { return active_branches.size(); }
  /// Product of all stage patch sizes; image sides must be multiples of it.
  std::size_t downsampling() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Presets: "Small/7", "Medium/7", "Small/14" and the test-scale "Tiny".
/// Throws ConfigError for any other name.
ModelConfig build_config(std::string_view preset);
std::vector<std::string> preset_names();

/// Token grid (width, height) of every stage for an image of the given size.
/// Throws ShapeError if the image is not divisible by the patch sizes.
std::vector<std::pair<std::size_t, std::size_t>> stage_grids(const ModelConfig& cfg,
                                                             std::size_t width,
                                                             std::size_t height);

enum class ParamInit { TruncatedNormal, Zeros, Ones };

struct ParamSpec {
  std::string name;
  Shape dims;
  ParamInit init;
};

/// Every learnable tensor of the model in definition order, named by
/// '/'-separated paths such as "stage0/block2/mlp1/weight".
std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg);

/// Affine weights ~ N(0, 0.02^2) truncated at two standard deviations,
/// biases and betas zero, gammas one.
WeightArchive init_weights(const ModelConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Block-level parameter bundles for calling the pieces of the model directly.

template <class T>
struct LayerNormParams {
  BasicTensor<T> gamma;
  BasicTensor<T> beta;
};

template <class T>
struct BlockParams {
  LayerNormParams<T> ln1;
  AffineParams<T> mlp1;                         // c -> K c
  std::optional<SplitAttentionParams<T>> sa;    // absent under sum pooling
  AffineParams<T> mlp2;                         // c -> c
  LayerNormParams<T> ln2;
  AffineParams<T> cm_fc1;                       // c -> rho c
  AffineParams<T> cm_fc2;                       // rho c -> c
  double drop_path_rate = 0.0;

  /// Reads the block stored under `prefix` (e.g. "stage0/block1").
  static BlockParams from_archive(const BasicArchive<T>& weights, const std::string& prefix,
                                  const ModelConfig& cfg);
  /// Writes the tensors under `prefix` using the archive naming scheme.
  void to_archive(BasicArchive<T>& weights, const std::string& prefix) const;
};

// ---------------------------------------------------------------------------
// Graph construction on a tape. Parameters are pulled by name from a
// ParamSource so the same code serves inference, training, and gradcheck.

template <class T>
class ParamSource {
 public:
  ParamSource(ad::Tape<T>& tape, const BasicArchive<T>& weights)
      : tape_(tape), weights_(weights) {}

  /// Leaf for the named weight, created once per name. Throws ArchiveError.
  ad::Var<T> operator()(const std::string& name);

  /// Serve `name` from an existing variable instead of the archive.
  void bind(std::string name, ad::Var<T> var) { bound_.emplace_back(std::move(name), std::move(var)); }

  ad::Tape<T>& tape() { return tape_; }
  const std::vector<std::pair<std::string, ad::Var<T>>>& bound() const { return bound_; }

 private:
  ad::Tape<T>& tape_;
  const BasicArchive<T>& weights_;
  std::vector<std::pair<std::string, ad::Var<T>>> bound_;
};

/// Per-call options of the forward pass.
struct ForwardOptions {
  bool training = false;
  std::uint64_t seed = 0;  // DropPath masks
  // Drop trailing rows and columns that do not fill a whole patch, as a
  // strided patch convolution would. Off by default: such inputs are errors.
  bool crop_remainder = false;
};

namespace graph {

template <class T>
ad::Var<T> patch_embed(ad::Tape<T>& t, const ad::Var<T>& x, const ad::Var<T>& weight,
                       const ad::Var<T>& bias, std::size_t patch);

/// Expand c -> K c, split into K parts, shift parts by branch role, fuse,
/// project back to c.
template <class T>
ad::Var<T> s2mlpv2_component(ParamSource<T>& params, const std::string& prefix,
                             const ad::Var<T>& x, const ModelConfig& cfg);

template <class T>
ad::Var<T> cm_mlp(ParamSource<T>& params, const std::string& prefix, const ad::Var<T>& x);

/// Y = DropPath(ShiftMix(LN1(x))) + x;  Z = DropPath(CM(LN2(Y))) + Y.
template <class T>
ad::Var<T> block_forward(ParamSource<T>& params, const std::string& prefix, const ad::Var<T>& x,
                         const ModelConfig& cfg, bool training, std::mt19937_64& rng);

/// Image (B, W, H, C_in) -> logits (B, num_classes). When `stage_dims` is
/// given, the feature-map dims after each stage are appended to it.
template <class T>
ad::Var<T> model_forward(ParamSource<T>& params, const ad::Var<T>& image, const ModelConfig& cfg,
                         const ForwardOptions& opts, std::vector<Shape>* stage_dims = nullptr);

}  // namespace graph

// ---------------------------------------------------------------------------
// Plain-tensor entry points (no gradient recording).

template <class T>
BasicTensor<T> patch_embed(const BasicTensor<T>& x, const AffineParams<T>& p, std::size_t patch);

template <class T>
BasicTensor<T> s2mlpv2_component(const BasicTensor<T>& x, const BlockParams<T>& p,
                                 const ModelConfig& cfg);

template <class T>
BasicTensor<T> cm_mlp(const BasicTensor<T>& x, const BlockParams<T>& p);

template <class T>
BasicTensor<T> block_forward(const BasicTensor<T>& x, const BlockParams<T>& p,
                             const ModelConfig& cfg, const ForwardOptions& opts = {});

template <class T>
BasicTensor<T> model_forward(const BasicTensor<T>& image, const BasicArchive<T>& weights,
                             const ModelConfig& cfg, const ForwardOptions& opts = {},
                             std::vector<Shape>* stage_dims = nullptr);

}  // namespace s2mlp
