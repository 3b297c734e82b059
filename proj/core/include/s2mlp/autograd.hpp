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

// Reverse-mode differentiation over the operation vocabulary used by the
// spatial-shift model. A Tape records one node per operation in execution order,
// so node inputs always refer to earlier nodes and a single reverse sweep
// computes every gradient.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s2mlp/shift.hpp"
#include "s2mlp/tensor.hpp"

namespace s2mlp::ad {

enum class Op : std::uint8_t {
  Leaf,
  Affine,
  LayerNorm,
  Gelu,
  Add,
  Shift,
  SliceChannels,
  Patchify,
  BranchTokenSum,
  BranchSoftmax,
  BranchCombine,
  BranchMean,
  DropPath,
  MeanTokens,
  Sum,
  WeightedSum,
  SmoothedCrossEntropy,
  Custom,
};

std::string_view op_name(Op op);

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Handle to a recorded value. Copies share the (immutable) value.
template <class T>
struct Var {
  NodeId id = kNoNode;
  std::shared_ptr<const BasicTensor<T>> data;

  const BasicTensor<T>& value() const { return *data; }
  const Shape& dims() const { return data->dims(); }
};

/// Gradient rule for Op::Custom nodes: given the output gradient and the
/// input values, return one gradient per input.
template <class T>
using CustomBackward = std::function<std::vector<BasicTensor<T>>(
    const BasicTensor<T>& grad_out, std::span<const BasicTensor<T>* const> inputs)>;

template <class T>
struct Node {
  Op op = Op::Leaf;
  std::vector<NodeId> inputs;
  std::vector<Shape> input_dims;
  Shape dims;
  // Values the gradient rule reads back; empty for rules that need none.
  std::vector<std::shared_ptr<const BasicTensor<T>>> saved;
  std::vector<std::size_t> ints;
  double real = 0.0;
  std::string label;
  CustomBackward<T> custom;
};

template <class T>
class Gradients {
 public:
  explicit Gradients(std::size_t n) : grads_(n) {}

  bool has(NodeId id) const { return id < grads_.size() && grads_[id].has_value(); }
  /// Throws ContractError when the node is not reachable from the loss.
  const BasicTensor<T>& operator[](NodeId id) const;
  const BasicTensor<T>& of(const Var<T>& v) const { return (*this)[v.id]; }

  std::optional<BasicTensor<T>>& slot(NodeId id) { return grads_[id]; }

 private:
  std::vector<std::optional<BasicTensor<T>>> grads_;
};

template <class T>
class Tape {
 public:
  enum class Mode { Record, NoGrad };

  explicit Tape(Mode mode = Mode::Record) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const noexcept { return mode_ == Mode::Record; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Node<T>& node(NodeId id) const { return nodes_.at(id); }

  Var<T> leaf(BasicTensor<T> value, std::string label = {});

  /// Appends a node. In NoGrad mode nothing is stored and the returned Var
  /// only carries the value.
  Var<T> record(Op op, std::span<const Var<T>> inputs, BasicTensor<T> value,
                std::vector<std::shared_ptr<const BasicTensor<T>>> saved = {},
                std::vector<std::size_t> ints = {}, double real = 0.0);

  /// Records an operation computed outside the built-in vocabulary. Without
  /// a gradient rule, backward() through it raises UnsupportedOpError.
  Var<T> custom(std::string label, std::span<const Var<T>> inputs, BasicTensor<T> value,
                CustomBackward<T> backward = {});

  /// Gradients of the scalar `loss` with respect to every node it depends on.
  /// Contributions along shared sub-expressions are summed.
  Gradients<T> backward(const Var<T>& loss) const;

 private:
  Mode mode_;
  std::vector<Node<T>> nodes_;
};

// Differentiable operations. Each mirrors the pure kernel of the same name.

template <class T>
Var<T> affine(Tape<T>& t, const Var<T>& x, const Var<T>& weight, const Var<T>& bias);
template <class T>
Var<T> layer_norm(Tape<T>& t, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  double eps = kLayerNormEps);
template <class T>
Var<T> gelu(Tape<T>& t, const Var<T>& x);
template <class T>
Var<T> add(Tape<T>& t, const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> spatial_shift(Tape<T>& t, const Var<T>& x, const ShiftSpec& spec);
template <class T>
Var<T> slice_channels(Tape<T>& t, const Var<T>& x, std::size_t begin, std::size_t end);
template <class T>
Var<T> patchify(Tape<T>& t, const Var<T>& x, std::size_t patch);
template <class T>
Var<T> branch_token_sum(Tape<T>& t, std::span<const Var<T>> branches);
template <class T>
Var<T> branch_softmax(Tape<T>& t, const Var<T>& logits, std::size_t branches);
template <class T>
Var<T> combine_branches(Tape<T>& t, std::span<const Var<T>> branches, const Var<T>& weights);
template <class T>
Var<T> branch_mean(Tape<T>& t, std::span<const Var<T>> branches);

/// Stochastic depth on a residual branch: each batch element is zeroed with
/// probability `rate`, survivors are scaled by 1 / (1 - rate). The sampled
/// mask is frozen into the node for the backward pass.
template <class T>
Var<T> drop_path(Tape<T>& t, const Var<T>& x, double rate, std::mt19937_64& rng);

template <class T>
Var<T> mean_over_tokens(Tape<T>& t, const Var<T>& x);
template <class T>
Var<T> sum(Tape<T>& t, const Var<T>& x);
/// sum(x * weights) for a constant weight tensor of x's shape.
template <class T>
Var<T> weighted_sum(Tape<T>& t, const Var<T>& x, const BasicTensor<T>& weights);

/// Mean over the batch of label-smoothed cross-entropy. logits are (B, C).
template <class T>
Var<T> smoothed_cross_entropy(Tape<T>& t, const Var<T>& logits,
                              std::span<const std::size_t> targets, double eps);

/// Split attention composed from the primitives above.
template <class T>
Var<T> split_attention(Tape<T>& t, std::span<const Var<T>> branches, const Var<T>& fc1_weight,
                       const Var<T>& fc1_bias, const Var<T>& fc2_weight, const Var<T>& fc2_bias);

}  // namespace s2mlp::ad
