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
#include <span>

#include "s2mlp/tensor.hpp"

namespace s2mlp {

/// Bottleneck MLP of split attention. fc1 maps the pooled c-vector to c / r
/// channels, fc2 maps back to K * c attention logits.
template <class T>
struct SplitAttentionParams {
  AffineParams<T> fc1;
  AffineParams<T> fc2;
  std::size_t branches = 3;

  std::size_t channels() const { return fc1.in_channels(); }
  std::size_t bottleneck() const { return fc1.out_channels(); }

  /// Throws ConfigError when fc1/fc2 extents disagree with `branches`.
  void validate() const;
};

/// c / r, rejecting widths that would round to zero.
std::size_t bottleneck_width(std::size_t channels, std::size_t reduction);

/// Pooled statistic: sum over branches and tokens, one c-vector per batch
/// element. Output (B, c).
template <class T>
BasicTensor<T> branch_token_sum(std::span<const BasicTensor<T>> branches);

/// Attention logits (B, K * c) = GELU(a W1 + b1) W2 + b2.
template <class T>
BasicTensor<T> attention_logits(std::span<const BasicTensor<T>> branches,
                                const SplitAttentionParams<T>& p);

/// out[b, i, :] = sum_k X_k[b, i, :] * weights[b, k, :], with `weights` given
/// as (B, K * c) and already normalized.
template <class T>
BasicTensor<T> combine_branches(std::span<const BasicTensor<T>> branches,
                                const BasicTensor<T>& weights);

/// Full split attention: logits, softmax across branches, weighted sum.
template <class T>
BasicTensor<T> split_attention(std::span<const BasicTensor<T>> branches,
                               const SplitAttentionParams<T>& p);

/// Sum-pooling fusion: elementwise mean of the branches.
template <class T>
BasicTensor<T> branch_mean(std::span<const BasicTensor<T>> branches);

}  // namespace s2mlp
