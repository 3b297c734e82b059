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

#include "s2mlp/attention.hpp"

#include <string>

namespace s2mlp {

template <class T>
void SplitAttentionParams<T>::validate() const {
  if (branches == 0) throw ConfigError("split attention needs at least one branch");
  if (fc1.weight.rank() != 2 || fc2.weight.rank() != 2) {
    throw ConfigError("split attention weights must be matrices");
  }
  if (fc2.in_channels() != fc1.out_channels()) {
    throw ConfigError("split attention: fc1 produces " + std::to_string(fc1.out_channels()) +
                      " channels, fc2 expects " + std::to_string(fc2.in_channels()));
  }
  if (fc2.out_channels() != branches * channels()) {
    throw ConfigError("split attention: fc2 must produce K*c = " +
                      std::to_string(branches * channels()) + " logits, got " +
                      std::to_string(fc2.out_channels()));
  }
}

std::size_t bottleneck_width(std::size_t channels, std::size_t reduction) {
  if (reduction == 0) throw ConfigError("reduction factor must be >= 1");
  const std::size_t w = channels / reduction;
  if (w == 0) {
    throw ConfigError("bottleneck width c/r is zero for c=" + std::to_string(channels) +
                      ", r=" + std::to_string(reduction));
  }
  return w;
}

namespace {

template <class T>
void check_branches(std::span<const BasicTensor<T>> branches) {
  if (branches.empty()) throw ConfigError("branch fusion needs at least one branch");
  const Shape& d = branches.front().dims();
  if (d.size() != 4) throw ShapeError("branches must be (B, W, H, C), got " + to_string(d));
  for (const auto& b : branches) {
    if (b.dims() != d) {
      throw ShapeError("branch dims differ: " + to_string(d) + " vs " + to_string(b.dims()));
    }
  }
}

}  // namespace

template <class T>
BasicTensor<T> branch_token_sum(std::span<const BasicTensor<T>> branches) {
  check_branches(branches);
  const Shape& d = branches.front().dims();
  const std::size_t batch = d[0], tokens = d[1] * d[2], c = d[3];
  BasicTensor<T> a({batch, c});
  for (const auto& x : branches) {
    for (std::size_t b = 0; b < batch; ++b) {
      const T* base = x.data() + b * tokens * c;
      T* out = a.data() + b * c;
      for (std::size_t t = 0; t < tokens; ++t)
        for (std::size_t j = 0; j < c; ++j) out[j] += base[t * c + j];
    }
  }
  return a;
}

template <class T>
BasicTensor<T> attention_logits(std::span<const BasicTensor<T>> branches,
                                const SplitAttentionParams<T>& p) {
  p.validate();
  if (branches.size() != p.branches) {
    throw ConfigError("split attention configured for " + std::to_string(p.branches) +
                      " branches, got " + std::to_string(branches.size()));
  }
  const BasicTensor<T> a = branch_token_sum(branches);
  if (a.channels() != p.channels()) {
    throw ShapeError("split attention: branches have " + std::to_string(a.channels()) +
                     " channels, params expect " + std::to_string(p.channels()));
  }
  return affine(gelu(affine(a, p.fc1)), p.fc2);
}

template <class T>
BasicTensor<T> combine_branches(std::span<const BasicTensor<T>> branches,
                                const BasicTensor<T>& weights) {
  check_branches(branches);
  const Shape& d = branches.front().dims();
  const std::size_t batch = d[0], tokens = d[1] * d[2], c = d[3], k = branches.size();
  if (weights.dims() != Shape{batch, k * c}) {
    throw ShapeError("branch weights must be " + to_string({batch, k * c}) + ", got " +
                     to_string(weights.dims()));
  }
  BasicTensor<T> out(d);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const T* x = branches[kk].data();
    for (std::size_t b = 0; b < batch; ++b) {
      const T* wk = weights.data() + b * k * c + kk * c;
      for (std::size_t t = 0; t < tokens; ++t) {
        const std::size_t off = (b * tokens + t) * c;
        for (std::size_t j = 0; j < c; ++j) out[off + j] += x[off + j] * wk[j];
      }
    }
  }
  return out;
}

template <class T>
BasicTensor<T> split_attention(std::span<const BasicTensor<T>> branches,
                               const SplitAttentionParams<T>& p) {
  const BasicTensor<T> logits = attention_logits(branches, p);
  return combine_branches(branches, softmax_over_branches(logits, p.branches));
}

template <class T>
BasicTensor<T> branch_mean(std::span<const BasicTensor<T>> branches) {
  check_branches(branches);
  BasicTensor<T> out(branches.front().dims());
  for (const auto& x : branches)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  const T inv = T{1} / static_cast<T>(branches.size());
  for (auto& v : out.values()) v *= inv;
  return out;
}

#define S2MLP_INSTANTIATE(T)                                                                 \
  template struct SplitAttentionParams<T>;                                                   \
  template BasicTensor<T> branch_token_sum(std::span<const BasicTensor<T>>);                 \
  template BasicTensor<T> attention_logits(std::span<const BasicTensor<T>>,                  \
                                           const SplitAttentionParams<T>&);                  \
  template BasicTensor<T> combine_branches(std::span<const BasicTensor<T>>,                  \
                                           const BasicTensor<T>&);                           \
  template BasicTensor<T> split_attention(std::span<const BasicTensor<T>>,                   \
                                          const SplitAttentionParams<T>&);                   \
  template BasicTensor<T> branch_mean(std::span<const BasicTensor<T>>);

S2MLP_INSTANTIATE(float)
S2MLP_INSTANTIATE(double)

#undef S2MLP_INSTANTIATE

}  // namespace s2mlp
