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
#include <string>
#include <utility>
#include <vector>

#include "s2mlp/errors.hpp"

namespace s2mlp {

/// Extents of a tensor, outermost first. Rank 1..4, every extent >= 1.
using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kMaxRank = 4;

/// Default epsilon added to the variance in layer_norm.
inline constexpr double kLayerNormEps = 1e-6;

std::string to_string(const Shape& dims);

/// Number of elements described by `dims`. Throws ShapeError if the shape
/// has rank 0, rank > 4, or a zero extent.
std::size_t shape_numel(const Shape& dims);

/// Dense contiguous row-major array. Feature maps are rank 4 laid out as
/// (batch, width, height, channels), so the channel axis is innermost.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : dims_{1}, data_(1, T{0}) {}
  explicit BasicTensor(Shape dims) : dims_(std::move(dims)), data_(shape_numel(dims_), T{0}) {}
  BasicTensor(Shape dims, std::vector<T> data);

  static BasicTensor full(Shape dims, T value);

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return dims_.at(axis); }
  std::size_t channels() const noexcept { return dims_.back(); }
  /// Product of all extents except the last.
  std::size_t rows() const noexcept { return data_.size() / dims_.back(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Element of a rank-4 feature map.
  T& at(std::size_t b, std::size_t w, std::size_t h, std::size_t c) noexcept {
    return data_[((b * dims_[1] + w) * dims_[2] + h) * dims_[3] + c];
  }
  const T& at(std::size_t b, std::size_t w, std::size_t h, std::size_t c) const noexcept {
    return data_[((b * dims_[1] + w) * dims_[2] + h) * dims_[3] + c];
  }

  /// Same values under new extents; the element count must agree.
  BasicTensor reshaped(Shape dims) const&;
  BasicTensor reshaped(Shape dims) &&;

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// One fully-connected layer: out[..., j] = sum_i x[..., i] * weight[i, j] + bias[j].
template <class T>
struct AffineParams {
  BasicTensor<T> weight;  // (in_channels, out_channels)
  BasicTensor<T> bias;    // (out_channels)

  std::size_t in_channels() const { return weight.extent(0); }
  std::size_t out_channels() const { return weight.extent(1); }
};

template <class T>
BasicTensor<T> affine(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias);

template <class T>
BasicTensor<T> affine(const BasicTensor<T>& x, const AffineParams<T>& p) {
  return affine(x, p.weight, p.bias);
}

/// Per-token normalization over the channel axis (biased variance).
template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, double eps = kLayerNormEps);

/// Exact GELU, x * Phi(x).
template <class T>
BasicTensor<T> gelu(const BasicTensor<T>& x);

template <class T>
T gelu_scalar(T x);

/// d/dx of x * Phi(x), i.e. Phi(x) + x * phi(x).
template <class T>
T gelu_derivative(T x);

/// Softmax of a K x c matrix along its first axis (each column sums to 1).
template <class T>
BasicTensor<T> softmax_over_branches(const BasicTensor<T>& a);

/// Batched form: the last axis holds a row-major K x c matrix; every
/// leading index is an independent instance.
template <class T>
BasicTensor<T> softmax_over_branches(const BasicTensor<T>& logits, std::size_t branches);

/// (B, W, H, C) -> (B, C): per-channel mean over the W*H positions.
template <class T>
BasicTensor<T> mean_over_tokens(const BasicTensor<T>& x);

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Channels [begin, end) of any-rank tensor.
template <class T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t end);

/// (B, W, H, C) -> (B, W/p, H/p, p*p*C). Each output token is its p x p
/// patch flattened in (dw, dh, c) order.
template <class T>
BasicTensor<T> patchify(const BasicTensor<T>& x, std::size_t patch);

/// Inverse rearrangement of patchify back to `image_dims`.
template <class T>
BasicTensor<T> unpatchify(const BasicTensor<T>& tokens, std::size_t patch, const Shape& image_dims);

/// Numerically stable log-softmax along the last axis.
/// Keeps the leading `width` x `height` positions of a (B, W, H, C) map.
template <class T>
BasicTensor<T> crop_spatial(const BasicTensor<T>& x, std::size_t width, std::size_t height);

template <class T>
BasicTensor<T> log_softmax(const BasicTensor<T>& x);

/// Largest |a[i] - b[i]|; shapes must match.
template <class T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace s2mlp
