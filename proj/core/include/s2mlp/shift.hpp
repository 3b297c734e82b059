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

#include <array>

#include "s2mlp/tensor.hpp"

namespace s2mlp {

enum class Axis { Width, Height };

/// Shift one channel quarter by one step. direction +1 moves content toward
/// larger indices (out[i] = in[i - 1]); -1 toward smaller (out[i] = in[i + 1]).
struct ShiftGroup {
  Axis axis;
  int direction;

  bool operator==(const ShiftGroup&) const = default;
};

/// Direction assignment for the four channel quarters, in channel order.
struct ShiftSpec {
  std::array<ShiftGroup, 4> groups;

  /// +W, -W, +H, -H.
  static ShiftSpec first();
  /// +H, -H, +W, -W: the asymmetric counterpart of first().
  static ShiftSpec second();

  /// Same directions with width and height exchanged.
  ShiftSpec transposed() const;

  bool operator==(const ShiftSpec&) const = default;
};

/// Out-of-place quarter-channel shift of a (B, W, H, C) map. Positions the
/// shift vacates keep their own value. Throws ConfigError unless C % 4 == 0.
template <class T>
BasicTensor<T> spatial_shift(const BasicTensor<T>& x, const ShiftSpec& spec);

/// Transpose of spatial_shift as a linear map: <S(x), y> == <x, S^T(y)>.
template <class T>
BasicTensor<T> spatial_shift_adjoint(const BasicTensor<T>& g, const ShiftSpec& spec);

template <class T>
BasicTensor<T> spatial_shift1(const BasicTensor<T>& x) {
  return spatial_shift(x, ShiftSpec::first());
}

template <class T>
BasicTensor<T> spatial_shift2(const BasicTensor<T>& x) {
  return spatial_shift(x, ShiftSpec::second());
}

/// Swaps the width and height axes of a (B, W, H, C) map.
template <class T>
BasicTensor<T> transpose_spatial(const BasicTensor<T>& x);

}  // namespace s2mlp
