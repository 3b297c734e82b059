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

#include "s2mlp/shift.hpp"

#include <algorithm>
#include <string>

namespace s2mlp {

ShiftSpec ShiftSpec::first() {
  return {{{{Axis::Width, +1}, {Axis::Width, -1}, {Axis::Height, +1}, {Axis::Height, -1}}}};
}

ShiftSpec ShiftSpec::second() {
  return {{{{Axis::Height, +1}, {Axis::Height, -1}, {Axis::Width, +1}, {Axis::Width, -1}}}};
}

ShiftSpec ShiftSpec::transposed() const {
  ShiftSpec t = *this;
  for (auto& g : t.groups) g.axis = g.axis == Axis::Width ? Axis::Height : Axis::Width;
  return t;
}

namespace {

void check_shiftable(const Shape& dims) {
  if (dims.size() != 4) {
    throw ShapeError("spatial shift expects (B, W, H, C), got " + to_string(dims));
  }
  if (dims[3] % 4 != 0) {
    throw ConfigError("spatial shift needs channels divisible by 4, got " +
                      std::to_string(dims[3]));
  }
}

// Source coordinate along the shifted axis for destination `pos`.
std::size_t source_of(std::size_t pos, std::size_t n, int direction) {
  if (direction > 0) return pos == 0 ? 0 : pos - 1;
  return pos + 1 == n ? pos : pos + 1;
}

// Visits every (destination, source) element offset pair for one quarter.
template <class F>
void for_each_quarter_pair(const Shape& dims, std::size_t quarter, const ShiftGroup& g, F&& f) {
  const std::size_t batch = dims[0], width = dims[1], height = dims[2], c = dims[3];
  const std::size_t q = c / 4;
  const std::size_t c0 = quarter * q;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t w = 0; w < width; ++w) {
      const std::size_t sw = g.axis == Axis::Width ? source_of(w, width, g.direction) : w;
      for (std::size_t h = 0; h < height; ++h) {
        const std::size_t sh = g.axis == Axis::Height ? source_of(h, height, g.direction) : h;
        const std::size_t dst = ((b * width + w) * height + h) * c + c0;
        const std::size_t src = ((b * width + sw) * height + sh) * c + c0;
        f(dst, src, q);
      }
    }
  }
}

}  // namespace

template <class T>
BasicTensor<T> spatial_shift(const BasicTensor<T>& x, const ShiftSpec& spec) {
  check_shiftable(x.dims());
  BasicTensor<T> y(x.dims());
  const T* in = x.data();
  T* out = y.data();
  for (std::size_t quarter = 0; quarter < 4; ++quarter) {
    for_each_quarter_pair(x.dims(), quarter, spec.groups[quarter],
                          [&](std::size_t dst, std::size_t src, std::size_t n) {
                            std::copy(in + src, in + src + n, out + dst);
                          });
  }
  return y;
}

template <class T>
BasicTensor<T> spatial_shift_adjoint(const BasicTensor<T>& g, const ShiftSpec& spec) {
  check_shiftable(g.dims());
  BasicTensor<T> gin(g.dims());
  const T* go = g.data();
  T* gi = gin.data();
  for (std::size_t quarter = 0; quarter < 4; ++quarter) {
    for_each_quarter_pair(g.dims(), quarter, spec.groups[quarter],
                          [&](std::size_t dst, std::size_t src, std::size_t n) {
                            for (std::size_t j = 0; j < n; ++j) gi[src + j] += go[dst + j];
                          });
  }
  return gin;
}

template <class T>
BasicTensor<T> transpose_spatial(const BasicTensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("transpose_spatial expects rank 4, got " + to_string(x.dims()));
  const auto& d = x.dims();
  BasicTensor<T> y({d[0], d[2], d[1], d[3]});
  for (std::size_t b = 0; b < d[0]; ++b)
    for (std::size_t w = 0; w < d[1]; ++w)
      for (std::size_t h = 0; h < d[2]; ++h)
        for (std::size_t c = 0; c < d[3]; ++c) y.at(b, h, w, c) = x.at(b, w, h, c);
  return y;
}

template BasicTensor<float> spatial_shift(const BasicTensor<float>&, const ShiftSpec&);
template BasicTensor<double> spatial_shift(const BasicTensor<double>&, const ShiftSpec&);
template BasicTensor<float> spatial_shift_adjoint(const BasicTensor<float>&, const ShiftSpec&);
template BasicTensor<double> spatial_shift_adjoint(const BasicTensor<double>&, const ShiftSpec&);
template BasicTensor<float> transpose_spatial(const BasicTensor<float>&);
template BasicTensor<double> transpose_spatial(const BasicTensor<double>&);

}  // namespace s2mlp
