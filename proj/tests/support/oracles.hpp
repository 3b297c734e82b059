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

// Reference implementations written independently of the library kernels.
// They favour explicit index arithmetic over speed.

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "s2mlp/tensor.hpp"

namespace s2mlp::oracle {

// Per-element shift. `first` selects the +W,-W,+H,-H ordering of quarters,
// otherwise +H,-H,+W,-W. Each output element names its source element.
template <class T>
BasicTensor<T> shift(const BasicTensor<T>& x, bool first) {
  const std::size_t nb = x.extent(0), nw = x.extent(1), nh = x.extent(2), nc = x.extent(3);
  const std::size_t q = nc / 4;
  BasicTensor<T> out(x.dims());
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t w = 0; w < nw; ++w)
      for (std::size_t h = 0; h < nh; ++h)
        for (std::size_t c = 0; c < nc; ++c) {
          std::size_t quarter = c / q;
          if (!first) quarter = quarter ^ 2;  // swap the width and height pairs
          std::size_t sw = w, sh = h;
          switch (quarter) {
            case 0: if (w >= 1) sw = w - 1; break;
            case 1: if (w + 1 < nw) sw = w + 1; break;
            case 2: if (h >= 1) sh = h - 1; break;
            case 3: if (h + 1 < nh) sh = h + 1; break;
          }
          out[((b * nw + w) * nh + h) * nc + c] = x[((b * nw + sw) * nh + sh) * nc + c];
        }
  return out;
}

template <class T>
T dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Small integers so products and sums stay exact in float.
inline Tensor random_integer_map(Shape dims, std::mt19937_64& rng, int lo = -50, int hi = 50) {
  std::uniform_int_distribution<int> dist(lo, hi);
  Tensor t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<float>(dist(rng));
  return t;
}

template <class T>
BasicTensor<T> random_normal(Shape dims, std::mt19937_64& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  BasicTensor<T> t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

// Scalar Adam with bias correction, decay applied before the moment update.
struct ScalarAdam {
  double b1 = 0.9, b2 = 0.999, eps = 1e-8, decay = 0.0;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double w, double g, double lr) {
    w *= 1.0 - lr * decay;
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace s2mlp::oracle
