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

#include "s2mlp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace s2mlp {

std::string to_string(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& dims) {
  if (dims.empty() || dims.size() > kMaxRank) {
    throw ShapeError("tensor rank must be 1.." + std::to_string(kMaxRank) + ", got " +
                     std::to_string(dims.size()));
  }
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("tensor extents must be >= 1, got " + to_string(dims));
    n *= d;
  }
  return n;
}

template <class T>
BasicTensor<T>::BasicTensor(Shape dims, std::vector<T> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  const std::size_t n = shape_numel(dims_);
  if (n != data_.size()) {
    throw ShapeError("tensor " + to_string(dims_) + " needs " + std::to_string(n) +
                     " values, got " + std::to_string(data_.size()));
  }
}

template <class T>
BasicTensor<T> BasicTensor<T>::full(Shape dims, T value) {
  const std::size_t n = shape_numel(dims);
  return BasicTensor(std::move(dims), std::vector<T>(n, value));
}

template <class T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape dims) const& {
  return BasicTensor(std::move(dims), data_);
}

template <class T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape dims) && {
  return BasicTensor(std::move(dims), std::move(data_));
}

template <class T>
BasicTensor<T> affine(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias) {
  if (weight.rank() != 2) {
    throw ShapeError("affine weight must be rank 2, got " + to_string(weight.dims()));
  }
  const std::size_t in = weight.extent(0);
  const std::size_t out = weight.extent(1);
  if (x.channels() != in) {
    throw ShapeError("affine: input has " + std::to_string(x.channels()) +
                     " channels but weight expects " + std::to_string(in));
  }
  if (bias.size() != out) {
    throw ShapeError("affine: bias has " + std::to_string(bias.size()) +
                     " entries but weight produces " + std::to_string(out));
  }
  Shape dims = x.dims();
  dims.back() = out;
  BasicTensor<T> y(dims);

  const std::size_t rows = x.rows();
  const T* xp = x.data();
  const T* wp = weight.data();
  const T* bp = bias.data();
  T* yp = y.data();

  // Tiles of rows share each weight row while it is hot in cache.
  constexpr std::size_t kTile = 8;
  for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
    const std::size_t r1 = std::min(rows, r0 + kTile);
    for (std::size_t r = r0; r < r1; ++r) std::copy(bp, bp + out, yp + r * out);
    for (std::size_t i = 0; i < in; ++i) {
      const T* wrow = wp + i * out;
      for (std::size_t r = r0; r < r1; ++r) {
        const T xi = xp[r * in + i];
        T* yrow = yp + r * out;
        for (std::size_t j = 0; j < out; ++j) yrow[j] += xi * wrow[j];
      }
    }
  }
  return y;
}

template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, double eps) {
  const std::size_t c = x.channels();
  if (gamma.size() != c || beta.size() != c) {
    throw ShapeError("layer_norm: input has " + std::to_string(c) + " channels, gamma/beta have " +
                     std::to_string(gamma.size()) + "/" + std::to_string(beta.size()));
  }
  if (!(eps > 0.0)) throw ContractError("layer_norm: eps must be positive");
  BasicTensor<T> y(x.dims());
  const std::size_t rows = x.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * c;
    T* yr = y.data() + r * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += xr[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double rstd = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      yr[j] = static_cast<T>((xr[j] - mean) * rstd * gamma[j] + beta[j]);
    }
  }
  return y;
}

template <class T>
T gelu_scalar(T x) {
  // erfc keeps the far negative tail accurate where 1 + erf(x) cancels to 0.
  return static_cast<T>(0.5) * x * std::erfc(-x / std::numbers::sqrt2_v<T>);
}

template <class T>
T gelu_derivative(T x) {
  const T cdf = static_cast<T>(0.5) * std::erfc(-x / std::numbers::sqrt2_v<T>);
  const T pdf = std::exp(static_cast<T>(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> /
                std::numbers::sqrt2_v<T>;
  return cdf + x * pdf;
}

template <class T>
BasicTensor<T> gelu(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = gelu_scalar(x[i]);
  return y;
}

template <class T>
BasicTensor<T> softmax_over_branches(const BasicTensor<T>& logits, std::size_t branches) {
  if (branches == 0) throw ContractError("softmax_over_branches: need at least one branch");
  const std::size_t kc = logits.channels();
  if (kc % branches != 0) {
    throw ShapeError("softmax_over_branches: last extent " + std::to_string(kc) +
                     " is not a multiple of " + std::to_string(branches) + " branches");
  }
  const std::size_t c = kc / branches;
  BasicTensor<T> y(logits.dims());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const T* a = logits.data() + r * kc;
    T* out = y.data() + r * kc;
    for (std::size_t j = 0; j < c; ++j) {
      T m = a[j];
      for (std::size_t k = 1; k < branches; ++k) m = std::max(m, a[k * c + j]);
      T z = 0;
      for (std::size_t k = 0; k < branches; ++k) {
        out[k * c + j] = std::exp(a[k * c + j] - m);
        z += out[k * c + j];
      }
      for (std::size_t k = 0; k < branches; ++k) out[k * c + j] /= z;
    }
  }
  return y;
}

template <class T>
BasicTensor<T> softmax_over_branches(const BasicTensor<T>& a) {
  if (a.rank() != 2) {
    throw ShapeError("softmax_over_branches expects a K x c matrix, got " + to_string(a.dims()));
  }
  const std::size_t k = a.extent(0);
  return softmax_over_branches(a.reshaped({1, a.size()}), k).reshaped(a.dims());
}

template <class T>
BasicTensor<T> mean_over_tokens(const BasicTensor<T>& x) {
  if (x.rank() != 4) {
    throw ShapeError("mean_over_tokens expects (B, W, H, C), got " + to_string(x.dims()));
  }
  const std::size_t b = x.extent(0);
  const std::size_t n = x.extent(1) * x.extent(2);
  const std::size_t c = x.extent(3);
  BasicTensor<T> y({b, c});
  for (std::size_t bi = 0; bi < b; ++bi) {
    T* out = y.data() + bi * c;
    const T* base = x.data() + bi * n * c;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < c; ++j) out[j] += base[t * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<T>(n);
  }
  return y;
}

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("add: " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
  BasicTensor<T> y = a;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

template <class T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t end) {
  const std::size_t c = x.channels();
  if (begin >= end || end > c) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + std::to_string(c) + " channels");
  }
  Shape dims = x.dims();
  dims.back() = end - begin;
  BasicTensor<T> y(dims);
  const std::size_t w = end - begin;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* src = x.data() + r * c + begin;
    std::copy(src, src + w, y.data() + r * w);
  }
  return y;
}

namespace {

void check_patchable(const Shape& dims, std::size_t patch) {
  if (dims.size() != 4) throw ShapeError("patchify expects (B, W, H, C), got " + to_string(dims));
  if (patch == 0) throw ConfigError("patch size must be >= 1");
  if (dims[1] % patch != 0 || dims[2] % patch != 0) {
    throw ShapeError("image extents " + std::to_string(dims[1]) + "x" + std::to_string(dims[2]) +
                     " are not divisible by patch size " + std::to_string(patch));
  }
}

}  // namespace

template <class T>
BasicTensor<T> patchify(const BasicTensor<T>& x, std::size_t patch) {
  check_patchable(x.dims(), patch);
  const auto& d = x.dims();
  const std::size_t ow = d[1] / patch, oh = d[2] / patch, c = d[3];
  BasicTensor<T> y({d[0], ow, oh, patch * patch * c});
  T* out = y.data();
  for (std::size_t b = 0; b < d[0]; ++b)
    for (std::size_t pw = 0; pw < ow; ++pw)
      for (std::size_t ph = 0; ph < oh; ++ph)
        for (std::size_t dw = 0; dw < patch; ++dw)
          for (std::size_t dh = 0; dh < patch; ++dh) {
            const T* src = &x.at(b, pw * patch + dw, ph * patch + dh, 0);
            out = std::copy(src, src + c, out);
          }
  return y;
}

template <class T>
BasicTensor<T> unpatchify(const BasicTensor<T>& tokens, std::size_t patch, const Shape& image_dims) {
  check_patchable(image_dims, patch);
  const Shape expect{image_dims[0], image_dims[1] / patch, image_dims[2] / patch,
                     patch * patch * image_dims[3]};
  if (tokens.dims() != expect) {
    throw ShapeError("unpatchify: expected tokens " + to_string(expect) + ", got " +
                     to_string(tokens.dims()));
  }
  BasicTensor<T> x(image_dims);
  const std::size_t c = image_dims[3];
  const T* in = tokens.data();
  for (std::size_t b = 0; b < expect[0]; ++b)
    for (std::size_t pw = 0; pw < expect[1]; ++pw)
      for (std::size_t ph = 0; ph < expect[2]; ++ph)
        for (std::size_t dw = 0; dw < patch; ++dw)
          for (std::size_t dh = 0; dh < patch; ++dh) {
            std::copy(in, in + c, &x.at(b, pw * patch + dw, ph * patch + dh, 0));
            in += c;
          }
  return x;
}

template <class T>
BasicTensor<T> log_softmax(const BasicTensor<T>& x) {
  const std::size_t c = x.channels();
  BasicTensor<T> y(x.dims());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* in = x.data() + r * c;
    T* out = y.data() + r * c;
    const T m = *std::max_element(in, in + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(in[j] - m));
    const double lz = std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[j] = static_cast<T>(in[j] - m - lz);
  }
  return y;
}

template <class T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("max_abs_diff: " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

template <class T>
BasicTensor<T> crop_spatial(const BasicTensor<T>& x, std::size_t width, std::size_t height) {
  const Shape& d = x.dims();
  if (d.size() != 4) throw ShapeError("crop_spatial expects (B, W, H, C), got " + to_string(d));
  if (width == 0 || height == 0 || width > d[1] || height > d[2]) {
    throw ShapeError("cannot crop " + to_string(d) + " to " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
  BasicTensor<T> out({d[0], width, height, d[3]});
  for (std::size_t b = 0; b < d[0]; ++b)
    for (std::size_t w = 0; w < width; ++w)
      for (std::size_t h = 0; h < height; ++h)
        for (std::size_t c = 0; c < d[3]; ++c) out.at(b, w, h, c) = x.at(b, w, h, c);
  return out;
}

#define S2MLP_INSTANTIATE(T)                                                                  \
  template class BasicTensor<T>;                                                              \
  template BasicTensor<T> affine(const BasicTensor<T>&, const BasicTensor<T>&,                \
                                 const BasicTensor<T>&);                                      \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                     const BasicTensor<T>&, double);                          \
  template BasicTensor<T> gelu(const BasicTensor<T>&);                                        \
  template T gelu_scalar(T);                                                                  \
  template T gelu_derivative(T);                                                              \
  template BasicTensor<T> softmax_over_branches(const BasicTensor<T>&);                       \
  template BasicTensor<T> softmax_over_branches(const BasicTensor<T>&, std::size_t);          \
  template BasicTensor<T> mean_over_tokens(const BasicTensor<T>&);                            \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template double max_abs_diff(const BasicTensor<T>&, const BasicTensor<T>&);               \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::size_t, std::size_t);    \
  template BasicTensor<T> patchify(const BasicTensor<T>&, std::size_t);                       \
  template BasicTensor<T> unpatchify(const BasicTensor<T>&, std::size_t, const Shape&);       \
  template BasicTensor<T> crop_spatial(const BasicTensor<T>&, std::size_t, std::size_t);      \
  template BasicTensor<T> log_softmax(const BasicTensor<T>&);

S2MLP_INSTANTIATE(float)
S2MLP_INSTANTIATE(double)

#undef S2MLP_INSTANTIATE

}  // namespace s2mlp
