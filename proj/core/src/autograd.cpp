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

#include "s2mlp/autograd.hpp"

#include <cmath>
#include <utility>

#include "s2mlp/attention.hpp"

namespace s2mlp::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Affine: return "affine";
    case Op::LayerNorm: return "layer_norm";
    case Op::Gelu: return "gelu";
    case Op::Add: return "add";
    case Op::Shift: return "spatial_shift";
    case Op::SliceChannels: return "slice_channels";
    case Op::Patchify: return "patchify";
    case Op::BranchTokenSum: return "branch_token_sum";
    case Op::BranchSoftmax: return "branch_softmax";
    case Op::BranchCombine: return "combine_branches";
    case Op::BranchMean: return "branch_mean";
    case Op::DropPath: return "drop_path";
    case Op::MeanTokens: return "mean_over_tokens";
    case Op::Sum: return "sum";
    case Op::WeightedSum: return "weighted_sum";
    case Op::SmoothedCrossEntropy: return "smoothed_cross_entropy";
    case Op::Custom: return "custom";
  }
  return "unknown";
}

template <class T>
const BasicTensor<T>& Gradients<T>::operator[](NodeId id) const {
  if (!has(id)) {
    throw ContractError("no gradient for node " + std::to_string(id) +
                        " (not reachable from the loss)");
  }
  return *grads_[id];
}

template <class T>
Var<T> Tape<T>::leaf(BasicTensor<T> value, std::string label) {
  auto data = std::make_shared<const BasicTensor<T>>(std::move(value));
  if (!recording()) return {kNoNode, std::move(data)};
  Node<T> n;
  n.op = Op::Leaf;
  n.dims = data->dims();
  n.label = std::move(label);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, std::move(data)};
}

template <class T>
Var<T> Tape<T>::record(Op op, std::span<const Var<T>> inputs, BasicTensor<T> value,
                       std::vector<std::shared_ptr<const BasicTensor<T>>> saved,
                       std::vector<std::size_t> ints, double real) {
  auto data = std::make_shared<const BasicTensor<T>>(std::move(value));
  if (!recording()) return {kNoNode, std::move(data)};
  Node<T> n;
  n.op = op;
  n.dims = data->dims();
  for (const auto& in : inputs) {
    if (in.id >= nodes_.size()) {
      throw ContractError(std::string(op_name(op)) + ": input was not recorded on this tape");
    }
    n.inputs.push_back(in.id);
    n.input_dims.push_back(in.dims());
  }
  n.saved = std::move(saved);
  n.ints = std::move(ints);
  n.real = real;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1, std::move(data)};
}

template <class T>
Var<T> Tape<T>::custom(std::string label, std::span<const Var<T>> inputs, BasicTensor<T> value,
                       CustomBackward<T> backward) {
  std::vector<std::shared_ptr<const BasicTensor<T>>> saved;
  for (const auto& in : inputs) saved.push_back(in.data);
  Var<T> v = record(Op::Custom, inputs, std::move(value), std::move(saved));
  if (recording()) {
    nodes_.back().label = std::move(label);
    nodes_.back().custom = std::move(backward);
  }
  return v;
}

namespace {

template <class T>
ShiftSpec decode_shift(const std::vector<std::size_t>& ints) {
  ShiftSpec s{};
  for (std::size_t q = 0; q < 4; ++q) {
    s.groups[q].axis = ints[2 * q] == 0 ? Axis::Width : Axis::Height;
    s.groups[q].direction = ints[2 * q + 1] == 1 ? +1 : -1;
  }
  return s;
}

std::vector<std::size_t> encode_shift(const ShiftSpec& s) {
  std::vector<std::size_t> ints;
  for (const auto& g : s.groups) {
    ints.push_back(g.axis == Axis::Width ? 0 : 1);
    ints.push_back(g.direction > 0 ? 1 : 0);
  }
  return ints;
}

template <class T>
std::vector<BasicTensor<T>> affine_backward(const Node<T>& n, const BasicTensor<T>& g) {
  const BasicTensor<T>& x = *n.saved[0];
  const BasicTensor<T>& w = *n.saved[1];
  const std::size_t in = w.extent(0), out = w.extent(1), rows = x.rows();
  BasicTensor<T> dx(x.dims()), dw(w.dims()), db(n.input_dims[2]);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* gr = g.data() + r * out;
    const T* xr = x.data() + r * in;
    T* dxr = dx.data() + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const T* wi = w.data() + i * out;
      T* dwi = dw.data() + i * out;
      T acc = 0;
      const T xi = xr[i];
      for (std::size_t j = 0; j < out; ++j) {
        acc += gr[j] * wi[j];
        dwi[j] += xi * gr[j];
      }
      dxr[i] = acc;
    }
    for (std::size_t j = 0; j < out; ++j) db[j] += gr[j];
  }
  std::vector<BasicTensor<T>> res;
  res.push_back(std::move(dx));
  res.push_back(std::move(dw));
  res.push_back(std::move(db));
  return res;
}

template <class T>
std::vector<BasicTensor<T>> layer_norm_backward(const Node<T>& n, const BasicTensor<T>& g) {
  const BasicTensor<T>& x = *n.saved[0];
  const BasicTensor<T>& gamma = *n.saved[1];
  const std::size_t c = x.channels();
  BasicTensor<T> dx(x.dims()), dgamma(gamma.dims()), dbeta(n.input_dims[2]);
  std::vector<double> xhat(c), gg(c);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* xr = x.data() + r * c;
    const T* gr = g.data() + r * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += xr[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(c);
    const double rstd = 1.0 / std::sqrt(var + n.real);
    double mean_gg = 0.0, mean_ggx = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      xhat[j] = (xr[j] - mean) * rstd;
      gg[j] = static_cast<double>(gr[j]) * gamma[j];
      mean_gg += gg[j];
      mean_ggx += gg[j] * xhat[j];
      dgamma[j] += static_cast<T>(gr[j] * xhat[j]);
      dbeta[j] += gr[j];
    }
    mean_gg /= static_cast<double>(c);
    mean_ggx /= static_cast<double>(c);
    T* dxr = dx.data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      dxr[j] = static_cast<T>(rstd * (gg[j] - mean_gg - xhat[j] * mean_ggx));
    }
  }
  std::vector<BasicTensor<T>> res;
  res.push_back(std::move(dx));
  res.push_back(std::move(dgamma));
  res.push_back(std::move(dbeta));
  return res;
}

template <class T>
BasicTensor<T> broadcast_tokens(const BasicTensor<T>& g, const Shape& dims, T scale) {
  // g is (B, C); result is (B, W, H, C) with each token receiving g * scale.
  BasicTensor<T> out(dims);
  const std::size_t tokens = dims[1] * dims[2], c = dims[3];
  for (std::size_t b = 0; b < dims[0]; ++b)
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t j = 0; j < c; ++j) out[(b * tokens + t) * c + j] = g[b * c + j] * scale;
  return out;
}

template <class T>
std::vector<BasicTensor<T>> branch_combine_backward(const Node<T>& n, const BasicTensor<T>& g) {
  const std::size_t k = n.saved.size() - 1;
  const BasicTensor<T>& weights = *n.saved[k];
  const Shape& d = n.dims;
  const std::size_t batch = d[0], tokens = d[1] * d[2], c = d[3];
  std::vector<BasicTensor<T>> res;
  BasicTensor<T> dweights(weights.dims());
  for (std::size_t kk = 0; kk < k; ++kk) {
    const BasicTensor<T>& x = *n.saved[kk];
    BasicTensor<T> dx(d);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* wk = weights.data() + b * k * c + kk * c;
      T* dwk = dweights.data() + b * k * c + kk * c;
      for (std::size_t t = 0; t < tokens; ++t) {
        const std::size_t off = (b * tokens + t) * c;
        for (std::size_t j = 0; j < c; ++j) {
          dx[off + j] = g[off + j] * wk[j];
          dwk[j] += g[off + j] * x[off + j];
        }
      }
    }
    res.push_back(std::move(dx));
  }
  res.push_back(std::move(dweights));
  return res;
}

template <class T>
std::vector<BasicTensor<T>> backward_rule(const Node<T>& n, const BasicTensor<T>& g) {
  std::vector<BasicTensor<T>> res;
  switch (n.op) {
    case Op::Affine:
      return affine_backward(n, g);
    case Op::LayerNorm:
      return layer_norm_backward(n, g);
    case Op::Gelu: {
      const BasicTensor<T>& x = *n.saved[0];
      BasicTensor<T> dx(x.dims());
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = g[i] * gelu_derivative(x[i]);
      res.push_back(std::move(dx));
      return res;
    }
    case Op::Add:
      res.push_back(g);
      res.push_back(g);
      return res;
    case Op::Shift:
      res.push_back(spatial_shift_adjoint(g, decode_shift<T>(n.ints)));
      return res;
    case Op::SliceChannels: {
      const Shape& in_dims = n.input_dims[0];
      const std::size_t begin = n.ints[0], width = n.dims.back(), c = in_dims.back();
      BasicTensor<T> dx(in_dims);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < width; ++j) dx[r * c + begin + j] = g[r * width + j];
      res.push_back(std::move(dx));
      return res;
    }
    case Op::Patchify:
      res.push_back(unpatchify(g, n.ints[0], n.input_dims[0]));
      return res;
    case Op::BranchTokenSum:
      for (const Shape& d : n.input_dims) res.push_back(broadcast_tokens(g, d, T{1}));
      return res;
    case Op::BranchSoftmax: {
      const BasicTensor<T>& y = *n.saved[0];
      const std::size_t k = n.ints[0], kc = y.channels(), c = kc / k;
      BasicTensor<T> dx(y.dims());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const T* yr = y.data() + r * kc;
        const T* gr = g.data() + r * kc;
        T* dr = dx.data() + r * kc;
        for (std::size_t j = 0; j < c; ++j) {
          T dot = 0;
          for (std::size_t kk = 0; kk < k; ++kk) dot += gr[kk * c + j] * yr[kk * c + j];
          for (std::size_t kk = 0; kk < k; ++kk)
            dr[kk * c + j] = yr[kk * c + j] * (gr[kk * c + j] - dot);
        }
      }
      res.push_back(std::move(dx));
      return res;
    }
    case Op::BranchCombine:
      return branch_combine_backward(n, g);
    case Op::BranchMean: {
      BasicTensor<T> dx = g;
      const T inv = T{1} / static_cast<T>(n.inputs.size());
      for (auto& v : dx.values()) v *= inv;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) res.push_back(dx);
      return res;
    }
    case Op::DropPath: {
      const BasicTensor<T>& scale = *n.saved[0];
      BasicTensor<T> dx = g;
      const std::size_t per = dx.size() / scale.size();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= scale[i / per];
      res.push_back(std::move(dx));
      return res;
    }
    case Op::MeanTokens: {
      const Shape& d = n.input_dims[0];
      res.push_back(broadcast_tokens(g, d, T{1} / static_cast<T>(d[1] * d[2])));
      return res;
    }
    case Op::Sum:
      res.push_back(BasicTensor<T>::full(n.input_dims[0], g[0]));
      return res;
    case Op::WeightedSum: {
      BasicTensor<T> dx = *n.saved[0];
      for (auto& v : dx.values()) v *= g[0];
      res.push_back(std::move(dx));
      return res;
    }
    case Op::SmoothedCrossEntropy: {
      // d/dlogits of mean_b sum_c -q_c log p_c is (p - q) / B.
      const BasicTensor<T> logp = log_softmax(*n.saved[0]);
      const std::size_t batch = logp.rows(), classes = logp.channels();
      const double eps = n.real;
      BasicTensor<T> dx(logp.dims());
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < classes; ++j) {
          double q = eps / static_cast<double>(classes);
          if (j == n.ints[b]) q += 1.0 - eps;
          dx[b * classes + j] = static_cast<T>(
              (std::exp(static_cast<double>(logp[b * classes + j])) - q) * g[0] /
              static_cast<double>(batch));
        }
      }
      res.push_back(std::move(dx));
      return res;
    }
    case Op::Custom: {
      if (!n.custom) {
        throw UnsupportedOpError("no backward registered for custom op '" + n.label + "'");
      }
      std::vector<const BasicTensor<T>*> ins;
      for (const auto& s : n.saved) ins.push_back(s.get());
      res = n.custom(g, ins);
      if (res.size() != n.inputs.size()) {
        throw ContractError("custom op '" + n.label + "' returned " + std::to_string(res.size()) +
                            " gradients for " + std::to_string(n.inputs.size()) + " inputs");
      }
      return res;
    }
    case Op::Leaf:
      return res;
  }
  throw UnsupportedOpError("no backward registered for op tag " +
                           std::to_string(static_cast<int>(n.op)));
}

}  // namespace

template <class T>
Gradients<T> Tape<T>::backward(const Var<T>& loss) const {
  if (!recording()) throw ContractError("backward on a tape that does not record");
  if (loss.id >= nodes_.size()) throw ContractError("loss was not recorded on this tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got dims " + to_string(loss.dims()));
  }
  Gradients<T> grads(nodes_.size());
  grads.slot(loss.id) = BasicTensor<T>::full(loss.dims(), T{1});
  for (NodeId id = loss.id + 1; id-- > 0;) {
    auto& slot = grads.slot(id);
    if (!slot) continue;
    const Node<T>& n = nodes_[id];
    if (n.op == Op::Leaf) continue;
    std::vector<BasicTensor<T>> in_grads = backward_rule(n, *slot);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      if (in_grads[k].dims() != n.input_dims[k]) {
        throw ContractError(std::string(op_name(n.op)) + ": gradient dims " +
                            to_string(in_grads[k].dims()) + " do not match input " +
                            to_string(n.input_dims[k]));
      }
      auto& dst = grads.slot(n.inputs[k]);
      if (!dst) {
        dst = std::move(in_grads[k]);
      } else {
        for (std::size_t i = 0; i < dst->size(); ++i) (*dst)[i] += in_grads[k][i];
      }
    }
  }
  return grads;
}

// --- operations -------------------------------------------------------------

template <class T>
Var<T> affine(Tape<T>& t, const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  BasicTensor<T> y = s2mlp::affine(x.value(), weight.value(), bias.value());
  const Var<T> in[] = {x, weight, bias};
  return t.record(Op::Affine, in, std::move(y), {x.data, weight.data});
}

template <class T>
Var<T> layer_norm(Tape<T>& t, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  double eps) {
  BasicTensor<T> y = s2mlp::layer_norm(x.value(), gamma.value(), beta.value(), eps);
  const Var<T> in[] = {x, gamma, beta};
  return t.record(Op::LayerNorm, in, std::move(y), {x.data, gamma.data}, {}, eps);
}

template <class T>
Var<T> gelu(Tape<T>& t, const Var<T>& x) {
  const Var<T> in[] = {x};
  return t.record(Op::Gelu, in, s2mlp::gelu(x.value()), {x.data});
}

template <class T>
Var<T> add(Tape<T>& t, const Var<T>& a, const Var<T>& b) {
  const Var<T> in[] = {a, b};
  return t.record(Op::Add, in, s2mlp::add(a.value(), b.value()));
}

template <class T>
Var<T> spatial_shift(Tape<T>& t, const Var<T>& x, const ShiftSpec& spec) {
  const Var<T> in[] = {x};
  return t.record(Op::Shift, in, s2mlp::spatial_shift(x.value(), spec), {}, encode_shift(spec));
}

template <class T>
Var<T> slice_channels(Tape<T>& t, const Var<T>& x, std::size_t begin, std::size_t end) {
  const Var<T> in[] = {x};
  return t.record(Op::SliceChannels, in, s2mlp::slice_channels(x.value(), begin, end), {},
                  {begin, end});
}

template <class T>
Var<T> patchify(Tape<T>& t, const Var<T>& x, std::size_t patch) {
  const Var<T> in[] = {x};
  return t.record(Op::Patchify, in, s2mlp::patchify(x.value(), patch), {}, {patch});
}

namespace {

template <class T>
std::vector<BasicTensor<T>> values_of(std::span<const Var<T>> vars) {
  std::vector<BasicTensor<T>> v;
  v.reserve(vars.size());
  for (const auto& x : vars) v.push_back(x.value());
  return v;
}

}  // namespace

template <class T>
Var<T> branch_token_sum(Tape<T>& t, std::span<const Var<T>> branches) {
  const auto vals = values_of(branches);
  return t.record(Op::BranchTokenSum, branches,
                  s2mlp::branch_token_sum(std::span<const BasicTensor<T>>(vals)));
}

template <class T>
Var<T> branch_softmax(Tape<T>& t, const Var<T>& logits, std::size_t branches) {
  auto y = std::make_shared<const BasicTensor<T>>(
      s2mlp::softmax_over_branches(logits.value(), branches));
  const Var<T> in[] = {logits};
  BasicTensor<T> out = *y;
  return t.record(Op::BranchSoftmax, in, std::move(out), {y}, {branches});
}

template <class T>
Var<T> combine_branches(Tape<T>& t, std::span<const Var<T>> branches, const Var<T>& weights) {
  const auto vals = values_of(branches);
  BasicTensor<T> y =
      s2mlp::combine_branches(std::span<const BasicTensor<T>>(vals), weights.value());
  std::vector<Var<T>> in(branches.begin(), branches.end());
  in.push_back(weights);
  std::vector<std::shared_ptr<const BasicTensor<T>>> saved;
  for (const auto& v : in) saved.push_back(v.data);
  return t.record(Op::BranchCombine, in, std::move(y), std::move(saved));
}

template <class T>
Var<T> branch_mean(Tape<T>& t, std::span<const Var<T>> branches) {
  const auto vals = values_of(branches);
  return t.record(Op::BranchMean, branches,
                  s2mlp::branch_mean(std::span<const BasicTensor<T>>(vals)));
}

template <class T>
Var<T> drop_path(Tape<T>& t, const Var<T>& x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("drop_path rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const std::size_t batch = x.dims().front();
  auto scale = std::make_shared<BasicTensor<T>>(Shape{batch});
  std::bernoulli_distribution keep(1.0 - rate);
  for (std::size_t b = 0; b < batch; ++b) {
    (*scale)[b] = keep(rng) ? static_cast<T>(1.0 / (1.0 - rate)) : T{0};
  }
  BasicTensor<T> y = x.value();
  const std::size_t per = y.size() / batch;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= (*scale)[i / per];
  const Var<T> in[] = {x};
  return t.record(Op::DropPath, in, std::move(y), {std::move(scale)}, {}, rate);
}

template <class T>
Var<T> mean_over_tokens(Tape<T>& t, const Var<T>& x) {
  const Var<T> in[] = {x};
  return t.record(Op::MeanTokens, in, s2mlp::mean_over_tokens(x.value()));
}

template <class T>
Var<T> sum(Tape<T>& t, const Var<T>& x) {
  T s = 0;
  for (T v : x.value().values()) s += v;
  const Var<T> in[] = {x};
  return t.record(Op::Sum, in, BasicTensor<T>::full({1}, s));
}

template <class T>
Var<T> weighted_sum(Tape<T>& t, const Var<T>& x, const BasicTensor<T>& weights) {
  if (weights.dims() != x.dims()) {
    throw ShapeError("weighted_sum: weights " + to_string(weights.dims()) + " vs input " +
                     to_string(x.dims()));
  }
  T s = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += x.value()[i] * weights[i];
  const Var<T> in[] = {x};
  return t.record(Op::WeightedSum, in, BasicTensor<T>::full({1}, s),
                  {std::make_shared<const BasicTensor<T>>(weights)});
}

template <class T>
Var<T> smoothed_cross_entropy(Tape<T>& t, const Var<T>& logits,
                              std::span<const std::size_t> targets, double eps) {
  if (logits.value().rank() != 2) {
    throw ShapeError("smoothed_cross_entropy expects (B, C) logits, got " +
                     to_string(logits.dims()));
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw ContractError("label smoothing must lie in [0, 1)");
  const std::size_t batch = logits.dims()[0], classes = logits.dims()[1];
  if (targets.size() != batch) {
    throw ContractError("smoothed_cross_entropy: " + std::to_string(targets.size()) +
                        " targets for batch of " + std::to_string(batch));
  }
  const BasicTensor<T> logp = log_softmax(logits.value());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b] >= classes) {
      throw ContractError("target class " + std::to_string(targets[b]) + " out of range [0, " +
                          std::to_string(classes) + ")");
    }
    double row = 0.0;
    for (std::size_t j = 0; j < classes; ++j) row += logp[b * classes + j];
    loss -= (1.0 - eps) * logp[b * classes + targets[b]] + eps / static_cast<double>(classes) * row;
  }
  loss /= static_cast<double>(batch);
  const Var<T> in[] = {logits};
  return t.record(Op::SmoothedCrossEntropy, in, BasicTensor<T>::full({1}, static_cast<T>(loss)),
                  {logits.data}, std::vector<std::size_t>(targets.begin(), targets.end()), eps);
}

template <class T>
Var<T> split_attention(Tape<T>& t, std::span<const Var<T>> branches, const Var<T>& fc1_weight,
                       const Var<T>& fc1_bias, const Var<T>& fc2_weight, const Var<T>& fc2_bias) {
  const Var<T> pooled = branch_token_sum(t, branches);
  const Var<T> hidden = gelu(t, affine(t, pooled, fc1_weight, fc1_bias));
  const Var<T> logits = affine(t, hidden, fc2_weight, fc2_bias);
  const Var<T> weights = branch_softmax(t, logits, branches.size());
  return combine_branches(t, branches, weights);
}

#define S2MLP_INSTANTIATE(T)                                                                   \
  template class Gradients<T>;                                                                 \
  template class Tape<T>;                                                                      \
  template Var<T> affine(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);               \
  template Var<T> layer_norm(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, double);   \
  template Var<T> gelu(Tape<T>&, const Var<T>&);                                               \
  template Var<T> add(Tape<T>&, const Var<T>&, const Var<T>&);                                 \
  template Var<T> spatial_shift(Tape<T>&, const Var<T>&, const ShiftSpec&);                    \
  template Var<T> slice_channels(Tape<T>&, const Var<T>&, std::size_t, std::size_t);           \
  template Var<T> patchify(Tape<T>&, const Var<T>&, std::size_t);                              \
  template Var<T> branch_token_sum(Tape<T>&, std::span<const Var<T>>);                         \
  template Var<T> branch_softmax(Tape<T>&, const Var<T>&, std::size_t);                        \
  template Var<T> combine_branches(Tape<T>&, std::span<const Var<T>>, const Var<T>&);          \
  template Var<T> branch_mean(Tape<T>&, std::span<const Var<T>>);                              \
  template Var<T> drop_path(Tape<T>&, const Var<T>&, double, std::mt19937_64&);                \
  template Var<T> mean_over_tokens(Tape<T>&, const Var<T>&);                                   \
  template Var<T> sum(Tape<T>&, const Var<T>&);                                                \
  template Var<T> weighted_sum(Tape<T>&, const Var<T>&, const BasicTensor<T>&);                \
  template Var<T> smoothed_cross_entropy(Tape<T>&, const Var<T>&, std::span<const std::size_t>, \
                                         double);                                              \
  template Var<T> split_attention(Tape<T>&, std::span<const Var<T>>, const Var<T>&,            \
                                  const Var<T>&, const Var<T>&, const Var<T>&);

S2MLP_INSTANTIATE(float)
S2MLP_INSTANTIATE(double)

#undef S2MLP_INSTANTIATE

}  // namespace s2mlp::ad
