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

#include "s2mlp/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace s2mlp {

template <class T>
double label_smoothed_ce(std::span<const T> logits, std::size_t target, double eps) {
  const std::size_t c = logits.size();
  if (c == 0) throw ContractError("label_smoothed_ce: empty logits");
  if (target >= c) {
    throw ContractError("label_smoothed_ce: target " + std::to_string(target) +
                        " out of range for " + std::to_string(c) + " classes");
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw ContractError("label smoothing must lie in [0, 1)");
  const BasicTensor<T> logp =
      log_softmax(BasicTensor<T>({c}, std::vector<T>(logits.begin(), logits.end())));
  double sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) sum += logp[j];
  return -(1.0 - eps) * logp[target] - eps / static_cast<double>(c) * sum;
}

template double label_smoothed_ce(std::span<const float>, std::size_t, double);
template double label_smoothed_ce(std::span<const double>, std::size_t, double);

template <class T>
void adamw_step(BasicArchive<T>& params, const BasicArchive<T>& grads, AdamWState<T>& state,
                double lr) {
  for (const auto& p : params) {
    const BasicTensor<T>& g = grads.at(p.name);
    if (g.dims() != p.tensor.dims()) {
      throw ShapeError("gradient for '" + p.name + "' has dims " + to_string(g.dims()) +
                       ", parameter has " + to_string(p.tensor.dims()));
    }
    for (T v : g.values()) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite gradient for '" + p.name + "'; step refused");
      }
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double decay = 1.0 - lr * state.weight_decay;
  for (auto& p : params) {
    if (!state.m.contains(p.name)) {
      state.m.add(p.name, BasicTensor<T>(p.tensor.dims()));
      state.v.add(p.name, BasicTensor<T>(p.tensor.dims()));
    }
    BasicTensor<T>& m = state.m.at(p.name);
    BasicTensor<T>& v = state.v.at(p.name);
    const BasicTensor<T>& g = grads.at(p.name);
    BasicTensor<T>& w = p.tensor;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<T>(state.beta1 * m[i] + (1.0 - state.beta1) * g[i]);
      v[i] = static_cast<T>(state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i]);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] = static_cast<T>(w[i] * decay - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template void adamw_step(BasicArchive<float>&, const BasicArchive<float>&, AdamWState<float>&,
                         double);
template void adamw_step(BasicArchive<double>&, const BasicArchive<double>&,
                         AdamWState<double>&, double);

double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                 double base_lr, double final_lr) {
  if (step > total_steps) throw ContractError("cosine_lr: step beyond total_steps");
  if (warmup_steps >= total_steps) throw ContractError("cosine_lr: warmup must be shorter than the schedule");
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return final_lr + (base_lr - final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Tensor ToyDataset::batch(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ContractError("empty batch");
  const Shape& d = images.at(0).dims();
  Tensor out({indices.size(), d[1], d[2], d[3]});
  const std::size_t per = images[0].size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& img = images.at(indices[i]);
    std::copy(img.values().begin(), img.values().end(), out.data() + i * per);
  }
  return out;
}

ToyDataset make_toy_dataset(const ToySpec& spec) {
  if (spec.classes < 2) throw ContractError("toy dataset needs at least 2 classes");
  if (spec.classes > 4 * spec.channels) {
    throw ContractError("toy dataset supports at most 4 * channels = " +
                        std::to_string(4 * spec.channels) + " classes");
  }
  if (spec.image_side < 4 || spec.image_side % 2 != 0) {
    throw ContractError("toy image side must be an even number >= 4");
  }
  std::mt19937_64 rng(spec.seed);
  ToyDataset ds;
  ds.num_classes = spec.classes;
  ds.seed = spec.seed;
  ds.labels.resize(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) ds.labels[i] = i % spec.classes;
  std::shuffle(ds.labels.begin(), ds.labels.end(), rng);

  const std::size_t side = spec.image_side, half = side / 2;
  std::uniform_real_distribution<float> noise(0.0f, 0.1f);
  std::uniform_int_distribution<std::size_t> offset(0, half - 2);
  for (std::size_t label : ds.labels) {
    Tensor img({1, side, side, spec.channels});
    if (spec.constant_images) {
      for (auto& v : img.values()) v = 0.5f;
    } else {
      for (auto& v : img.values()) v = noise(rng);
      const std::size_t quadrant = label % 4, channel = label / 4;
      const std::size_t w0 = (quadrant % 2) * half + offset(rng);
      const std::size_t h0 = (quadrant / 2) * half + offset(rng);
      for (std::size_t dw = 0; dw < 2; ++dw)
        for (std::size_t dh = 0; dh < 2; ++dh) img.at(0, w0 + dw, h0 + dh, channel) = 1.0f;
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

namespace {

WeightArchive gradient_archive(const WeightArchive& weights, const ParamSource<float>& params,
                               const ad::Gradients<float>& grads) {
  WeightArchive out;
  for (const auto& e : weights) {
    Tensor g(e.tensor.dims());
    for (const auto& [name, var] : params.bound()) {
      if (name == e.name && grads.has(var.id)) g = grads.of(var);
    }
    out.add(e.name, std::move(g));
  }
  return out;
}

}  // namespace

TrainResult train_loop(const ModelConfig& cfg, const ToyDataset& data,
                       const TrainSettings& settings, const WeightArchive* initial) {
  cfg.validate();
  if (data.size() == 0) throw ContractError("training set is empty");
  if (data.num_classes > cfg.num_classes) {
    throw ContractError("dataset has more classes than the model head");
  }
  if (settings.steps == 0) throw ContractError("training needs at least one step");
  const std::size_t batch = std::min(settings.batch_size, data.size());
  const std::size_t steps_per_epoch = (data.size() + batch - 1) / batch;
  const std::size_t warmup =
      std::min(settings.warmup_epochs * steps_per_epoch, settings.steps - 1);

  TrainResult result;
  result.weights = initial ? *initial : init_weights(cfg, settings.seed);
  OptimizerState opt;
  opt.weight_decay = settings.weight_decay;

  std::mt19937_64 rng(settings.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = data.size();

  for (std::size_t step = 0; step < settings.steps; ++step) {
    std::vector<std::size_t> idx;
    while (idx.size() < batch) {
      if (cursor == data.size()) {
        if (batch < data.size()) std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    std::vector<std::size_t> targets;
    for (std::size_t i : idx) targets.push_back(data.labels[i]);

    ad::Tape<float> tape;
    ParamSource<float> params(tape, result.weights);
    const ad::Var<float> image = tape.leaf(data.batch(idx), "image");
    ForwardOptions fwd{true, settings.seed + 0x100000ULL * (step + 1)};
    const ad::Var<float> logits = graph::model_forward(params, image, cfg, fwd);
    const ad::Var<float> loss =
        ad::smoothed_cross_entropy(tape, logits, targets, settings.label_smoothing);
    const double loss_value = loss.value()[0];
    const double lr = cosine_lr(step, settings.steps, warmup, settings.base_lr, settings.final_lr);
    result.history.push_back({step, lr, loss_value});
    if (!std::isfinite(loss_value)) throw TrainingDiverged(step);

    const ad::Gradients<float> grads = tape.backward(loss);
    adamw_step(result.weights, gradient_archive(result.weights, params, grads), opt, lr);
  }
  return result;
}

double accuracy(const ModelConfig& cfg, const WeightArchive& weights, const ToyDataset& data) {
  if (data.size() == 0) return 0.0;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  const Tensor logits = model_forward(data.batch(idx), weights, cfg);
  const std::size_t c = logits.channels();
  std::size_t correct = 0;
  for (std::size_t b = 0; b < data.size(); ++b) {
    const float* row = logits.data() + b * c;
    const auto pred = static_cast<std::size_t>(std::max_element(row, row + c) - row);
    if (pred == data.labels[b]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::string format_history(std::span<const LossRecord> history) {
  std::ostringstream os;
  os.precision(9);
  for (const auto& r : history) os << r.step << '\t' << r.lr << '\t' << r.loss << '\n';
  return os.str();
}

}  // namespace s2mlp
