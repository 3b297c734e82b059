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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2mlp/archive.hpp"
#include "s2mlp/model.hpp"

namespace s2mlp {

/// Cross-entropy against (1 - eps) one-hot + eps uniform. Throws
/// ContractError for an out-of-range target or eps outside [0, 1).
template <class T>
double label_smoothed_ce(std::span<const T> logits, std::size_t target, double eps);

/// AdamW moments and hyperparameters. Moments are created on first use
/// with the dims of their parameter.
template <class T>
struct AdamWState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-2;
  std::uint64_t step = 0;
  BasicArchive<T> m;
  BasicArchive<T> v;
};

using OptimizerState = AdamWState<float>;

/// w <- w (1 - lr wd), then the bias-corrected Adam update. Every parameter
/// needs a gradient of identical dims. A non-finite gradient raises
/// NumericError and leaves params and state untouched.
template <class T>
void adamw_step(BasicArchive<T>& params, const BasicArchive<T>& grads, AdamWState<T>& state,
                double lr);

/// Linear warmup from 0 to base_lr, then cosine decay to final_lr at
/// total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
                 double base_lr, double final_lr);

struct ToySpec {
  std::size_t size = 64;
  std::size_t classes = 10;
  std::size_t image_side = 8;
  std::size_t channels = 3;
  std::uint64_t seed = 0;
  // Control fixture: every image is the same constant map.
  bool constant_images = false;
};

/// Synthetic images whose label is the quadrant holding a bright 2x2 patch
/// (label % 4) and the channel it is drawn in (label / 4). Telling
/// quadrants apart needs positional information.
struct ToyDataset {
  std::vector<Tensor> images;  // each (1, side, side, channels)
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  /// Stacks the given samples into one (B, side, side, channels) tensor.
  Tensor batch(std::span<const std::size_t> indices) const;
};

ToyDataset make_toy_dataset(const ToySpec& spec);

struct TrainSettings {
  std::size_t steps = 2000;
  std::size_t batch_size = 64;
  double base_lr = 2e-3;
  double final_lr = 1e-5;
  std::size_t warmup_epochs = 10;
  double weight_decay = 5e-2;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;
};

struct LossRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  WeightArchive weights;
  std::vector<LossRecord> history;
};

/// Raised when the training loss stops being finite.
class TrainingDiverged : public NumericError {
 public:
  explicit TrainingDiverged(std::size_t step)
      : NumericError("training diverged: non-finite loss at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Minibatch AdamW on label-smoothed cross-entropy with the warmup-cosine
/// schedule. Starts from `initial` when given, else init_weights(cfg, seed).
TrainResult train_loop(const ModelConfig& cfg, const ToyDataset& data,
                       const TrainSettings& settings, const WeightArchive* initial = nullptr);

/// Fraction of samples whose eval-mode argmax equals the label.
double accuracy(const ModelConfig& cfg, const WeightArchive& weights, const ToyDataset& data);

/// `step<TAB>lr<TAB>loss` lines.
std::string format_history(std::span<const LossRecord> history);

}  // namespace s2mlp
