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

#include <random>

#include <benchmark/benchmark.h>

#include "s2mlp/autograd.hpp"
#include "s2mlp/model.hpp"
#include "s2mlp/shift.hpp"
#include "s2mlp/training.hpp"

namespace {

using namespace s2mlp;

Tensor random_map(Shape dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Tensor t(std::move(dims));
  for (auto& v : t.values()) v = normal(rng);
  return t;
}

// Stage-one feature map of Small/7 at 224x224: 32x32 tokens, 192 channels.
void BM_SpatialShift(benchmark::State& state) {
  const Tensor x = random_map({1, 32, 32, 192}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(spatial_shift1(x));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * x.size() * sizeof(float)));
}
BENCHMARK(BM_SpatialShift);

void BM_Affine(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_map({1, 32, 32, c}, 2);
  const Tensor w = random_map({c, 3 * c}, 3);
  const Tensor b({3 * c});
  for (auto _ : state) benchmark::DoNotOptimize(affine(x, w, b));
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(state.iterations() * 1024 * c * 3 * c),
                                               benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Affine)->Arg(64)->Arg(192);

void BM_BlockForward(benchmark::State& state) {
  auto cfg = build_config("Small/7");
  const auto weights = init_weights(cfg, 4);
  const auto p = BlockParams<float>::from_archive(weights, "stage0/block0", cfg);
  const Tensor x = random_map({1, 32, 32, 192}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(block_forward(x, p, cfg));
}
BENCHMARK(BM_BlockForward)->Unit(benchmark::kMillisecond);

void BM_TinyTrainStep(benchmark::State& state) {
  const auto cfg = build_config("Tiny");
  ToySpec spec;
  const auto data = make_toy_dataset(spec);
  TrainSettings settings;
  settings.steps = 1;
  const auto initial = init_weights(cfg, 0);
  for (auto _ : state) benchmark::DoNotOptimize(train_loop(cfg, data, settings, &initial));
}
BENCHMARK(BM_TinyTrainStep)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
