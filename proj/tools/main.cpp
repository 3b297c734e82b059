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

// s2mlp: inspect, run, check and train the backbone from the command line.

#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "s2mlp/analysis.hpp"
#include "s2mlp/archive.hpp"
#include "s2mlp/config_file.hpp"
#include "s2mlp/errors.hpp"
#include "s2mlp/gradcheck_suite.hpp"
#include "s2mlp/model.hpp"
#include "s2mlp/training.hpp"

namespace {

using namespace s2mlp;

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

// Bad user input detected after parsing; reported like a CLI11 usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFlags {
  std::string preset;
  std::string config;
  std::string fusion;
  std::string branches;

  void attach(CLI::App* cmd, std::string default_preset) {
    preset = std::move(default_preset);
    cmd->add_option("--preset", preset, "model preset (" + join_presets() + ")");
    cmd->add_option("--config", config, "model config file; overrides --preset");
    cmd->add_option("--fusion", fusion, "branch fusion: split_attention or sum_pooling");
    cmd->add_option("--branches", branches, "active branches, e.g. 1,3");
  }

  ModelConfig resolve() const {
    ModelConfig cfg;
    try {
      cfg = config.empty() ? build_config(preset) : load_config(config);
      if (!fusion.empty()) cfg.fusion_mode = parse_fusion_mode(fusion);
      if (!branches.empty()) {
        cfg.active_branches.clear();
        std::stringstream ss(branches);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.active_branches.push_back(std::stoi(item));
      }
      cfg.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    } catch (const std::invalid_argument&) {
      throw UsageError("--branches expects a comma-separated list of integers");
    }
    return cfg;
  }

  static std::string join_presets() {
    std::string out;
    for (const auto& n : preset_names()) out += (out.empty() ? "" : ", ") + n;
    return out;
  }
};

std::pair<std::size_t, std::size_t> parse_extent(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const auto h = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const auto rest = text.substr(x + 1);
    const auto w = std::stoul(rest, &used);
    if (used != rest.size() || h == 0 || w == 0) throw std::invalid_argument(text);
    return {h, w};
  } catch (const std::logic_error&) {
    throw UsageError("expected HxW, got '" + text + "'");
  }
}

std::pair<std::size_t, std::size_t> default_extent(const ModelConfig& cfg) {
  if (cfg.name == "Tiny") return {8, 8};
  return {224, 224};
}

int run_describe(const ModelConfig& cfg, const std::string& input, const std::string& format) {
  const auto [h, w] = input.empty() ? default_extent(cfg) : parse_extent(input);
  CostReport report;
  try {
    report = count_flops(cfg, h, w);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  std::cout << "model " << cfg.name << "  fusion " << to_string(cfg.fusion_mode) << "  branches";
  for (int b : cfg.active_branches) std::cout << ' ' << b;
  std::cout << '\n';
  std::cout << (format == "tsv" ? format_tsv(report) : format_table(report));
  return 0;
}

Tensor random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Tensor image({1, w, h, c});
  for (auto& v : image.values()) v = normal(rng);
  return image;
}

int run_forward(const ModelConfig& cfg, const std::string& weights_path, const std::string& input,
                bool random, std::uint64_t seed, const std::string& extent, bool crop) {
  if (!input.empty() && random) throw UsageError("--input and --random are mutually exclusive");
  const WeightArchive weights = weights_path.empty() ? init_weights(cfg, seed) : load_weights(weights_path);
  Tensor image;
  if (!input.empty()) {
    image = read_raw_image(input);
  } else {
    const auto [h, w] = extent.empty() ? default_extent(cfg) : parse_extent(extent);
    image = random_image(h, w, cfg.in_channels, seed);
  }
  ForwardOptions opts;
  opts.crop_remainder = crop;
  Tensor logits;
  try {
    logits = model_forward(image, weights, cfg, opts);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  for (std::size_t b = 0; b < logits.extent(0); ++b) {
    for (std::size_t k = 0; k < logits.extent(1); ++k) {
      std::printf("%zu\t%zu\t%.9g\n", b, k, static_cast<double>(logits[b * logits.extent(1) + k]));
    }
  }
  return 0;
}

int run_gradcheck(const ModelConfig& cfg, double tol, double step) {
  GradcheckSuiteOptions opts;
  opts.model = cfg;
  opts.tolerance = tol;
  opts.step = step;
  std::size_t failed = 0;
  const auto cases = run_gradcheck_suite(opts);
  for (const auto& c : cases) {
    std::printf("%-4s %-24s seed %llu  max rel err %.3e\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                static_cast<unsigned long long>(c.seed), c.result.max_rel_error);
    if (!c.passed) ++failed;
  }
  std::printf("%zu/%zu cases within %.1e\n", cases.size() - failed, cases.size(), tol);
  return failed == 0 ? 0 : kExitCheckFailed;
}

int run_train(const ModelConfig& cfg, const TrainSettings& settings, std::size_t samples,
              const std::string& out, const std::string& history) {
  ToySpec spec;
  spec.size = samples;
  spec.classes = cfg.num_classes;
  spec.channels = cfg.in_channels;
  spec.image_side = default_extent(cfg).first;
  spec.seed = settings.seed;
  const ToyDataset data = make_toy_dataset(spec);
  const TrainResult result = train_loop(cfg, data, settings);
  if (!history.empty()) {
    std::FILE* f = std::fopen(history.c_str(), "w");
    if (!f) throw IoError("cannot open " + history + " for writing");
    const std::string text = format_history(result.history);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  if (!out.empty()) save_weights(result.weights, out);
  const double acc = accuracy(cfg, result.weights, data);
  std::printf("steps %zu  final loss %.6f  train accuracy %.4f\n", settings.steps,
              result.history.empty() ? 0.0 : result.history.back().loss, acc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial-shift MLP backbone toolkit"};
  app.require_subcommand(1);

  ModelFlags describe_model;
  std::string describe_input, describe_format = "table";
  auto* describe = app.add_subcommand("describe", "print parameter and FLOP counts per layer");
  describe_model.attach(describe, "Small/7");
  describe->add_option("--input", describe_input, "input extent HxW");
  describe->add_option("--format", describe_format, "table or tsv")
      ->check(CLI::IsMember({"table", "tsv"}));

  ModelFlags forward_model;
  std::string forward_weights, forward_input, forward_extent;
  bool forward_random = false, forward_crop = false;
  std::uint64_t forward_seed = 0;
  auto* forward = app.add_subcommand("forward", "print logits for one image");
  forward_model.attach(forward, "Tiny");
  forward->add_option("--weights", forward_weights, "weight archive (default: seeded init)");
  forward->add_option("--input", forward_input, "raw planar f32 image file");
  forward->add_flag("--random", forward_random, "use a seeded random image");
  forward->add_option("--seed", forward_seed, "seed for random image and init");
  forward->add_option("--input-size", forward_extent, "random image extent HxW");
  forward->add_flag("--crop", forward_crop, "drop pixels that do not fill a whole patch");

  ModelFlags grad_model;
  double grad_tol = 1e-5, grad_step = 1e-5;
  auto* grad = app.add_subcommand("gradcheck", "run the gradient-check suite");
  grad_model.attach(grad, "Tiny");
  grad->add_option("--tol", grad_tol, "maximum relative error")->check(CLI::PositiveNumber);
  grad->add_option("--step", grad_step, "finite-difference step")->check(CLI::Range(1e-6, 1e-3));

  ModelFlags train_model;
  TrainSettings settings;
  std::size_t train_samples = 64;
  std::string train_out, train_history;
  auto* train = app.add_subcommand("train-toy", "train on the synthetic toy task");
  train_model.attach(train, "Tiny");
  train->add_option("--steps", settings.steps, "optimizer steps")->check(CLI::PositiveNumber);
  train->add_option("--seed", settings.seed, "seed for data, init and DropPath");
  train->add_option("--batch", settings.batch_size, "batch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", settings.base_lr, "peak learning rate");
  train->add_option("--samples", train_samples, "toy dataset size")->check(CLI::PositiveNumber);
  train->add_option("--out", train_out, "write trained weights here");
  train->add_option("--history", train_history, "write step/lr/loss lines here");

  ModelFlags init_model;
  std::uint64_t init_seed = 0;
  std::string init_out;
  auto* init = app.add_subcommand("init", "write freshly initialized weights");
  init_model.attach(init, "Tiny");
  init->add_option("--seed", init_seed, "initialization seed");
  init->add_option("--out", init_out, "output archive")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*describe) return run_describe(describe_model.resolve(), describe_input, describe_format);
    if (*forward) {
      return run_forward(forward_model.resolve(), forward_weights, forward_input, forward_random,
                         forward_seed, forward_extent, forward_crop);
    }
    if (*grad) return run_gradcheck(grad_model.resolve(), grad_tol, grad_step);
    if (*train) return run_train(train_model.resolve(), settings, train_samples, train_out, train_history);
    if (*init) {
      save_weights(init_weights(init_model.resolve(), init_seed), init_out);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}
