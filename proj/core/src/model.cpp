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

#include "s2mlp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace s2mlp {

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::SplitAttention ? "split_attention" : "sum_pooling";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "split_attention") return FusionMode::SplitAttention;
  if (text == "sum_pooling") return FusionMode::SumPooling;
  throw ConfigError("unknown fusion mode '" + std::string(text) +
                    "' (expected split_attention or sum_pooling)");
}

void ModelConfig::validate() const {
  if (stages.empty()) throw ConfigError("model needs at least one stage");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    const std::string where = "stage " + std::to_string(s) + ": ";
    if (st.patch_size == 0) throw ConfigError(where + "patch_size must be >= 1");
    if (st.num_blocks == 0) throw ConfigError(where + "num_blocks must be >= 1");
    if (st.hidden_size == 0 || st.hidden_size % 4 != 0) {
      throw ConfigError(where + "hidden_size must be a positive multiple of 4 for the shifts, got " +
                        std::to_string(st.hidden_size));
    }
    if (fusion_mode == FusionMode::SplitAttention) bottleneck_width(st.hidden_size, reduction);
  }
  if (expansion_ratio == 0) throw ConfigError("expansion_ratio must be >= 1");
  if (reduction == 0) throw ConfigError("reduction must be >= 1");
  if (num_classes == 0) throw ConfigError("num_classes must be >= 1");
  if (in_channels == 0) throw ConfigError("in_channels must be >= 1");
  if (active_branches.empty()) throw ConfigError("active_branches must not be empty");
  std::set<int> seen;
  for (int b : active_branches) {
    if (b < 1 || b > 3) throw ConfigError("active branch ids must be 1, 2 or 3");
    if (!seen.insert(b).second) throw ConfigError("active branch ids must be unique");
  }
  if (!(drop_path_rate >= 0.0 && drop_path_rate < 1.0)) {
    throw ConfigError("drop_path_rate must lie in [0, 1)");
  }
}

std::size_t ModelConfig::downsampling() const {
  std::size_t p = 1;
  for (const auto& s : stages) p *= s.patch_size;
  return p;
}

ModelConfig build_config(std::string_view preset) {
  ModelConfig cfg;
  cfg.name = std::string(preset);
  if (preset == "Small/7") {
    cfg.stages = {{7, 192, 4}, {2, 384, 14}};
  } else if (preset == "Medium/7") {
    cfg.stages = {{7, 256, 7}, {2, 512, 17}};
  } else if (preset == "Small/14") {
    cfg.stages = {{14, 384, 4}, {2, 384, 14}};
  } else if (preset == "Tiny") {
    cfg.stages = {{4, 8, 1}};
    cfg.num_classes = 10;
    cfg.drop_path_rate = 0.0;
  } else {
    throw ConfigError("unknown preset '" + std::string(preset) +
                      "' (expected Small/7, Medium/7, Small/14 or Tiny)");
  }
  return cfg;
}

std::vector<std::string> preset_names() { return {"Small/7", "Medium/7", "Small/14", "Tiny"}; }

std::vector<std::pair<std::size_t, std::size_t>> stage_grids(const ModelConfig& cfg,
                                                             std::size_t width,
                                                             std::size_t height) {
  std::vector<std::pair<std::size_t, std::size_t>> grids;
  for (const auto& s : cfg.stages) {
    if (width % s.patch_size != 0 || height % s.patch_size != 0) {
      throw ShapeError("input " + std::to_string(width) + "x" + std::to_string(height) +
                       " is not divisible by the stage patch sizes (total downsampling " +
                       std::to_string(cfg.downsampling()) + ")");
    }
    width /= s.patch_size;
    height /= s.patch_size;
    grids.emplace_back(width, height);
  }
  return grids;
}

namespace {

std::string stage_prefix(std::size_t s) { return "stage" + std::to_string(s); }
std::string block_prefix(std::size_t s, std::size_t b) {
  return stage_prefix(s) + "/block" + std::to_string(b);
}

void add_affine(std::vector<ParamSpec>& out, const std::string& name, std::size_t in,
                std::size_t outc) {
  out.push_back({name + "/weight", {in, outc}, ParamInit::TruncatedNormal});
  out.push_back({name + "/bias", {outc}, ParamInit::Zeros});
}

void add_norm(std::vector<ParamSpec>& out, const std::string& name, std::size_t c) {
  out.push_back({name + "/gamma", {c}, ParamInit::Ones});
  out.push_back({name + "/beta", {c}, ParamInit::Zeros});
}

}  // namespace

std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> out;
  std::size_t cin = cfg.in_channels;
  const std::size_t k = cfg.branch_count();
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const auto& st = cfg.stages[s];
    const std::size_t c = st.hidden_size;
    add_affine(out, stage_prefix(s) + "/embed", st.patch_size * st.patch_size * cin, c);
    for (std::size_t b = 0; b < st.num_blocks; ++b) {
      const std::string p = block_prefix(s, b);
      add_norm(out, p + "/ln1", c);
      add_affine(out, p + "/mlp1", c, k * c);
      if (cfg.fusion_mode == FusionMode::SplitAttention) {
        const std::size_t hidden = bottleneck_width(c, cfg.reduction);
        add_affine(out, p + "/sa/fc1", c, hidden);
        add_affine(out, p + "/sa/fc2", hidden, k * c);
      }
      add_affine(out, p + "/mlp2", c, c);
      add_norm(out, p + "/ln2", c);
      add_affine(out, p + "/cm/fc1", c, cfg.expansion_ratio * c);
      add_affine(out, p + "/cm/fc2", cfg.expansion_ratio * c, c);
    }
    cin = c;
  }
  add_norm(out, "norm", cin);
  add_affine(out, "head", cin, cfg.num_classes);
  return out;
}

WeightArchive init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  constexpr double kStd = 0.02;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  WeightArchive archive;
  for (const auto& spec : parameter_layout(cfg)) {
    Tensor t(spec.dims);
    switch (spec.init) {
      case ParamInit::TruncatedNormal:
        for (auto& v : t.values()) {
          double z;
          do {
            z = normal(rng);
          } while (std::abs(z) > 2.0);
          v = static_cast<float>(kStd * z);
        }
        break;
      case ParamInit::Ones:
        for (auto& v : t.values()) v = 1.0f;
        break;
      case ParamInit::Zeros:
        break;
    }
    archive.add(spec.name, std::move(t));
  }
  return archive;
}

// --- BlockParams -------------------------------------------------------------

template <class T>
BlockParams<T> BlockParams<T>::from_archive(const BasicArchive<T>& w, const std::string& prefix,
                                            const ModelConfig& cfg) {
  auto aff = [&](const std::string& name) {
    return AffineParams<T>{w.at(prefix + "/" + name + "/weight"),
                           w.at(prefix + "/" + name + "/bias")};
  };
  auto norm = [&](const std::string& name) {
    return LayerNormParams<T>{w.at(prefix + "/" + name + "/gamma"),
                              w.at(prefix + "/" + name + "/beta")};
  };
  BlockParams p;
  p.ln1 = norm("ln1");
  p.mlp1 = aff("mlp1");
  if (cfg.fusion_mode == FusionMode::SplitAttention) {
    p.sa = SplitAttentionParams<T>{aff("sa/fc1"), aff("sa/fc2"), cfg.branch_count()};
  }
  p.mlp2 = aff("mlp2");
  p.ln2 = norm("ln2");
  p.cm_fc1 = aff("cm/fc1");
  p.cm_fc2 = aff("cm/fc2");
  p.drop_path_rate = cfg.drop_path_rate;
  return p;
}

template <class T>
void BlockParams<T>::to_archive(BasicArchive<T>& w, const std::string& prefix) const {
  auto aff = [&](const std::string& name, const AffineParams<T>& a) {
    w.add(prefix + "/" + name + "/weight", a.weight);
    w.add(prefix + "/" + name + "/bias", a.bias);
  };
  auto norm = [&](const std::string& name, const LayerNormParams<T>& n) {
    w.add(prefix + "/" + name + "/gamma", n.gamma);
    w.add(prefix + "/" + name + "/beta", n.beta);
  };
  norm("ln1", ln1);
  aff("mlp1", mlp1);
  if (sa) {
    aff("sa/fc1", sa->fc1);
    aff("sa/fc2", sa->fc2);
  }
  aff("mlp2", mlp2);
  norm("ln2", ln2);
  aff("cm/fc1", cm_fc1);
  aff("cm/fc2", cm_fc2);
}

// --- graph -------------------------------------------------------------------

template <class T>
ad::Var<T> ParamSource<T>::operator()(const std::string& name) {
  for (const auto& [n, v] : bound_) {
    if (n == name) return v;
  }
  ad::Var<T> v = tape_.leaf(weights_.at(name), name);
  bound_.emplace_back(name, v);
  return v;
}

namespace graph {

template <class T>
ad::Var<T> patch_embed(ad::Tape<T>& t, const ad::Var<T>& x, const ad::Var<T>& weight,
                       const ad::Var<T>& bias, std::size_t patch) {
  return ad::affine(t, ad::patchify(t, x, patch), weight, bias);
}

template <class T>
ad::Var<T> s2mlpv2_component(ParamSource<T>& params, const std::string& prefix,
                             const ad::Var<T>& x, const ModelConfig& cfg) {
  auto& t = params.tape();
  const std::size_t c = x.dims().back();
  const std::size_t k = cfg.branch_count();
  if (c % 4 != 0) {
    throw ConfigError("spatial-shift component needs channels divisible by 4, got " + std::to_string(c));
  }
  const ad::Var<T> w1 = params(prefix + "/mlp1/weight");
  if (w1.dims().size() != 2 || w1.dims()[1] != k * c) {
    throw ConfigError("mlp1 of '" + prefix + "' must map " + std::to_string(c) + " -> " +
                      std::to_string(k * c) + " channels, has dims " + to_string(w1.dims()));
  }
  const ad::Var<T> expanded = ad::affine(t, x, w1, params(prefix + "/mlp1/bias"));

  std::vector<ad::Var<T>> parts;
  parts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    ad::Var<T> part = ad::slice_channels(t, expanded, i * c, (i + 1) * c);
    switch (cfg.active_branches[i]) {
      case 1: part = ad::spatial_shift(t, part, ShiftSpec::first()); break;
      case 2: part = ad::spatial_shift(t, part, ShiftSpec::second()); break;
      default: break;  // the third split is left unshifted
    }
    parts.push_back(std::move(part));
  }

  ad::Var<T> fused;
  if (cfg.fusion_mode == FusionMode::SplitAttention) {
    fused = ad::split_attention<T>(t, parts, params(prefix + "/sa/fc1/weight"),
                                   params(prefix + "/sa/fc1/bias"),
                                   params(prefix + "/sa/fc2/weight"),
                                   params(prefix + "/sa/fc2/bias"));
  } else {
    fused = ad::branch_mean<T>(t, parts);
  }
  return ad::affine(t, fused, params(prefix + "/mlp2/weight"), params(prefix + "/mlp2/bias"));
}

template <class T>
ad::Var<T> cm_mlp(ParamSource<T>& params, const std::string& prefix, const ad::Var<T>& x) {
  auto& t = params.tape();
  const ad::Var<T> h =
      ad::gelu(t, ad::affine(t, x, params(prefix + "/cm/fc1/weight"), params(prefix + "/cm/fc1/bias")));
  return ad::affine(t, h, params(prefix + "/cm/fc2/weight"), params(prefix + "/cm/fc2/bias"));
}

template <class T>
ad::Var<T> block_forward(ParamSource<T>& params, const std::string& prefix, const ad::Var<T>& x,
                         const ModelConfig& cfg, bool training, std::mt19937_64& rng) {
  auto& t = params.tape();
  const double rate = training ? cfg.drop_path_rate : 0.0;

  ad::Var<T> h = ad::layer_norm(t, x, params(prefix + "/ln1/gamma"), params(prefix + "/ln1/beta"));
  h = s2mlpv2_component(params, prefix, h, cfg);
  const ad::Var<T> y = ad::add(t, ad::drop_path(t, h, rate, rng), x);

  ad::Var<T> z = ad::layer_norm(t, y, params(prefix + "/ln2/gamma"), params(prefix + "/ln2/beta"));
  z = cm_mlp(params, prefix, z);
  return ad::add(t, ad::drop_path(t, z, rate, rng), y);
}

template <class T>
ad::Var<T> model_forward(ParamSource<T>& params, const ad::Var<T>& image, const ModelConfig& cfg,
                         const ForwardOptions& opts, std::vector<Shape>* stage_dims) {
  cfg.validate();
  auto& t = params.tape();
  const Shape& d = image.dims();
  if (d.size() != 4) throw ShapeError("image must be (B, W, H, C), got " + to_string(d));
  if (d[3] != cfg.in_channels) {
    throw ShapeError("image has " + std::to_string(d[3]) + " channels, model expects " +
                     std::to_string(cfg.in_channels));
  }
  stage_grids(cfg, d[1], d[2]);

  std::mt19937_64 rng(opts.seed);
  ad::Var<T> x = image;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const std::string sp = stage_prefix(s);
    x = patch_embed(t, x, params(sp + "/embed/weight"), params(sp + "/embed/bias"),
                    cfg.stages[s].patch_size);
    for (std::size_t b = 0; b < cfg.stages[s].num_blocks; ++b) {
      x = block_forward(params, block_prefix(s, b), x, cfg, opts.training, rng);
    }
    if (stage_dims) stage_dims->push_back(x.dims());
  }
  x = ad::layer_norm(t, x, params("norm/gamma"), params("norm/beta"));
  const ad::Var<T> pooled = ad::mean_over_tokens(t, x);
  return ad::affine(t, pooled, params("head/weight"), params("head/bias"));
}

}  // namespace graph

// --- plain-tensor wrappers -----------------------------------------------------

namespace {

template <class T>
BasicArchive<T> block_archive(const BlockParams<T>& p) {
  BasicArchive<T> w;
  p.to_archive(w, "block");
  return w;
}

template <class T>
ModelConfig block_config(const BlockParams<T>& p, ModelConfig cfg) {
  cfg.fusion_mode = p.sa ? FusionMode::SplitAttention : FusionMode::SumPooling;
  cfg.drop_path_rate = p.drop_path_rate;
  return cfg;
}

}  // namespace

template <class T>
BasicTensor<T> patch_embed(const BasicTensor<T>& x, const AffineParams<T>& p, std::size_t patch) {
  return affine(patchify(x, patch), p);
}

template <class T>
BasicTensor<T> s2mlpv2_component(const BasicTensor<T>& x, const BlockParams<T>& p,
                                 const ModelConfig& cfg) {
  const BasicArchive<T> w = block_archive(p);
  ad::Tape<T> tape(ad::Tape<T>::Mode::NoGrad);
  ParamSource<T> params(tape, w);
  return graph::s2mlpv2_component(params, "block", tape.leaf(x), block_config(p, cfg)).value();
}

template <class T>
BasicTensor<T> cm_mlp(const BasicTensor<T>& x, const BlockParams<T>& p) {
  return affine(gelu(affine(x, p.cm_fc1)), p.cm_fc2);
}

template <class T>
BasicTensor<T> block_forward(const BasicTensor<T>& x, const BlockParams<T>& p,
                             const ModelConfig& cfg, const ForwardOptions& opts) {
  const BasicArchive<T> w = block_archive(p);
  ad::Tape<T> tape(ad::Tape<T>::Mode::NoGrad);
  ParamSource<T> params(tape, w);
  std::mt19937_64 rng(opts.seed);
  return graph::block_forward(params, "block", tape.leaf(x), block_config(p, cfg), opts.training,
                              rng)
      .value();
}

template <class T>
BasicTensor<T> model_forward(const BasicTensor<T>& image, const BasicArchive<T>& weights,
                             const ModelConfig& cfg, const ForwardOptions& opts,
                             std::vector<Shape>* stage_dims) {
  ad::Tape<T> tape(ad::Tape<T>::Mode::NoGrad);
  ParamSource<T> params(tape, weights);
  if (opts.crop_remainder && image.rank() == 4) {
    const std::size_t d = cfg.downsampling();
    const std::size_t w = image.extent(1) / d * d, h = image.extent(2) / d * d;
    if (w != image.extent(1) || h != image.extent(2)) {
      return graph::model_forward(params, tape.leaf(crop_spatial(image, w, h)), cfg, opts, stage_dims)
          .value();
    }
  }
  return graph::model_forward(params, tape.leaf(image), cfg, opts, stage_dims).value();
}

#define S2MLP_INSTANTIATE(T)                                                                    \
  template struct BlockParams<T>;                                                               \
  template class ParamSource<T>;                                                                \
  template ad::Var<T> graph::patch_embed(ad::Tape<T>&, const ad::Var<T>&, const ad::Var<T>&,    \
                                         const ad::Var<T>&, std::size_t);                       \
  template ad::Var<T> graph::s2mlpv2_component(ParamSource<T>&, const std::string&,             \
                                               const ad::Var<T>&, const ModelConfig&);          \
  template ad::Var<T> graph::cm_mlp(ParamSource<T>&, const std::string&, const ad::Var<T>&);    \
  template ad::Var<T> graph::block_forward(ParamSource<T>&, const std::string&,                 \
                                           const ad::Var<T>&, const ModelConfig&, bool,         \
                                           std::mt19937_64&);                                   \
  template ad::Var<T> graph::model_forward(ParamSource<T>&, const ad::Var<T>&,                  \
                                           const ModelConfig&, const ForwardOptions&,           \
                                           std::vector<Shape>*);                                \
  template BasicTensor<T> patch_embed(const BasicTensor<T>&, const AffineParams<T>&,            \
                                      std::size_t);                                             \
  template BasicTensor<T> s2mlpv2_component(const BasicTensor<T>&, const BlockParams<T>&,       \
                                            const ModelConfig&);                                \
  template BasicTensor<T> cm_mlp(const BasicTensor<T>&, const BlockParams<T>&);                 \
  template BasicTensor<T> block_forward(const BasicTensor<T>&, const BlockParams<T>&,           \
                                        const ModelConfig&, const ForwardOptions&);             \
  template BasicTensor<T> model_forward(const BasicTensor<T>&, const BasicArchive<T>&,          \
                                        const ModelConfig&, const ForwardOptions&,              \
                                        std::vector<Shape>*);

S2MLP_INSTANTIATE(float)
S2MLP_INSTANTIATE(double)

#undef S2MLP_INSTANTIATE

}  // namespace s2mlp
