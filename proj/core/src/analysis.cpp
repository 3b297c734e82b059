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

#include "s2mlp/analysis.hpp"

#include <cstdio>
#include <sstream>

namespace s2mlp {

std::uint64_t CostReport::token_flops() const {
  std::uint64_t n = 0;
  for (const auto& l : layers)
    if (!l.per_image) n += l.flops;
  return n;
}

std::uint64_t CostReport::image_flops() const {
  std::uint64_t n = 0;
  for (const auto& l : layers)
    if (l.per_image) n += l.flops;
  return n;
}

namespace {

// tokens == 0 means "parameters only".
CostReport analyze(const ModelConfig& cfg, std::size_t tokens_w, std::size_t tokens_h,
                   bool with_flops) {
  cfg.validate();
  CostReport r;
  auto dense = [](std::uint64_t in, std::uint64_t out) { return in * out + out; };
  auto push = [&](std::string name, const std::string& group, std::uint64_t params,
                  std::uint64_t flops, bool per_image) {
    r.layers.push_back({std::move(name), group, params, with_flops ? flops : 0, per_image});
  };

  std::uint64_t cin = cfg.in_channels;
  std::uint64_t w = tokens_w, h = tokens_h;
  const std::uint64_t k = cfg.branch_count();
  const std::uint64_t rho = cfg.expansion_ratio;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const auto& st = cfg.stages[s];
    const std::string group = "stage" + std::to_string(s);
    const std::uint64_t c = st.hidden_size;
    const std::uint64_t p = st.patch_size;
    if (with_flops) {
      w /= p;
      h /= p;
    }
    const std::uint64_t n = w * h;
    const std::uint64_t patch_in = p * p * cin;
    push(group + "/embed", group, dense(patch_in, c), n * patch_in * c, false);
    for (std::size_t b = 0; b < st.num_blocks; ++b) {
      const std::string pre = group + "/block" + std::to_string(b);
      push(pre + "/ln1", group, 2 * c, 0, false);
      push(pre + "/mlp1", group, dense(c, k * c), n * c * k * c, false);
      if (cfg.fusion_mode == FusionMode::SplitAttention) {
        const std::uint64_t hid = bottleneck_width(c, cfg.reduction);
        push(pre + "/sa/fc1", group, dense(c, hid), c * hid, true);
        push(pre + "/sa/fc2", group, dense(hid, k * c), hid * k * c, true);
      }
      push(pre + "/mlp2", group, dense(c, c), n * c * c, false);
      push(pre + "/ln2", group, 2 * c, 0, false);
      push(pre + "/cm/fc1", group, dense(c, rho * c), n * c * rho * c, false);
      push(pre + "/cm/fc2", group, dense(rho * c, c), n * rho * c * c, false);
    }
    cin = c;
  }
  push("norm", "head", 2 * cin, 0, false);
  push("head", "head", dense(cin, cfg.num_classes), cin * cfg.num_classes, true);

  for (const auto& l : r.layers) {
    if (r.groups.empty() || r.groups.back().name != l.group) r.groups.push_back({l.group, 0, 0});
    r.groups.back().params += l.params;
    r.groups.back().flops += l.flops;
    r.total_params += l.params;
    r.total_flops += l.flops;
  }
  return r;
}

}  // namespace

CostReport count_params(const ModelConfig& cfg) { return analyze(cfg, 0, 0, false); }

CostReport count_flops(const ModelConfig& cfg, std::size_t height, std::size_t width) {
  stage_grids(cfg, width, height);
  CostReport r = analyze(cfg, width, height, true);
  r.input_height = height;
  r.input_width = width;
  return r;
}

std::string format_millions(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(n) / 1e6);
  return buf;
}

std::string format_billions(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fB", static_cast<double>(n) / 1e9);
  return buf;
}

std::string format_table(const CostReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-32s %14s %16s\n", "layer", "params", "flops(MAC)");
  os << line;
  std::size_t g = 0;
  for (std::size_t i = 0; i < r.layers.size(); ++i) {
    const auto& l = r.layers[i];
    std::snprintf(line, sizeof line, "%-32s %14llu %16llu\n", l.name.c_str(),
                  static_cast<unsigned long long>(l.params),
                  static_cast<unsigned long long>(l.flops));
    os << line;
    const bool group_ends = i + 1 == r.layers.size() || r.layers[i + 1].group != l.group;
    if (group_ends && g < r.groups.size()) {
      const auto& gc = r.groups[g++];
      std::snprintf(line, sizeof line, "%-32s %14llu %16llu\n", (gc.name + " subtotal").c_str(),
                    static_cast<unsigned long long>(gc.params),
                    static_cast<unsigned long long>(gc.flops));
      os << line;
    }
  }
  std::snprintf(line, sizeof line, "%-32s %14llu %16llu\n", "total",
                static_cast<unsigned long long>(r.total_params),
                static_cast<unsigned long long>(r.total_flops));
  os << line;
  os << "total params " << format_millions(r.total_params);
  if (r.input_height) {
    os << "  flops " << format_billions(r.total_flops) << " at " << r.input_height << "x"
       << r.input_width;
  }
  os << '\n';
  return os.str();
}

std::string format_tsv(const CostReport& r) {
  std::ostringstream os;
  for (const auto& l : r.layers) os << l.name << '\t' << l.params << '\t' << l.flops << '\n';
  for (const auto& g : r.groups) os << g.name << "/total\t" << g.params << '\t' << g.flops << '\n';
  os << "total\t" << r.total_params << '\t' << r.total_flops << '\n';
  return os.str();
}

}  // namespace s2mlp
