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

#include "s2mlp/config_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace s2mlp {

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "name = " << cfg.name << '\n';
  os << "expansion_ratio = " << cfg.expansion_ratio << '\n';
  os << "reduction = " << cfg.reduction << '\n';
  os << "num_classes = " << cfg.num_classes << '\n';
  os << "in_channels = " << cfg.in_channels << '\n';
  os << "fusion_mode = " << to_string(cfg.fusion_mode) << '\n';
  os << "active_branches = ";
  for (std::size_t i = 0; i < cfg.active_branches.size(); ++i) {
    if (i) os << ',';
    os << cfg.active_branches[i];
  }
  os << '\n';
  char rate[32];
  std::snprintf(rate, sizeof rate, "%.17g", cfg.drop_path_rate);
  os << "drop_path_rate = " << rate << '\n';
  for (const auto& s : cfg.stages) {
    os << "\n[stage]\n";
    os << "patch_size = " << s.patch_size << '\n';
    os << "hidden_size = " << s.hidden_size << '\n';
    os << "num_blocks = " << s.num_blocks << '\n';
  }
  return os.str();
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::size_t parse_count(std::string_view v, std::size_t line) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(line, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view v, std::size_t line) {
  const std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) fail(line, "expected a number, got '" + s + "'");
  return d;
}

}  // namespace

ModelConfig parse_config(std::string_view text) {
  ModelConfig cfg;
  cfg.stages.clear();
  std::set<std::string> seen_top;
  std::set<std::string> seen_stage;
  std::size_t stage_header_line = 0;
  auto finish_stage = [&]() {
    if (cfg.stages.empty()) return;
    for (const char* key : {"patch_size", "hidden_size", "num_blocks"}) {
      if (!seen_stage.count(key)) {
        fail(stage_header_line, std::string("stage is missing '") + key + "'");
      }
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line != "[stage]") fail(line_no, "unknown section '" + std::string(line) + "'");
      finish_stage();
      cfg.stages.push_back(StageConfig{0, 0, 0});
      seen_stage.clear();
      stage_header_line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");

    if (!cfg.stages.empty()) {
      if (!seen_stage.insert(key).second) fail(line_no, "duplicate stage key '" + key + "'");
      StageConfig& st = cfg.stages.back();
      if (key == "patch_size") st.patch_size = parse_count(value, line_no);
      else if (key == "hidden_size") st.hidden_size = parse_count(value, line_no);
      else if (key == "num_blocks") st.num_blocks = parse_count(value, line_no);
      else fail(line_no, "unknown stage key '" + key + "'");
      continue;
    }

    if (!seen_top.insert(key).second) fail(line_no, "duplicate key '" + key + "'");
    if (key == "name") {
      cfg.name = std::string(value);
    } else if (key == "expansion_ratio") {
      cfg.expansion_ratio = parse_count(value, line_no);
    } else if (key == "reduction") {
      cfg.reduction = parse_count(value, line_no);
    } else if (key == "num_classes") {
      cfg.num_classes = parse_count(value, line_no);
    } else if (key == "in_channels") {
      cfg.in_channels = parse_count(value, line_no);
    } else if (key == "fusion_mode") {
      try {
        cfg.fusion_mode = parse_fusion_mode(value);
      } catch (const ConfigError& e) {
        fail(line_no, e.what());
      }
    } else if (key == "active_branches") {
      cfg.active_branches.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        cfg.active_branches.push_back(static_cast<int>(parse_count(item, line_no)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    } else if (key == "drop_path_rate") {
      cfg.drop_path_rate = parse_real(value, line_no);
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
  }
  finish_stage();
  cfg.validate();
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace s2mlp
