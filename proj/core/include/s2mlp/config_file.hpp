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

#include <filesystem>
#include <string>
#include <string_view>

#include "s2mlp/model.hpp"

namespace s2mlp {

// Line-oriented `key = value` text. Top-level keys come first; each
// `[stage]` header opens a new stage whose keys follow it. `#` starts a
// comment. Unknown keys, duplicate keys and missing stage keys are errors.
//
//   name = Small/7
//   expansion_ratio = 3
//   active_branches = 1,2,3
//   [stage]
//   patch_size = 7
//   hidden_size = 192
//   num_blocks = 4

std::string format_config(const ModelConfig& cfg);

/// Throws ConfigError naming the offending line.
ModelConfig parse_config(std::string_view text);

ModelConfig load_config(const std::filesystem::path& path);

}  // namespace s2mlp
