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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "s2mlp/tensor.hpp"

namespace s2mlp {

/// Ordered collection of uniquely named tensors. Order is insertion order,
/// which for model weights is model-definition order.
template <class T>
class BasicArchive {
 public:
  struct Entry {
    std::string name;
    BasicTensor<T> tensor;

    bool operator==(const Entry&) const = default;
  };

  /// Throws ArchiveError if `name` is already present.
  void add(std::string name, BasicTensor<T> tensor);

  bool contains(std::string_view name) const;
  /// Throws ArchiveError naming the missing entry.
  const BasicTensor<T>& at(std::string_view name) const;
  BasicTensor<T>& at(std::string_view name);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  /// Total number of stored scalars.
  std::size_t scalar_count() const noexcept;

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }

  template <class U>
  BasicArchive<U> cast() const {
    BasicArchive<U> out;
    for (const auto& e : entries_) out.add(e.name, e.tensor.template cast<U>());
    return out;
  }

  bool operator==(const BasicArchive& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using WeightArchive = BasicArchive<float>;

inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;

// Binary layout, all integers little-endian:
//   "S2V2" | u32 version | u32 entry count
//   per entry: u32 name length | name bytes | u32 rank | u64 dim x rank |
//              u8 dtype (0 = f32) | f32 values
std::vector<std::uint8_t> encode_weights(const WeightArchive& archive);
/// Throws FormatError carrying the byte offset of the first problem.
WeightArchive decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const WeightArchive& archive, const std::filesystem::path& path);
WeightArchive load_weights(const std::filesystem::path& path);

/// Raw image file: u32 H, u32 W, u32 C (little-endian), then f32 pixels in
/// channel-planar order (C planes of H rows of W values). Returned as a
/// (1, W, H, C) feature map.
Tensor read_raw_image(const std::filesystem::path& path);
void write_raw_image(const std::filesystem::path& path, const Tensor& image);

}  // namespace s2mlp
