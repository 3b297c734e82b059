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

#include "s2mlp/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace s2mlp {

template <class T>
void BasicArchive<T>::add(std::string name, BasicTensor<T> tensor) {
  if (index_.count(name)) throw ArchiveError("duplicate archive entry '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor)});
}

template <class T>
bool BasicArchive<T>::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

template <class T>
const BasicTensor<T>& BasicArchive<T>::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ArchiveError("missing weight '" + std::string(name) + "'");
  return entries_[it->second].tensor;
}

template <class T>
BasicTensor<T>& BasicArchive<T>::at(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ArchiveError("missing weight '" + std::string(name) + "'");
  return entries_[it->second].tensor;
}

template <class T>
std::size_t BasicArchive<T>::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

template class BasicArchive<float>;
template class BasicArchive<double>;

namespace {

constexpr char kMagic[4] = {'S', '2', 'V', '2'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated ") + what + ": expected " + std::to_string(n) +
                            " bytes, got " + std::to_string(remaining()),
                        pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const WeightArchive& archive) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kArchiveVersion);
  w.u32(static_cast<std::uint32_t>(archive.size()));
  for (const auto& e : archive) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.dims()) w.u64(d);
    w.u8(kDtypeF32);
    for (float v : e.tensor.values()) w.u32(std::bit_cast<std::uint32_t>(v));
  }
  return w.take();
}

WeightArchive decode_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected S2V2", 0);
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kArchiveVersion) {
    throw FormatError("unsupported archive version " + std::to_string(version), version_at);
  }
  const std::uint32_t count = r.u32("entry count");
  WeightArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32("name length");
    const auto name_bytes = r.bytes(name_len, "entry name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::size_t rank_at = r.offset();
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > kMaxRank) {
      throw FormatError("entry '" + name + "' has invalid rank " + std::to_string(rank), rank_at);
    }
    Shape dims;
    std::size_t numel = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::size_t dim_at = r.offset();
      const std::uint64_t d = r.u64("dimension");
      if (d == 0 || d > (std::uint64_t{1} << 40)) {
        throw FormatError("entry '" + name + "' has invalid extent " + std::to_string(d), dim_at);
      }
      dims.push_back(static_cast<std::size_t>(d));
      numel *= static_cast<std::size_t>(d);
    }
    const std::size_t dtype_at = r.offset();
    const std::uint8_t dtype = r.u8("dtype tag");
    if (dtype != kDtypeF32) {
      throw FormatError("entry '" + name + "' has unknown dtype tag " + std::to_string(dtype),
                        dtype_at);
    }
    const auto raw = r.bytes(numel * 4, "tensor data");
    std::vector<float> values(numel);
    for (std::size_t j = 0; j < numel; ++j) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(raw[4 * j + b]) << (8 * b);
      values[j] = std::bit_cast<float>(u);
    }
    try {
      archive.add(std::move(name), Tensor(std::move(dims), std::move(values)));
    } catch (const ArchiveError& e) {
      throw FormatError(e.what(), rank_at);
    }
  }
  if (r.remaining() != 0) {
    throw FormatError("file is " + std::to_string(bytes.size()) + " bytes but declared entries end at " +
                          std::to_string(r.offset()),
                      r.offset());
  }
  return archive;
}

void save_weights(const WeightArchive& archive, const std::filesystem::path& path) {
  write_file(path, encode_weights(archive));
}

WeightArchive load_weights(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

Tensor read_raw_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Reader r(bytes);
  const std::size_t h = r.u32("image height");
  const std::size_t w = r.u32("image width");
  const std::size_t c = r.u32("image channels");
  if (h == 0 || w == 0 || c == 0) throw FormatError("image extents must be positive", 0);
  const auto raw = r.bytes(h * w * c * 4, "pixel data");
  if (r.remaining() != 0) throw FormatError("trailing bytes after pixel data", r.offset());
  Tensor image({1, w, h, c});
  std::size_t k = 0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x, ++k) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(raw[4 * k + b]) << (8 * b);
        image.at(0, x, y, ch) = std::bit_cast<float>(u);
      }
  return image;
}

void write_raw_image(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 4 || image.extent(0) != 1) {
    throw ShapeError("write_raw_image expects (1, W, H, C), got " + to_string(image.dims()));
  }
  const std::size_t w = image.extent(1), h = image.extent(2), c = image.extent(3);
  Writer out;
  out.u32(static_cast<std::uint32_t>(h));
  out.u32(static_cast<std::uint32_t>(w));
  out.u32(static_cast<std::uint32_t>(c));
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.u32(std::bit_cast<std::uint32_t>(image.at(0, x, y, ch)));
  write_file(path, out.take());
}

}  // namespace s2mlp
