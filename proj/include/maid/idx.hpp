/*
 * Copyright 2026 The maid-assure Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// IDX image and label files, the MNIST container format.
//
// Images: magic 0x00000803, then count, rows, cols as big-endian uint32,
// then unsigned-byte pixels, row-major. Labels: magic 0x00000801, count, then
// one unsigned byte per label. Pixels are scaled by 1/255 on load.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "maid/errors.hpp"
#include "maid/image.hpp"

namespace maid::idx {

inline constexpr std::uint32_t kImageMagic = 0x00000803;
inline constexpr std::uint32_t kLabelMagic = 0x00000801;

/// Rounds an intensity to the nearest value an IDX file can hold.
inline double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

namespace detail {

inline std::uint32_t read_u32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* field) {
  if (bytes.size() < offset + 4) throw FormatError(std::string("truncated IDX header reading ") + field, bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline std::vector<Image> parse_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = detail::read_u32(bytes, 0, "magic");
  if (magic != kImageMagic) throw FormatError("not an IDX image file (bad magic)", 0);
  const std::uint32_t count = detail::read_u32(bytes, 4, "image count");
  const std::uint32_t rows = detail::read_u32(bytes, 8, "row count");
  const std::uint32_t cols = detail::read_u32(bytes, 12, "column count");
  const std::size_t per = std::size_t{rows} * cols;
  if (count > 0 && per == 0) throw FormatError("IDX image dimensions must be positive", 8);
  if (per > 0 && count > (bytes.size() - 16) / per) throw FormatError("truncated IDX image data", bytes.size());
  const std::size_t expected = 16 + per * count;
  if (bytes.size() < expected) throw FormatError("truncated IDX image data", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after IDX image data", expected);

  std::vector<Image> images;
  images.reserve(count);
  std::size_t pos = 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    Image img(cols, rows);
    for (std::size_t k = 0; k < per; ++k) img.pixels[k] = bytes[pos++] / 255.0;
    images.push_back(std::move(img));
  }
  return images;
}

inline std::vector<int> parse_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = detail::read_u32(bytes, 0, "magic");
  if (magic != kLabelMagic) throw FormatError("not an IDX label file (bad magic)", 0);
  const std::uint32_t count = detail::read_u32(bytes, 4, "label count");
  const std::size_t expected = 8 + std::size_t{count};
  if (bytes.size() < expected) throw FormatError("truncated IDX label data", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after IDX label data", expected);
  return {bytes.begin() + 8, bytes.end()};
}

/// Encodes images; an empty list still records `width` x `height`.
inline std::vector<std::uint8_t> encode_images(const std::vector<Image>& images, std::size_t width = 28,
                                               std::size_t height = 28) {
  if (!images.empty()) {
    width = images.front().width;
    height = images.front().height;
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size() * width * height);
  detail::put_u32(out, kImageMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(images.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(height));
  detail::put_u32(out, static_cast<std::uint32_t>(width));
  for (const auto& img : images) {
    if (img.width != width || img.height != height) throw InputError("IDX images must share one size");
    for (double v : img.pixels) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

inline std::vector<std::uint8_t> encode_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  detail::put_u32(out, kLabelMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(labels.size()));
  for (int y : labels) {
    if (y < 0 || y > 255) throw InputError("IDX labels must fit in one byte");
    out.push_back(static_cast<std::uint8_t>(y));
  }
  return out;
}

inline std::vector<Image> read_images(const std::filesystem::path& path) { return parse_images(detail::read_file(path)); }
inline std::vector<int> read_labels(const std::filesystem::path& path) { return parse_labels(detail::read_file(path)); }

inline void write_images(const std::filesystem::path& path, const std::vector<Image>& images, std::size_t width = 28,
                         std::size_t height = 28) {
  detail::write_file(path, encode_images(images, width, height));
}
inline void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  detail::write_file(path, encode_labels(labels));
}

inline AssuranceSet read_set(const std::filesystem::path& images, const std::filesystem::path& labels) {
  AssuranceSet set{read_images(images), read_labels(labels)};
  if (set.images.size() != set.labels.size())
    throw FormatError("image and label files hold different counts", 4);
  return set;
}

inline void write_set(const AssuranceSet& set, const std::filesystem::path& images, const std::filesystem::path& labels) {
  write_images(images, set.images);
  write_labels(labels, set.labels);
}

}  // namespace maid::idx
