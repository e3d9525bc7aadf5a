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

#include <gtest/gtest.h>

#include <filesystem>
#include <vector>

#include "maid/idx.hpp"

namespace {

namespace idx = maid::idx;
using maid::Image;

std::vector<std::uint8_t> header(std::uint32_t magic, std::vector<std::uint32_t> dims) {
  std::vector<std::uint8_t> out;
  auto put = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  };
  put(magic);
  for (auto d : dims) put(d);
  return out;
}

TEST(Idx, ParsesBigEndianHeadersAndScalesPixels) {
  auto bytes = header(0x00000803, {2, 2, 3});
  for (int i = 0; i < 12; ++i) bytes.push_back(static_cast<std::uint8_t>(i * 20));
  const auto images = idx::parse_images(bytes);
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(images[0].height, 2u);
  EXPECT_EQ(images[0].width, 3u);
  EXPECT_DOUBLE_EQ(images[0].at(1, 2), 100.0 / 255.0);
  EXPECT_DOUBLE_EQ(images[1].at(0, 0), 120.0 / 255.0);

  auto lb = header(0x00000801, {3});
  lb.insert(lb.end(), {7, 0, 9});
  EXPECT_EQ(idx::parse_labels(lb), (std::vector<int>{7, 0, 9}));
}

TEST(Idx, EncodeParseRoundTrip) {
  std::vector<Image> images;
  for (int k = 0; k < 3; ++k) {
    Image img(5, 4);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>((i * 37 + k) % 256) / 255.0;
    images.push_back(img);
  }
  const auto bytes = idx::encode_images(images);
  EXPECT_EQ(bytes.size(), 16u + 3 * 20);
  EXPECT_EQ(idx::parse_images(bytes), images);
  EXPECT_EQ(idx::parse_labels(idx::encode_labels({1, 2, 3})), (std::vector<int>{1, 2, 3}));
}

TEST(Idx, EmptyFilesAreValid) {
  EXPECT_TRUE(idx::parse_images(idx::encode_images({})).empty());
  EXPECT_TRUE(idx::parse_labels(idx::encode_labels({})).empty());
}

TEST(Idx, MalformedFilesReportOffsets) {
  auto bytes = idx::encode_images({Image(2, 2, 0.5)});
  auto bad_magic = bytes;
  bad_magic[3] = 0x01;
  try {
    idx::parse_images(bad_magic);
    FAIL();
  } catch (const maid::FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto truncated = bytes;
  truncated.pop_back();
  try {
    idx::parse_images(truncated);
    FAIL();
  } catch (const maid::FormatError& e) {
    EXPECT_EQ(e.offset(), truncated.size());
  }
  auto trailing = bytes;
  trailing.push_back(0);
  try {
    idx::parse_images(trailing);
    FAIL();
  } catch (const maid::FormatError& e) {
    EXPECT_EQ(e.offset(), bytes.size());
  }
  EXPECT_THROW(idx::parse_images(std::vector<std::uint8_t>{0, 0}), maid::FormatError);
  EXPECT_THROW(idx::parse_labels(bytes), maid::FormatError);
  EXPECT_THROW(idx::parse_images(header(0x00000803, {0xFFFFFFFF, 0xFFFF, 0xFFFF})), maid::FormatError);
}

TEST(Idx, FileSetRoundTripAndCountMismatch) {
  const auto dir = std::filesystem::temp_directory_path() / "maid_idx_test";
  std::filesystem::create_directories(dir);
  maid::AssuranceSet set{{Image(3, 3, 1.0), Image(3, 3, 0.0)}, {4, 5}};
  idx::write_set(set, dir / "a-images.idx", dir / "a-labels.idx");
  EXPECT_EQ(idx::read_set(dir / "a-images.idx", dir / "a-labels.idx"), set);
  idx::write_labels(dir / "b-labels.idx", {1});
  EXPECT_THROW(idx::read_set(dir / "a-images.idx", dir / "b-labels.idx"), maid::FormatError);
  EXPECT_THROW(idx::read_images(dir / "missing.idx"), maid::IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
