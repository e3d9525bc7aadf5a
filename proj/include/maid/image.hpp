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

#include <cstddef>
#include <string>
#include <vector>

#include "maid/errors.hpp"

namespace maid {

/// Grayscale image, row-major, intensities in [0,1].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}
  Image(std::size_t w, std::size_t h, std::vector<double> px) : width(w), height(h), pixels(std::move(px)) {
    if (pixels.size() != w * h) throw InputError("image pixel count does not match its dimensions");
  }

  double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Image&) const = default;
};

/// Labeled images the assuring party can distort and score.
struct AssuranceSet {
  std::vector<Image> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }

  void validate(std::size_t class_count) const {
    if (images.size() != labels.size()) throw InputError("assurance set: images and labels differ in length");
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= class_count)
        throw InputError("assurance set: label " + std::to_string(y) + " out of range");
    }
  }

  void append(const AssuranceSet& other) {
    images.insert(images.end(), other.images.begin(), other.images.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  }

  bool operator==(const AssuranceSet&) const = default;
};

/// First `per_class` images of each class, in original order.
inline AssuranceSet take_per_class(const AssuranceSet& set, std::size_t per_class, std::size_t class_count) {
  AssuranceSet out;
  std::vector<std::size_t> taken(class_count, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto y = static_cast<std::size_t>(set.labels[i]);
    if (y < class_count && taken[y] < per_class) {
      ++taken[y];
      out.images.push_back(set.images[i]);
      out.labels.push_back(set.labels[i]);
    }
  }
  return out;
}

}  // namespace maid
