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

// Geometric and photometric distortions of grayscale images.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "maid/errors.hpp"
#include "maid/image.hpp"
#include "maid/parallel.hpp"

namespace maid {

enum class Distortion { rotation, scale, translate_x, translate_y, brightness };

struct DistortionRegistryEntry {
  Distortion kind;
  std::string_view name;
  double lower;
  double upper;
};

inline constexpr std::array<DistortionRegistryEntry, 5> kDistortionRegistry{{
    {Distortion::rotation, "rotation", 0.0, 90.0},
    {Distortion::scale, "scale", 0.7, 1.3},
    {Distortion::translate_x, "translate_x", -0.2, 0.2},
    {Distortion::translate_y, "translate_y", -0.2, 0.2},
    {Distortion::brightness, "brightness", 0.7, 1.3},
}};

inline std::optional<DistortionRegistryEntry> find_distortion(std::string_view name) {
  for (const auto& e : kDistortionRegistry)
    if (e.name == name) return e;
  return std::nullopt;
}

inline const DistortionRegistryEntry& registry_entry(Distortion kind) {
  return kDistortionRegistry[static_cast<std::size_t>(kind)];
}

/// A full distortion setting in native units. Defaults are the identity.
///
/// Rotation is in degrees, counter-clockwise as displayed. Translations are
/// fractions of the image width/height, positive to the right and down.
struct DistortionParams {
  double rotation = 0.0;
  double scale = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double brightness = 1.0;

  double& operator[](Distortion d) {
    switch (d) {
      case Distortion::rotation: return rotation;
      case Distortion::scale: return scale;
      case Distortion::translate_x: return translate_x;
      case Distortion::translate_y: return translate_y;
      case Distortion::brightness: return brightness;
    }
    return brightness;
  }
  double operator[](Distortion d) const { return const_cast<DistortionParams&>(*this)[d]; }

  bool is_geometric_identity() const {
    return rotation == 0.0 && scale == 1.0 && translate_x == 0.0 && translate_y == 0.0;
  }

  void validate() const {
    for (const auto& e : kDistortionRegistry) {
      const double v = (*this)[e.kind];
      if (!(v >= e.lower && v <= e.upper))
        throw InputError(std::string(e.name) + " = " + std::to_string(v) + " outside [" + std::to_string(e.lower) +
                         ", " + std::to_string(e.upper) + "]");
    }
  }

  bool operator==(const DistortionParams&) const = default;
};

/// Applies scale, then rotation about the image centre, then translation, as
/// one inverse-mapped bilinear resample with zero fill; then multiplies
/// intensities by the brightness factor and clamps to [0,1].
inline Image apply_distortion(const Image& img, const DistortionParams& p) {
  p.validate();
  Image out(img.width, img.height);

  if (p.is_geometric_identity()) {
    out.pixels = img.pixels;
  } else {
    const double w = static_cast<double>(img.width);
    const double h = static_cast<double>(img.height);
    const double cx = (w - 1.0) / 2.0;
    const double cy = (h - 1.0) / 2.0;
    const double theta = p.rotation * std::numbers::pi / 180.0;
    const double cs = std::cos(theta) / p.scale;
    const double sn = std::sin(theta) / p.scale;
    const double shift_x = cx + p.translate_x * w;
    const double shift_y = cy + p.translate_y * h;

    const auto iw = static_cast<long>(img.width);
    const auto ih = static_cast<long>(img.height);
    auto fetch = [&](long r, long c) -> double {
      if (r < 0 || c < 0 || r >= ih || c >= iw) return 0.0;
      return img.pixels[static_cast<std::size_t>(r * iw + c)];
    };

    for (std::size_t row = 0; row < img.height; ++row) {
      for (std::size_t col = 0; col < img.width; ++col) {
        const double u = static_cast<double>(col) - shift_x;
        const double v = static_cast<double>(row) - shift_y;
        const double sx = cx + cs * u - sn * v;
        const double sy = cy + sn * u + cs * v;
        const double fx0 = std::floor(sx);
        const double fy0 = std::floor(sy);
        const double fx = sx - fx0;
        const double fy = sy - fy0;
        const auto x0 = static_cast<long>(fx0);
        const auto y0 = static_cast<long>(fy0);
        const double top = (1.0 - fx) * fetch(y0, x0) + fx * fetch(y0, x0 + 1);
        const double bottom = (1.0 - fx) * fetch(y0 + 1, x0) + fx * fetch(y0 + 1, x0 + 1);
        out.pixels[row * img.width + col] = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
      }
    }
  }

  if (p.brightness != 1.0) {
    for (double& v : out.pixels) v = std::clamp(v * p.brightness, 0.0, 1.0);
  }
  return out;
}

/// Distorts every image; labels and order are preserved.
inline AssuranceSet distort_set(const AssuranceSet& set, const DistortionParams& p) {
  p.validate();
  AssuranceSet out;
  out.labels = set.labels;
  out.images.resize(set.images.size());
  parallel_for(set.images.size(), 64, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out.images[i] = apply_distortion(set.images[i], p);
  });
  return out;
}

}  // namespace maid
