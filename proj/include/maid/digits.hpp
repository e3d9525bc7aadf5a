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

// Procedural handwritten-style digits on a 28x28 canvas. Each class is a set
// of strokes in a unit glyph box; every sample draws its own slant, size,
// aspect, small rotation, offset, stroke width and per-vertex wobble, then the
// strokes are rasterized with a linear edge falloff and quantized to k/255.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "maid/errors.hpp"
#include "maid/image.hpp"
#include "maid/random.hpp"

namespace maid::digits {

inline constexpr std::size_t kSide = 28;
inline constexpr int kClassCount = 10;

struct Point {
  double x;
  double y;
};

using Stroke = std::vector<Point>;

namespace detail {

inline Stroke arc(Point c, double rx, double ry, double from_deg, double to_deg, int steps = 16) {
  Stroke s;
  s.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    const double t = (from_deg + (to_deg - from_deg) * i / steps) * std::numbers::pi / 180.0;
    s.push_back({c.x + rx * std::cos(t), c.y + ry * std::sin(t)});
  }
  return s;
}

inline Stroke join(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace detail

/// Strokes of a digit in glyph coordinates: x to the right, y downwards, both in [0, 1].
inline std::vector<Stroke> glyph(int digit) {
  using detail::arc;
  using detail::join;
  switch (digit) {
    case 0: return {arc({0.5, 0.5}, 0.27, 0.38, 0, 360, 28)};
    case 1: return {{{0.36, 0.26}, {0.52, 0.12}, {0.52, 0.88}}};
    case 2: return {join(arc({0.5, 0.33}, 0.23, 0.21, 180, 390), Stroke{{0.24, 0.88}, {0.8, 0.88}})};
    case 3: return {arc({0.48, 0.31}, 0.21, 0.19, 200, 450), arc({0.48, 0.69}, 0.23, 0.19, 270, 520)};
    case 4: return {{{0.6, 0.12}, {0.2, 0.64}, {0.84, 0.64}}, {{0.62, 0.3}, {0.62, 0.88}}};
    case 5:
      return {join(Stroke{{0.76, 0.12}, {0.33, 0.12}, {0.3, 0.46}}, arc({0.48, 0.65}, 0.24, 0.23, 235, 515))};
    case 6: return {{{0.68, 0.12}, {0.33, 0.56}}, arc({0.5, 0.67}, 0.2, 0.21, 0, 360, 24)};
    case 7: return {{{0.2, 0.12}, {0.8, 0.12}, {0.44, 0.88}}};
    case 8: return {arc({0.5, 0.3}, 0.18, 0.18, 0, 360, 24), arc({0.5, 0.69}, 0.23, 0.2, 0, 360, 24)};
    case 9: return {arc({0.5, 0.33}, 0.21, 0.21, 0, 360, 24), {{0.71, 0.36}, {0.64, 0.88}}};
    default: throw InputError("digit must be in 0..9");
  }
}

/// Per-sample writing style.
struct Style {
  double scale = 1.0;
  double aspect = 1.0;
  double slant = 0.0;     // horizontal shear per unit of height
  double rotation = 0.0;  // degrees
  double shift_x = 0.0;   // pixels
  double shift_y = 0.0;
  double width = 2.2;     // stroke width in pixels
  double ink = 1.0;
  double wobble = 0.0;    // per-vertex jitter in glyph units
};

inline Style random_style(Rng& rng) {
  Style s;
  s.scale = rng.uniform(0.82, 1.08);
  s.aspect = rng.uniform(0.85, 1.15);
  s.slant = rng.uniform(-0.3, 0.3);
  s.rotation = rng.uniform(-10.0, 10.0);
  s.shift_x = rng.uniform(-1.5, 1.5);
  s.shift_y = rng.uniform(-1.5, 1.5);
  s.width = rng.uniform(1.6, 3.0);
  s.ink = rng.uniform(0.8, 1.0);
  s.wobble = 0.02;
  return s;
}

inline Image render(int digit, const Style& style, Rng& rng) {
  const double box = 20.0 * style.scale;
  const double rad = style.rotation * std::numbers::pi / 180.0;
  const double cr = std::cos(rad), sr = std::sin(rad);
  const double centre = static_cast<double>(kSide) / 2.0;

  std::vector<Stroke> strokes = glyph(digit);
  for (Stroke& s : strokes) {
    for (Point& p : s) {
      const double gx = p.x + style.wobble * rng.normal() - 0.5;
      const double gy = p.y + style.wobble * rng.normal() - 0.5;
      const double x = (gx + style.slant * gy) * style.aspect * box;
      const double y = gy * box;
      p = {centre + style.shift_x + cr * x - sr * y, centre + style.shift_y + sr * x + cr * y};
    }
  }

  Image img(kSide, kSide, 0.0);
  const double half = style.width / 2.0;
  for (std::size_t r = 0; r < kSide; ++r) {
    for (std::size_t c = 0; c < kSide; ++c) {
      const Point px{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
      double d = 1e9;
      for (const Stroke& s : strokes)
        for (std::size_t k = 0; k + 1 < s.size(); ++k) d = std::min(d, detail::segment_distance(px, s[k], s[k + 1]));
      const double v = std::clamp(half + 0.5 - d, 0.0, 1.0) * style.ink;
      img.at(r, c) = std::round(v * 255.0) / 255.0;
    }
  }
  return img;
}

/// `count` samples with labels cycling 0..9, deterministic in `seed`.
inline AssuranceSet make_corpus(std::size_t count, std::uint64_t seed) {
  AssuranceSet set;
  set.images.reserve(count);
  set.labels.reserve(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = static_cast<int>(i % kClassCount);
    const Style style = random_style(rng);
    set.images.push_back(render(digit, style, rng));
    set.labels.push_back(digit);
  }
  return set;
}

}  // namespace maid::digits
