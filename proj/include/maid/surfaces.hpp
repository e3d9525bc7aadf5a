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

// Closed-form accuracy surfaces with known super-level sets, used to exercise
// the sampling loop without images.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "maid/errors.hpp"
#include "maid/search_space.hpp"

namespace maid {

class BenchmarkSurface {
 public:
  enum class Kind { radial_bump, plateau, two_lobe };

  BenchmarkSurface(Kind kind, SearchSpace space) : kind_(kind), space_(std::move(space)) {}

  Kind kind() const { return kind_; }
  const SearchSpace& space() const { return space_; }
  std::string name() const { return std::string(kNames[static_cast<std::size_t>(kind_)]); }

  static constexpr std::array<std::string_view, 3> kNames{"radial_bump", "plateau", "two_lobe"};

  /// Surface value at a normalized point in [0,1]^d.
  double value_normalized(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    switch (kind_) {
      case Kind::radial_bump:
        return std::exp(-(z.array() - 0.5).square().sum() / kBumpWidth);
      case Kind::plateau:
        return in_box(z) ? 1.0 : 0.5;
      case Kind::two_lobe: {
        double best = 0.0;
        for (const auto& lobe : lobes()) best = std::max(best, lobe.amplitude * std::exp(-lobe.distance2(z)));
        return kLobeFloor + (1.0 - kLobeFloor) * best;
      }
    }
    return 0.0;
  }

  double operator()(const DistortionLevel& c) const { return value_normalized(space_.normalize(c)); }

  /// Closed-form membership of {f >= h}, derived from the geometry rather than
  /// by evaluating the surface.
  int label_normalized(const Eigen::Ref<const Eigen::VectorXd>& z, double h) const {
    switch (kind_) {
      case Kind::radial_bump: {
        if (h <= 0.0) return 1;
        if (h > 1.0) return 0;
        return (z.array() - 0.5).square().sum() <= -kBumpWidth * std::log(h) ? 1 : 0;
      }
      case Kind::plateau:
        if (h <= 0.5) return 1;
        if (h > 1.0) return 0;
        return in_box(z) ? 1 : 0;
      case Kind::two_lobe: {
        // f >= h  <=>  some lobe reaches q = (h - floor) / (1 - floor).
        const double q = (h - kLobeFloor) / (1.0 - kLobeFloor);
        if (q <= 0.0) return 1;
        for (const auto& lobe : lobes())
          if (lobe.amplitude >= q && lobe.distance2(z) <= std::log(lobe.amplitude / q)) return 1;
        return 0;
      }
    }
    return 0;
  }

  int label(const DistortionLevel& c, double h) const { return label_normalized(space_.normalize(c), h); }

  /// Radius of the bump's super-level ball; only meaningful for radial_bump.
  static double bump_radius(double h) { return std::sqrt(-kBumpWidth * std::log(h)); }

  static constexpr double kBumpWidth = 0.08;

  /// Value of the two-lobe surface far from both lobes.
  static constexpr double kLobeFloor = 0.5;

  /// Per-dimension box of the plateau, in normalized coordinates. Dimensions
  /// beyond the table reuse the last entry.
  static constexpr std::array<std::array<double, 2>, 5> kPlateauBox{{
      {0.0, 0.375}, {0.125, 0.875}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}};

 private:
  struct Lobe {
    double amplitude;
    std::array<double, 5> centre;
    std::array<double, 5> width;

    double distance2(const Eigen::Ref<const Eigen::VectorXd>& z) const {
      double s = 0.0;
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(j), 4);
        const double d = (z[j] - centre[k]) / width[k];
        s += d * d;
      }
      return s;
    }
  };

  static const std::array<Lobe, 2>& lobes() {
    static const std::array<Lobe, 2> l{{
        {1.0, {0.0, 0.5, 0.5, 0.5, 0.5}, {0.7, 0.8, 0.8, 0.8, 1.5}},
        {0.95, {0.75, 0.25, 0.75, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.8, 1.5}},
    }};
    return l;
  }

  bool in_box(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const auto& b = kPlateauBox[std::min<std::size_t>(static_cast<std::size_t>(j), 4)];
      if (z[j] < b[0] || z[j] > b[1]) return false;
    }
    return true;
  }

  Kind kind_;
  SearchSpace space_;
};

inline BenchmarkSurface benchmark_surface(std::string_view name, const SearchSpace& space) {
  for (std::size_t i = 0; i < BenchmarkSurface::kNames.size(); ++i)
    if (BenchmarkSurface::kNames[i] == name) return BenchmarkSurface(static_cast<BenchmarkSurface::Kind>(i), space);
  throw InputError("unknown benchmark surface '" + std::string(name) + "'");
}

}  // namespace maid
