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

#include <cmath>
#include <random>

#include "maid/surfaces.hpp"

namespace {

using maid::BenchmarkSurface;
using maid::SearchSpace;

std::vector<Eigen::VectorXd> unit_grid(int k) {
  std::vector<Eigen::VectorXd> out;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int c = 0; c < k; ++c)
        for (int d = 0; d < k; ++d)
          for (int e = 0; e < k; ++e) {
            Eigen::VectorXd z(5);
            z << a, b, c, d, e;
            out.push_back(z / (k - 1.0));
          }
  return out;
}

TEST(Surfaces, LabelerAgreesWithThresholdingOnTheGrid) {
  const auto space = SearchSpace::full();
  for (auto name : BenchmarkSurface::kNames) {
    const auto s = maid::benchmark_surface(name, space);
    for (double h : {0.6, 0.85, 0.9}) {
      for (const auto& z : unit_grid(5)) {
        const double f = s.value_normalized(z);
        ASSERT_GE(f, 0.0);
        ASSERT_LE(f, 1.0);
        EXPECT_EQ(s.label_normalized(z, h), f >= h ? 1 : 0) << name << " h=" << h;
        EXPECT_EQ(s.label(space.denormalize(z), h), s.label_normalized(z, h));
      }
    }
  }
}

TEST(Surfaces, RadialBumpLevelSetIsABall) {
  const auto s = maid::benchmark_surface("radial_bump", SearchSpace::full());
  const double r = BenchmarkSurface::bump_radius(0.85);
  EXPECT_NEAR(r, std::sqrt(-0.08 * std::log(0.85)), 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    Eigen::VectorXd z(5);
    for (int j = 0; j < 5; ++j) z[j] = 0.5 + (u(rng) - 0.5) * 0.4;
    const double dist = (z.array() - 0.5).matrix().norm();
    if (std::abs(dist - r) < 1e-9) continue;
    EXPECT_EQ(s.label_normalized(z, 0.85), dist <= r ? 1 : 0);
    EXPECT_NEAR(s.value_normalized(z), std::exp(-dist * dist / 0.08), 1e-12);
  }
}

TEST(Surfaces, PlateauIsABoxIndicator) {
  const auto s = maid::benchmark_surface("plateau", SearchSpace::full());
  for (const auto& z : unit_grid(9)) {
    bool inside = true;
    for (int j = 0; j < 5; ++j) {
      const auto& b = BenchmarkSurface::kPlateauBox[j];
      inside = inside && z[j] >= b[0] && z[j] <= b[1];
    }
    EXPECT_EQ(s.value_normalized(z), inside ? 1.0 : 0.5);
    EXPECT_EQ(s.label_normalized(z, 0.85), inside ? 1 : 0);
  }
}

TEST(Surfaces, EvaluatesInNativeUnits) {
  const auto space = SearchSpace::full();
  const auto s = maid::benchmark_surface("radial_bump", space);
  EXPECT_DOUBLE_EQ(s(maid::DistortionLevel{{45.0, 1.0, 0.0, 0.0, 1.0}}), 1.0);
  EXPECT_THROW(maid::benchmark_surface("saddle", space), maid::InputError);
}

}  // namespace
