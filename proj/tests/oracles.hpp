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

// Independent reference computations used as test oracles. Nothing here calls
// into the library under test.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) throw std::runtime_error("singular system");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

/// log |det A| by elimination.
inline double log_abs_det(Matrix a) {
  const std::size_t n = a.size();
  double acc = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[piv], a[col]);
    acc += std::log(std::abs(a[col][col]));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return acc;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Squared-exponential covariance written out from its definition.
inline double se(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& ls,
                 double signal) {
  double r2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) r2 += (a[j] - b[j]) * (a[j] - b[j]) / (ls[j] * ls[j]);
  return signal * std::exp(-r2 / 2.0);
}

struct DenseGp {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<double> ls;
  double signal;
  double diag;  // noise plus jitter

  Matrix gram() const {
    Matrix k(x.size(), std::vector<double>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) k[i][j] = se(x[i], x[j], ls, signal) + (i == j ? diag : 0.0);
    return k;
  }

  double mean() const {
    double m = 0.0;
    for (double v : y) m += v;
    return m / static_cast<double>(y.size());
  }

  std::pair<double, double> predict(const std::vector<double>& c) const {
    const double m = mean();
    std::vector<double> r(y.size()), k(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      r[i] = y[i] - m;
      k[i] = se(x[i], c, ls, signal);
    }
    const Matrix g = gram();
    const double mu = m + dot(k, solve(g, r));
    const double var = signal - dot(k, solve(g, k));
    return {mu, var};
  }

  double log_marginal() const {
    const double m = mean();
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - m;
    const Matrix g = gram();
    const double n = static_cast<double>(y.size());
    return -0.5 * dot(r, solve(g, r)) - 0.5 * log_abs_det(g) - 0.5 * n * std::log(2.0 * M_PI);
  }
};

/// Rotation counter-clockwise as displayed of a row-major w x h image, by
/// nearest-neighbour lookup on an 8x8 grid of sub-samples per output pixel.
inline std::vector<double> supersampled_rotation(const std::vector<double>& px, std::size_t width,
                                                 std::size_t height, double degrees) {
  const double t = degrees * M_PI / 180.0;
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  std::vector<double> out(px.size(), 0.0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
          const double x = static_cast<double>(c) + (b + 0.5) / 8.0 - w / 2.0;
          const double y = static_cast<double>(r) + (a + 0.5) / 8.0 - h / 2.0;
          // Undo a counter-clockwise turn on a y-down screen.
          const double sx = std::cos(t) * x - std::sin(t) * y + w / 2.0;
          const double sy = std::sin(t) * x + std::cos(t) * y + h / 2.0;
          const long ix = static_cast<long>(std::floor(sx)), iy = static_cast<long>(std::floor(sy));
          if (ix >= 0 && iy >= 0 && ix < static_cast<long>(width) && iy < static_cast<long>(height))
            acc += px[static_cast<std::size_t>(iy) * width + static_cast<std::size_t>(ix)];
        }
      }
      out[r * width + c] = acc / 64.0;
    }
  }
  return out;
}

}  // namespace oracle
