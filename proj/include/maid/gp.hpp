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

// Exact Gaussian-process regression over normalized distortion coordinates.
//
// Squared-exponential kernel with one lengthscale per input dimension, a
// constant prior mean equal to the sample mean of the targets, and a Cholesky
// factor that can be extended one observation at a time.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "maid/errors.hpp"

namespace maid::gp {

inline constexpr double kInitialJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-4;

struct KernelParams {
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 0.0;

  std::size_t dim() const { return lengthscales.size(); }

  void validate() const {
    if (lengthscales.empty()) throw InputError("kernel needs at least one lengthscale");
    for (double l : lengthscales) {
      if (!(l > 0.0) || !std::isfinite(l)) throw InputError("lengthscales must be positive and finite");
    }
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
      throw InputError("signal_variance must be positive");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
      throw InputError("noise_variance must be non-negative");
  }

  bool operator==(const KernelParams&) const = default;
};

/// Fallback used when there are too few observations to fit hyperparameters.
inline KernelParams default_kernel(std::size_t dim, std::span<const double> targets) {
  KernelParams p;
  p.lengthscales.assign(dim, 0.2);
  double var = 0.0;
  if (targets.size() >= 2) {
    double mean = 0.0;
    for (double y : targets) mean += y;
    mean /= static_cast<double>(targets.size());
    for (double y : targets) var += (y - mean) * (y - mean);
    var /= static_cast<double>(targets.size() - 1);
  }
  p.signal_variance = std::max(var, 1e-4);
  p.noise_variance = 1e-4;
  return p;
}

inline double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b, const KernelParams& p) {
  if (a.size() != b.size() || static_cast<std::size_t>(a.size()) != p.dim())
    throw InputError("kernel_eval: dimension mismatch");
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double d = (a[j] - b[j]) / p.lengthscales[static_cast<std::size_t>(j)];
    r2 += d * d;
  }
  return p.signal_variance * std::exp(-0.5 * r2);
}

/// Cross-covariance between the rows of `a` and the rows of `b`.
inline Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    const KernelParams& p) {
  if (a.cols() != b.cols() || static_cast<std::size_t>(a.cols()) != p.dim())
    throw InputError("cross_kernel: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> ls(p.lengthscales.data(), a.cols());
  const Eigen::MatrixXd as = a.array().rowwise() / ls.transpose().array();
  const Eigen::MatrixXd bs = b.array().rowwise() / ls.transpose().array();
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double r2 = (as.row(i) - bs.row(j)).squaredNorm();
      out(i, j) = p.signal_variance * std::exp(-0.5 * r2);
    }
  }
  return out;
}

struct Prediction {
  double mu = 0.0;
  double sigma2 = 0.0;
  double sigma() const { return std::sqrt(sigma2); }
};

class Posterior;
inline Posterior fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const KernelParams& kernel);
inline Posterior update(const Posterior& gp, const Eigen::VectorXd& c, double y);

/// Immutable GP posterior. Inputs are stored one point per row.
class Posterior {
 public:
  std::size_t size() const { return static_cast<std::size_t>(targets_.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs_.cols()); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const KernelParams& kernel() const { return kernel_; }
  double prior_mean() const { return prior_mean_; }
  double jitter() const { return jitter_; }
  /// Lower factor L with L L^T = K + (noise_variance + jitter) I.
  const Eigen::MatrixXd& chol_factor() const { return chol_; }
  /// (K + ...)^{-1} (f - m).
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// L^{-1} (f - m).
  const Eigen::VectorXd& whitened_residual() const { return white_; }
  /// Shared by every posterior derived from one factorization through update().
  std::uint64_t lineage() const { return lineage_; }

  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& c) const {
    if (static_cast<std::size_t>(c.size()) != dim()) throw InputError("predict: dimension mismatch");
    Eigen::VectorXd k(static_cast<Eigen::Index>(size()));
    for (Eigen::Index i = 0; i < k.size(); ++i) k[i] = kernel_eval(inputs_.row(i).transpose(), c, kernel_);
    Prediction out;
    out.mu = prior_mean_ + k.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    out.sigma2 = std::max(0.0, kernel_.signal_variance - v.squaredNorm());
    return out;
  }

 private:
  friend Posterior fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const KernelParams&);
  friend Posterior update(const Posterior&, const Eigen::VectorXd&, double);

  static std::uint64_t next_lineage() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
  }

  void solve_weights() {
    prior_mean_ = targets_.mean();
    const Eigen::VectorXd resid = targets_.array() - prior_mean_;
    white_ = chol_.triangularView<Eigen::Lower>().solve(resid);
    alpha_ = chol_.triangularView<Eigen::Lower>().transpose().solve(white_);
  }

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  KernelParams kernel_;
  double prior_mean_ = 0.0;
  double jitter_ = kInitialJitter;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd white_;
  std::uint64_t lineage_ = 0;
};

namespace detail {

inline void check_targets(const Eigen::VectorXd& targets) {
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (!(targets[i] >= 0.0 && targets[i] <= 1.0))
      throw InputError("GP targets must lie in [0,1], got " + std::to_string(targets[i]));
  }
}

inline bool has_duplicate_rows(const Eigen::MatrixXd& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j)
      if (x.row(i) == x.row(j)) return true;
  return false;
}

/// Cholesky of K + (noise + jitter) I with jitter escalation 1e-8 .. 1e-4.
/// Returns the jitter that succeeded.
inline double factorize(const Eigen::MatrixXd& k, double noise, Eigen::MatrixXd& lower) {
  double jitter = kInitialJitter;
  for (;;) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += noise + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      if (lower.diagonal().minCoeff() > 0.0) return jitter;
    }
    if (jitter >= kMaxJitter * 0.5) {
      throw NumericalError("Cholesky factorization failed at jitter " + std::to_string(jitter), jitter);
    }
    jitter *= 10.0;
  }
}

}  // namespace detail

inline Posterior fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const KernelParams& kernel) {
  kernel.validate();
  if (inputs.rows() < 1) throw InputError("fit needs at least one observation");
  if (inputs.rows() != targets.size()) throw InputError("fit: inputs and targets differ in length");
  if (static_cast<std::size_t>(inputs.cols()) != kernel.dim()) throw InputError("fit: dimension mismatch");
  detail::check_targets(targets);
  if (kernel.noise_variance == 0.0 && detail::has_duplicate_rows(inputs))
    throw NumericalError("kernel matrix is singular: duplicate inputs with zero noise", 0.0);

  Posterior gp;
  gp.inputs_ = inputs;
  gp.targets_ = targets;
  gp.kernel_ = kernel;
  const Eigen::MatrixXd k = cross_kernel(inputs, inputs, kernel);
  gp.jitter_ = detail::factorize(k, kernel.noise_variance, gp.chol_);
  gp.lineage_ = Posterior::next_lineage();
  gp.solve_weights();
  return gp;
}

/// Adds one observation. Extends the factor by one row when the new pivot is
/// positive, otherwise refactorizes from scratch.
inline Posterior update(const Posterior& gp, const Eigen::VectorXd& c, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw InputError("update: target must lie in [0,1]");
  if (static_cast<std::size_t>(c.size()) != gp.dim()) throw InputError("update: dimension mismatch");

  const auto t = static_cast<Eigen::Index>(gp.size());
  Eigen::MatrixXd inputs(t + 1, gp.inputs_.cols());
  inputs.topRows(t) = gp.inputs_;
  inputs.row(t) = c.transpose();
  Eigen::VectorXd targets(t + 1);
  targets.head(t) = gp.targets_;
  targets[t] = y;

  const KernelParams& p = gp.kernel_;
  if (p.noise_variance == 0.0) {
    for (Eigen::Index i = 0; i < t; ++i)
      if (gp.inputs_.row(i) == c.transpose())
        throw NumericalError("kernel matrix is singular: duplicate inputs with zero noise", 0.0);
  }

  Eigen::VectorXd k(t);
  for (Eigen::Index i = 0; i < t; ++i) k[i] = kernel_eval(gp.inputs_.row(i).transpose(), c, p);
  const Eigen::VectorXd l = gp.chol_.triangularView<Eigen::Lower>().solve(k);
  const double pivot2 = p.signal_variance + p.noise_variance + gp.jitter_ - l.squaredNorm();
  if (!(pivot2 > 0.0) || !std::isfinite(pivot2)) return fit(inputs, targets, p);

  Posterior next;
  next.inputs_ = std::move(inputs);
  next.targets_ = std::move(targets);
  next.kernel_ = p;
  next.jitter_ = gp.jitter_;
  next.lineage_ = gp.lineage_;
  next.chol_ = Eigen::MatrixXd::Zero(t + 1, t + 1);
  next.chol_.topLeftCorner(t, t) = gp.chol_;
  next.chol_.block(t, 0, 1, t) = l.transpose();
  next.chol_(t, t) = std::sqrt(pivot2);
  next.solve_weights();
  return next;
}

inline Prediction predict(const Posterior& gp, const Eigen::Ref<const Eigen::VectorXd>& c) { return gp.predict(c); }

/// Exact log marginal likelihood of the mean-centred targets, with the same
/// jitter schedule as fit().
inline double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                      const KernelParams& kernel) {
  kernel.validate();
  const Eigen::VectorXd resid = targets.array() - targets.mean();
  Eigen::MatrixXd lower;
  detail::factorize(cross_kernel(inputs, inputs, kernel), kernel.noise_variance, lower);
  const Eigen::VectorXd w = lower.triangularView<Eigen::Lower>().solve(resid);
  const double t = static_cast<double>(targets.size());
  return -0.5 * w.squaredNorm() - lower.diagonal().array().log().sum() - 0.5 * t * std::log(2.0 * std::numbers::pi);
}

struct HyperSearchOptions {
  std::vector<double> lengthscale_grid{0.1, 0.3, 0.9};
  std::vector<double> noise_ratio_grid{1e-6, 1e-3, 1e-1};
  /// Every start first gets this many L-BFGS iterations ...
  std::size_t screen_iterations = 6;
  /// ... then the best `local_starts` continue for up to max_iterations.
  std::size_t local_starts = 2;
  std::size_t max_iterations = 60;
  double min_lengthscale = 0.01;
  double max_lengthscale = 10.0;
  double min_noise_ratio = 1e-6;
  double max_noise_ratio = 1.0;
};

namespace detail {

// The kernel is written as s * (R + r I). For fixed lengthscales and noise
// ratio r the likelihood is maximized in closed form by
// s = y^T (R + r I)^{-1} y / t, so the search runs over (log l, log r) only.
struct ProfiledCandidate {
  Eigen::VectorXd log_params;  // log lengthscales, then log noise ratio
  double signal_variance = 0.0;
  double lml = -std::numeric_limits<double>::infinity();
};

class ProfiledLikelihood {
 public:
  ProfiledLikelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets)
      : inputs_(inputs), resid_(targets.array() - targets.mean()) {
    const Eigen::Index t = inputs.rows();
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
      const Eigen::ArrayXd col = inputs.col(j).array();
      Eigen::ArrayXXd d(t, t);
      for (Eigen::Index b = 0; b < t; ++b) d.col(b) = (col - col[b]).square();
      sqdiff_.push_back(std::move(d));
    }
  }

  std::size_t dim() const { return sqdiff_.size(); }

  /// Profiled log marginal likelihood; fills `grad` (d/d log_params) when non-null.
  double evaluate(ProfiledCandidate& cand, Eigen::VectorXd* grad = nullptr) const {
    const Eigen::Index t = resid_.size();
    const std::size_t d = dim();
    const double ratio = std::exp(cand.log_params[static_cast<Eigen::Index>(d)]);

    Eigen::ArrayXXd expo = Eigen::ArrayXXd::Zero(t, t);
    for (std::size_t j = 0; j < d; ++j) {
      const double l = std::exp(cand.log_params[static_cast<Eigen::Index>(j)]);
      expo += sqdiff_[j] * (-0.5 / (l * l));
    }
    const Eigen::MatrixXd corr = expo.exp().matrix();
    Eigen::MatrixXd w = corr;
    w.diagonal().array() += ratio;
    Eigen::LLT<Eigen::MatrixXd> llt(w);
    if (llt.info() != Eigen::Success) {
      cand.lml = -std::numeric_limits<double>::infinity();
      return cand.lml;
    }
    const Eigen::VectorXd beta = llt.solve(resid_);
    const double n = static_cast<double>(t);
    cand.signal_variance = std::max(resid_.dot(beta) / n, 1e-12);
    cand.lml = -0.5 * n * std::log(2.0 * std::numbers::pi * cand.signal_variance) - 0.5 * n -
               llt.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(cand.lml)) {
      cand.lml = -std::numeric_limits<double>::infinity();
      return cand.lml;
    }

    if (grad) {
      // d lml = 1/2 tr((beta beta^T / s - W^{-1}) dW)
      const Eigen::MatrixXd winv = llt.solve(Eigen::MatrixXd::Identity(t, t));
      const Eigen::ArrayXXd m =
          (beta * beta.transpose() / cand.signal_variance - winv).array() * corr.array();
      grad->resize(static_cast<Eigen::Index>(d + 1));
      for (std::size_t j = 0; j < d; ++j) {
        const double l = std::exp(cand.log_params[static_cast<Eigen::Index>(j)]);
        (*grad)[static_cast<Eigen::Index>(j)] = 0.5 * (m * sqdiff_[j]).sum() / (l * l);
      }
      (*grad)[static_cast<Eigen::Index>(d)] =
          0.5 * ratio * ((beta.array().square() / cand.signal_variance).sum() - winv.trace());
    }
    return cand.lml;
  }

 private:
  const Eigen::MatrixXd& inputs_;
  Eigen::VectorXd resid_;
  std::vector<Eigen::ArrayXXd> sqdiff_;
};

/// Projected L-BFGS ascent on a box, with Armijo backtracking.
inline ProfiledCandidate ascend(const ProfiledLikelihood& objective, ProfiledCandidate start,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                std::size_t max_iterations) {
  constexpr std::size_t kMemory = 6;
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper).eval(); };

  ProfiledCandidate cur = std::move(start);
  cur.log_params = project(cur.log_params);
  Eigen::VectorXd g;
  objective.evaluate(cur, &g);
  if (!std::isfinite(cur.lml)) return cur;

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    // Two-loop recursion on the negated objective.
    Eigen::VectorXd q = -g;
    std::vector<double> a(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      a[k] = s_hist[k].dot(q) / y_hist[k].dot(s_hist[k]);
      q -= a[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double b = y_hist[k].dot(q) / y_hist[k].dot(s_hist[k]);
      q += (a[k] - b) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(g) <= 0.0) {
      dir = g;
      s_hist.clear();
      y_hist.clear();
    }
    const double dn = dir.norm();
    if (dn > 2.0) dir *= 2.0 / dn;  // at most a factor e^2 per step

    double step = 1.0;
    bool moved = false;
    ProfiledCandidate trial;
    Eigen::VectorXd g_new;
    for (int ls = 0; ls < 20; ++ls, step *= 0.5) {
      trial.log_params = project(cur.log_params + step * dir);
      const Eigen::VectorXd delta = trial.log_params - cur.log_params;
      if (delta.norm() < 1e-10) break;
      objective.evaluate(trial, &g_new);
      if (std::isfinite(trial.lml) && trial.lml >= cur.lml + 1e-4 * g.dot(delta)) {
        moved = true;
        break;
      }
    }
    if (!moved) break;

    const Eigen::VectorXd sk = trial.log_params - cur.log_params;
    const Eigen::VectorXd yk = g - g_new;  // gradient of the negated objective
    const double gain = trial.lml - cur.lml;
    cur = std::move(trial);
    g = g_new;
    if (sk.dot(yk) > 1e-12) {
      s_hist.push_back(sk);
      y_hist.push_back(yk);
      if (s_hist.size() > kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
      }
    }
    if (gain < 1e-7 * std::max(1.0, std::abs(cur.lml))) break;
  }
  return cur;
}

}  // namespace detail

/// Maximizes the exact log marginal likelihood by projected L-BFGS over the
/// per-dimension log lengthscales and the log noise ratio. Every point of a
/// shared-lengthscale x noise-ratio grid (plus an optional warm start) gets a
/// short ascent; the best `local_starts` are then run to convergence.
/// Deterministic; ties go to the lowest candidate index.
inline KernelParams fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                        const HyperSearchOptions& opt = {},
                                        const KernelParams* warm_start = nullptr) {
  const auto dim = static_cast<std::size_t>(inputs.cols());
  std::span<const double> ys(targets.data(), static_cast<std::size_t>(targets.size()));
  if (inputs.rows() < 5) return default_kernel(dim, ys);
  if (inputs.rows() != targets.size()) throw InputError("fit_hyperparameters: inputs and targets differ in length");

  const Eigen::VectorXd resid = targets.array() - targets.mean();
  if (resid.squaredNorm() / static_cast<double>(resid.size()) < 1e-12) return default_kernel(dim, ys);

  const auto n = static_cast<Eigen::Index>(dim + 1);
  Eigen::VectorXd lower(n), upper(n);
  lower.head(n - 1).setConstant(std::log(opt.min_lengthscale));
  upper.head(n - 1).setConstant(std::log(opt.max_lengthscale));
  lower[n - 1] = std::log(opt.min_noise_ratio);
  upper[n - 1] = std::log(opt.max_noise_ratio);

  const detail::ProfiledLikelihood objective(inputs, targets);
  std::vector<detail::ProfiledCandidate> starts;
  for (double l : opt.lengthscale_grid) {
    for (double r : opt.noise_ratio_grid) {
      detail::ProfiledCandidate c;
      c.log_params.resize(n);
      c.log_params.head(n - 1).setConstant(std::log(l));
      c.log_params[n - 1] = std::log(r);
      starts.push_back(std::move(c));
    }
  }
  if (warm_start && warm_start->dim() == dim && warm_start->signal_variance > 0.0) {
    detail::ProfiledCandidate c;
    c.log_params.resize(n);
    for (std::size_t j = 0; j < dim; ++j) c.log_params[static_cast<Eigen::Index>(j)] = std::log(warm_start->lengthscales[j]);
    c.log_params[n - 1] = std::log(std::max(warm_start->noise_variance / warm_start->signal_variance, opt.min_noise_ratio));
    c.log_params = c.log_params.cwiseMax(lower).cwiseMin(upper);
    starts.push_back(std::move(c));
  }
  if (starts.empty()) {
    // No grid and no usable warm start: begin from the documented defaults.
    detail::ProfiledCandidate c;
    c.log_params = Eigen::VectorXd::Constant(n, std::log(0.2));
    c.log_params[n - 1] = std::log(1e-2);
    starts.push_back(std::move(c));
  }
  for (auto& c : starts) c = detail::ascend(objective, std::move(c), lower, upper, opt.screen_iterations);

  std::vector<std::size_t> order(starts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return starts[a].lml > starts[b].lml; });

  detail::ProfiledCandidate best = starts[order.front()];
  const std::size_t n_local = std::min(opt.local_starts, order.size());
  for (std::size_t s = 0; s < n_local; ++s) {
    detail::ProfiledCandidate cur = detail::ascend(objective, starts[order[s]], lower, upper, opt.max_iterations);
    if (cur.lml > best.lml) best = std::move(cur);
  }

  KernelParams out;
  for (std::size_t j = 0; j < dim; ++j) out.lengthscales.push_back(std::exp(best.log_params[static_cast<Eigen::Index>(j)]));
  out.signal_variance = std::max(best.signal_variance, 1e-6);
  out.noise_variance = std::exp(best.log_params[n - 1]) * out.signal_variance;
  return out;
}

}  // namespace maid::gp
