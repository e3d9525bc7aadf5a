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

// Level-set estimation of {c : f(c) >= h} with a GP surrogate and the
// Straddle acquisition, plus the variance-penalized classification rule.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maid/errors.hpp"
#include "maid/gp.hpp"
#include "maid/random.hpp"
#include "maid/search_space.hpp"

namespace maid::lse {

/// 95% two-sided width used by the acquisition.
inline constexpr double kStraddleWidth = 1.96;
/// Width of the conservative band used by classify.
inline constexpr double kClassifyWidth = 2.0;

inline double straddle_score(double mu, double sigma, double h) { return kStraddleWidth * sigma - std::abs(mu - h); }

/// 1 iff mu - 2 sigma >= h.
inline int classify_rule(double mu, double sigma, double h) { return mu - kClassifyWidth * sigma >= h ? 1 : 0; }

/// Index of the highest Straddle score; ties go to the lowest index.
inline std::size_t best_candidate(std::span<const double> mu, std::span<const double> sigma, double h) {
  if (mu.size() != sigma.size() || mu.empty()) throw InputError("best_candidate: bad candidate arrays");
  std::size_t best = 0;
  double best_score = straddle_score(mu[0], sigma[0], h);
  for (std::size_t i = 1; i < mu.size(); ++i) {
    const double s = straddle_score(mu[i], sigma[i], h);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

struct AssuranceRunConfig {
  double threshold = 0.85;
  std::size_t budget = 400;
  std::size_t init_t = 20;
  std::uint64_t seed = 0;
  std::size_t candidate_pool_size = 10000;
  std::size_t refit_every = 10;
  /// Every this many refits the hyperparameter search restarts from the full
  /// start grid; the refits in between only continue from the previous fit.
  std::size_t full_search_every = 5;
  /// Relative step of the coordinate refinement after pool search.
  double refine_step = 0.01;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("threshold must lie in [0,1]");
    if (budget == 0) throw InputError("budget must be positive");
    if (init_t == 0) throw InputError("init_t must be positive");
    if (init_t >= budget) throw InputError("init_t must be smaller than the budget");
    if (candidate_pool_size < 100) throw InputError("candidate_pool_size must be at least 100");
    if (refit_every == 0) throw InputError("refit_every must be positive");
    if (full_search_every == 0) throw InputError("full_search_every must be positive");
  }
};

struct Observation {
  DistortionLevel level;
  double accuracy = 0.0;
  bool operator==(const Observation&) const = default;
};

enum class RunStatus { in_progress, budget_exhausted };

using AccuracyOracle = std::function<double(const DistortionLevel&)>;

/// Raised when the accuracy oracle throws or returns a value outside [0,1].
class OracleFailure : public Error {
 public:
  OracleFailure(const std::string& what, std::vector<Observation> partial)
      : Error(what), partial_history_(std::move(partial)) {}
  const std::vector<Observation>& partial_history() const { return partial_history_; }

 private:
  std::vector<Observation> partial_history_;
};

namespace detail {

/// Posterior quantities over a fixed candidate pool, kept in step with the GP.
///
/// rows_ holds V = L^{-1} K(X, pool). Appending an observation adds one row
/// of V, so each step costs O(t * pool) instead of a full triangular solve.
class CandidateCache {
 public:
  CandidateCache() = default;
  CandidateCache(Eigen::MatrixXd pool, std::size_t capacity)
      : pool_(std::move(pool)), capacity_(capacity), sumsq_(Eigen::VectorXd::Zero(pool_.rows())) {}

  const Eigen::MatrixXd& pool() const { return pool_; }
  std::size_t rows() const { return rows_; }

  void sync(const gp::Posterior& gp) {
    const std::size_t t = gp.size();
    if (gp.lineage() == lineage_ && t == rows_) return;
    if (gp.lineage() == lineage_ && t == rows_ + 1 && t <= capacity_) {
      extend(gp);
      return;
    }
    rebuild(gp);
  }

  /// Posterior mean and standard deviation at every pool point.
  void moments(const gp::Posterior& gp, Eigen::VectorXd& mu, Eigen::VectorXd& sigma) const {
    const auto t = static_cast<Eigen::Index>(rows_);
    mu = (v_.topRows(t).transpose() * gp.whitened_residual()).array() + gp.prior_mean();
    sigma = (gp.kernel().signal_variance - sumsq_.array()).max(0.0).sqrt();
  }

 private:
  void rebuild(const gp::Posterior& gp) {
    const auto t = static_cast<Eigen::Index>(gp.size());
    capacity_ = std::max<std::size_t>(capacity_, gp.size());
    v_.resize(static_cast<Eigen::Index>(capacity_), pool_.rows());
    v_.topRows(t) = gp::cross_kernel(gp.inputs(), pool_, gp.kernel());
    gp.chol_factor().triangularView<Eigen::Lower>().solveInPlace(v_.topRows(t));
    sumsq_ = v_.topRows(t).colwise().squaredNorm().transpose();
    rows_ = gp.size();
    lineage_ = gp.lineage();
  }

  void extend(const gp::Posterior& gp) {
    const auto t = static_cast<Eigen::Index>(rows_);
    const Eigen::MatrixXd& chol = gp.chol_factor();
    const Eigen::MatrixXd newest = gp.inputs().bottomRows(1);
    Eigen::RowVectorXd row = gp::cross_kernel(newest, pool_, gp.kernel());
    if (t > 0) row.noalias() -= chol.block(t, 0, 1, t) * v_.topRows(t);
    row /= chol(t, t);
    v_.row(t) = row;
    sumsq_.array() += row.transpose().array().square();
    rows_ = gp.size();
  }

  Eigen::MatrixXd pool_;
  std::size_t capacity_ = 0;
  Eigen::MatrixXd v_;
  Eigen::VectorXd sumsq_;
  std::size_t rows_ = 0;
  std::uint64_t lineage_ = 0;
};

}  // namespace detail

/// State of one budgeted sampling run. Cheap to move; copies carry the
/// candidate cache.
class AssuranceRun {
 public:
  AssuranceRun(SearchSpace space, AssuranceRunConfig config) : space_(std::move(space)), config_(config) {
    config_.validate();
    Rng rng(derive_seed(config_.seed, 1));
    Eigen::MatrixXd pool(static_cast<Eigen::Index>(config_.candidate_pool_size), static_cast<Eigen::Index>(space_.dim()));
    for (Eigen::Index i = 0; i < pool.rows(); ++i)
      for (Eigen::Index j = 0; j < pool.cols(); ++j) pool(i, j) = rng.uniform();
    cache_ = detail::CandidateCache(std::move(pool), config_.budget);
  }

  const SearchSpace& space() const { return space_; }
  const AssuranceRunConfig& config() const { return config_; }
  const std::vector<Observation>& history() const { return history_; }
  RunStatus status() const { return status_; }
  bool has_model() const { return gp_.has_value(); }
  const gp::Posterior& gp() const {
    if (!gp_) throw StateError("run has no observations yet");
    return *gp_;
  }
  /// Number of hyperparameter fits performed so far.
  std::size_t refits() const { return refits_; }

  /// Records f(c) and conditions the surrogate on it.
  void observe(const DistortionLevel& c, double accuracy) {
    if (status_ == RunStatus::budget_exhausted) throw StateError("observe after the sampling budget is exhausted");
    space_.check(c);
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw InputError("observed accuracy must lie in [0,1]");

    history_.push_back({c, accuracy});
    const Eigen::VectorXd z = space_.normalize(c);
    const std::size_t t = history_.size();
    const bool refit_due =
        !gp_ || t == config_.init_t || (t > config_.init_t && (t - config_.init_t) % config_.refit_every == 0);

    if (refit_due) {
      const auto [x, y] = training_data();
      gp::HyperSearchOptions search;
      const bool warm_only = gp_ && t > config_.init_t && t < config_.budget &&
                             ((t - config_.init_t) / config_.refit_every) % config_.full_search_every != 0;
      if (warm_only) {
        search.lengthscale_grid.clear();
        search.noise_ratio_grid.clear();
      }
      const gp::KernelParams kernel = gp::fit_hyperparameters(x, y, search, gp_ ? &gp_->kernel() : nullptr);
      gp_ = gp::fit(x, y, kernel);
      ++refits_;
    } else {
      gp_ = gp::update(*gp_, z, accuracy);
    }
    if (t >= config_.budget) status_ = RunStatus::budget_exhausted;
  }

  /// Straddle maximizer over the seeded candidate pool, refined by one
  /// coordinate pass of +/- refine_step (normalized) per dimension.
  DistortionLevel suggest_next() {
    if (!gp_) throw StateError("suggest_next needs a fitted GP");
    if (status_ == RunStatus::budget_exhausted) throw StateError("suggest_next after the sampling budget is exhausted");
    cache_.sync(*gp_);
    Eigen::VectorXd mu, sigma;
    cache_.moments(*gp_, mu, sigma);
    const std::size_t best = best_candidate(std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())),
                                            std::span<const double>(sigma.data(), static_cast<std::size_t>(sigma.size())),
                                            config_.threshold);

    Eigen::VectorXd z = cache_.pool().row(static_cast<Eigen::Index>(best)).transpose();
    double best_score = score_at(z);
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      for (double delta : {config_.refine_step, -config_.refine_step}) {
        Eigen::VectorXd trial = z;
        trial[j] = std::clamp(z[j] + delta, 0.0, 1.0);
        if (trial[j] == z[j]) continue;
        const double s = score_at(trial);
        if (s > best_score) {
          best_score = s;
          z = std::move(trial);
          break;
        }
      }
    }
    return space_.denormalize(z);
  }

  gp::Prediction predict(const DistortionLevel& c) const { return gp().predict(space_.normalize(c)); }
  gp::Prediction predict_normalized(const Eigen::Ref<const Eigen::VectorXd>& z) const { return gp().predict(z); }

  int classify(const DistortionLevel& c) const { return classify_normalized(space_.normalize(c)); }

  int classify_normalized(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    const gp::Prediction p = gp().predict(z);
    return classify_rule(p.mu, p.sigma(), config_.threshold);
  }

 private:
  double score_at(const Eigen::VectorXd& z) const {
    const gp::Prediction p = gp_->predict(z);
    return straddle_score(p.mu, p.sigma(), config_.threshold);
  }

  std::pair<Eigen::MatrixXd, Eigen::VectorXd> training_data() const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(history_.size()), static_cast<Eigen::Index>(space_.dim()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(history_.size()));
    for (std::size_t i = 0; i < history_.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = space_.normalize(history_[i].level).transpose();
      y[static_cast<Eigen::Index>(i)] = history_[i].accuracy;
    }
    return {std::move(x), std::move(y)};
  }

  SearchSpace space_;
  AssuranceRunConfig config_;
  std::vector<Observation> history_;
  std::optional<gp::Posterior> gp_;
  RunStatus status_ = RunStatus::in_progress;
  std::size_t refits_ = 0;
  detail::CandidateCache cache_;
};

inline DistortionLevel suggest_next(AssuranceRun& run) { return run.suggest_next(); }

inline AssuranceRun observe(AssuranceRun run, const DistortionLevel& c, double accuracy) {
  run.observe(c, accuracy);
  return run;
}

inline int classify(const AssuranceRun& run, const DistortionLevel& c) { return run.classify(c); }

namespace detail {

inline double call_oracle(const AccuracyOracle& oracle, const DistortionLevel& c,
                          const std::vector<Observation>& history) {
  double value;
  try {
    value = oracle(c);
  } catch (const std::exception& e) {
    throw OracleFailure(std::string("accuracy oracle failed: ") + e.what(), history);
  }
  if (!(value >= 0.0 && value <= 1.0))
    throw OracleFailure("accuracy oracle returned " + std::to_string(value) + ", outside [0,1]", history);
  return value;
}

inline DistortionLevel uniform_level(const SearchSpace& space, Rng& rng) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(space.dim()));
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.uniform();
  return space.denormalize(z);
}

}  // namespace detail

/// init_t uniform draws, then Straddle suggestions until the budget is spent.
inline AssuranceRun run_lse(const SearchSpace& space, const AssuranceRunConfig& config, const AccuracyOracle& oracle) {
  AssuranceRun run(space, config);
  Rng rng(derive_seed(config.seed, 2));
  for (std::size_t i = 0; i < config.init_t; ++i) {
    const DistortionLevel c = detail::uniform_level(space, rng);
    run.observe(c, detail::call_oracle(oracle, c, run.history()));
  }
  while (run.status() == RunStatus::in_progress) {
    const DistortionLevel c = run.suggest_next();
    run.observe(c, detail::call_oracle(oracle, c, run.history()));
  }
  return run;
}

/// Comparison classifier: the whole budget spent uniformly at random, each
/// query labeled by its nearest sampled neighbour (normalized Euclidean).
class RandomBaseline {
 public:
  RandomBaseline(SearchSpace space, double threshold, std::vector<Observation> history)
      : space_(std::move(space)), threshold_(threshold), history_(std::move(history)) {
    if (history_.empty()) throw InputError("random baseline needs at least one sample");
    points_.resize(static_cast<Eigen::Index>(history_.size()), static_cast<Eigen::Index>(space_.dim()));
    for (std::size_t i = 0; i < history_.size(); ++i)
      points_.row(static_cast<Eigen::Index>(i)) = space_.normalize(history_[i].level).transpose();
  }

  const std::vector<Observation>& history() const { return history_; }
  const SearchSpace& space() const { return space_; }

  std::size_t nearest_normalized(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      const double d = (points_.row(i).transpose() - z).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::size_t>(i);
      }
    }
    return best;
  }

  const Observation& nearest(const DistortionLevel& c) const { return history_[nearest_normalized(space_.normalize(c))]; }

  int classify(const DistortionLevel& c) const { return nearest(c).accuracy >= threshold_ ? 1 : 0; }

 private:
  SearchSpace space_;
  double threshold_;
  std::vector<Observation> history_;
  Eigen::MatrixXd points_;
};

inline RandomBaseline run_random_baseline(const SearchSpace& space, const AssuranceRunConfig& config,
                                          const AccuracyOracle& oracle) {
  config.validate();
  Rng rng(derive_seed(config.seed, 3));
  std::vector<Observation> history;
  history.reserve(config.budget);
  for (std::size_t i = 0; i < config.budget; ++i) {
    const DistortionLevel c = detail::uniform_level(space, rng);
    const double acc = detail::call_oracle(oracle, c, history);
    history.push_back({c, acc});
  }
  return RandomBaseline(space, config.threshold, std::move(history));
}

}  // namespace maid::lse
