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

#include <Eigen/Dense>

#include <set>
#include <string>
#include <vector>

#include "maid/distortion.hpp"
#include "maid/errors.hpp"

namespace maid {

/// One point of a search space, in the native units of each dimension.
struct DistortionLevel {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const DistortionLevel&) const = default;
};

struct SearchDimension {
  Distortion kind;
  double lower;
  double upper;

  std::string name() const { return std::string(registry_entry(kind).name); }
  double range() const { return upper - lower; }
  bool operator==(const SearchDimension&) const = default;
};

/// Ordered box of distortion ranges. Every GP computation happens on the
/// affine image of this box in [0,1]^d.
class SearchSpace {
 public:
  SearchSpace() = default;

  explicit SearchSpace(std::vector<SearchDimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw InputError("search space needs at least one dimension");
    std::set<Distortion> seen;
    for (const auto& d : dims_) {
      if (!seen.insert(d.kind).second) throw InputError("duplicate search dimension " + d.name());
      const auto& reg = registry_entry(d.kind);
      if (!(d.lower < d.upper)) throw InputError("search dimension " + d.name() + " needs lower < upper");
      if (d.lower < reg.lower || d.upper > reg.upper)
        throw InputError("search dimension " + d.name() + " exceeds its registry domain");
    }
  }

  /// The five registry distortions over their full domains, in registry order.
  static SearchSpace full() {
    std::vector<SearchDimension> dims;
    for (const auto& e : kDistortionRegistry) dims.push_back({e.kind, e.lower, e.upper});
    return SearchSpace(std::move(dims));
  }

  /// Named registry dimensions over their full domains.
  static SearchSpace from_names(const std::vector<std::string>& names) {
    std::vector<SearchDimension> dims;
    for (const auto& n : names) {
      const auto e = find_distortion(n);
      if (!e) throw InputError("unknown distortion '" + n + "'");
      dims.push_back({e->kind, e->lower, e->upper});
    }
    return SearchSpace(std::move(dims));
  }

  std::size_t dim() const { return dims_.size(); }
  const std::vector<SearchDimension>& dims() const { return dims_; }
  const SearchDimension& operator[](std::size_t i) const { return dims_[i]; }

  bool contains(const DistortionLevel& level) const {
    if (level.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (!(level[i] >= dims_[i].lower && level[i] <= dims_[i].upper)) return false;
    return true;
  }

  void check(const DistortionLevel& level) const {
    if (level.size() != dim()) throw InputError("distortion level has the wrong dimension");
    if (!contains(level)) throw InputError("distortion level outside the search space");
  }

  Eigen::VectorXd normalize(const DistortionLevel& level) const {
    if (level.size() != dim()) throw InputError("distortion level has the wrong dimension");
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < dim(); ++i) z[static_cast<Eigen::Index>(i)] = (level[i] - dims_[i].lower) / dims_[i].range();
    return z;
  }

  /// Inverse of normalize; the result is clamped into the box.
  DistortionLevel denormalize(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (static_cast<std::size_t>(z.size()) != dim()) throw InputError("normalized point has the wrong dimension");
    DistortionLevel level;
    level.values.resize(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      const double v = dims_[i].lower + z[static_cast<Eigen::Index>(i)] * dims_[i].range();
      level.values[i] = std::clamp(v, dims_[i].lower, dims_[i].upper);
    }
    return level;
  }

  /// Full distortion setting; dimensions outside the space stay at identity.
  DistortionParams to_params(const DistortionLevel& level) const {
    check(level);
    DistortionParams p;
    for (std::size_t i = 0; i < dim(); ++i) p[dims_[i].kind] = level[i];
    return p;
  }

  bool operator==(const SearchSpace&) const = default;

 private:
  std::vector<SearchDimension> dims_;
};

inline Image apply_distortion(const Image& img, const SearchSpace& space, const DistortionLevel& level) {
  return apply_distortion(img, space.to_params(level));
}

inline AssuranceSet distort_set(const AssuranceSet& set, const SearchSpace& space, const DistortionLevel& level) {
  return distort_set(set, space.to_params(level));
}

}  // namespace maid
