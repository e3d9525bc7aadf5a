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

// Experiment pipeline: evaluation grid, F1 scoring, JSON configuration,
// synthetic-image ingestion, run execution and report persistence.

#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maid/errors.hpp"
#include "maid/idx.hpp"
#include "maid/image.hpp"
#include "maid/lse.hpp"
#include "maid/model.hpp"
#include "maid/search_space.hpp"
#include "maid/surfaces.hpp"

namespace maid::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Grid and scoring

struct EvaluationGrid {
  std::vector<DistortionLevel> points;
  std::vector<double> accuracy;
  std::vector<int> truth;
  double threshold = 0.0;

  std::size_t size() const { return points.size(); }
};

/// Cartesian product of equispaced values per dimension, endpoints included,
/// ordered lexicographically with the first dimension varying slowest.
inline std::vector<DistortionLevel> grid_points(const SearchSpace& space, std::size_t points_per_dim) {
  if (points_per_dim < 2) throw InputError("points_per_dim must be at least 2");
  const std::size_t d = space.dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (total > (std::size_t{1} << 24) / points_per_dim) throw InputError("evaluation grid is too large");
    total *= points_per_dim;
  }
  std::vector<DistortionLevel> out;
  out.reserve(total);
  std::vector<std::size_t> idx(d, 0);
  const double denom = static_cast<double>(points_per_dim - 1);
  for (std::size_t n = 0; n < total; ++n) {
    DistortionLevel level;
    level.values.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& dim = space[j];
      level.values[j] = idx[j] + 1 == points_per_dim ? dim.upper
                                                     : dim.lower + dim.range() * static_cast<double>(idx[j]) / denom;
    }
    out.push_back(std::move(level));
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < points_per_dim) break;
      idx[j] = 0;
    }
  }
  return out;
}

/// One oracle call per grid point, in grid order.
inline EvaluationGrid build_grid(const SearchSpace& space, std::size_t points_per_dim, const lse::AccuracyOracle& oracle,
                                 double threshold) {
  EvaluationGrid grid;
  grid.threshold = threshold;
  grid.points = grid_points(space, points_per_dim);
  grid.accuracy.reserve(grid.points.size());
  grid.truth.reserve(grid.points.size());
  for (const auto& p : grid.points) {
    const double acc = oracle(p);
    grid.accuracy.push_back(acc);
    grid.truth.push_back(acc >= threshold ? 1 : 0);
  }
  return grid;
}

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline F1Score f1_score(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw InputError("f1_score: label vectors differ in length");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
      throw InputError("f1_score: labels must be 0 or 1");
    tp += truth[i] && predicted[i];
    fp += !truth[i] && predicted[i];
    fn += truth[i] && !predicted[i];
  }
  F1Score s;
  s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Configuration

struct FewShotConfig {
  std::size_t per_class = 5;
  std::string synthetic_images;  // empty: no synthetic images
  std::string synthetic_labels;
  double alpha = 0.8;
};

struct ExperimentConfig {
  std::string oracle = "surface";  // surface | model
  std::string surface;
  std::string model;
  std::string assurance_images;
  std::string assurance_labels;
  std::vector<SearchDimension> space = SearchSpace::full().dims();
  std::optional<double> threshold;
  std::optional<double> threshold_below_clean;
  std::size_t budget = 400;
  std::size_t init_t = 20;
  std::uint64_t seed = 0;
  std::size_t candidate_pool_size = 10000;
  std::size_t refit_every = 10;
  std::size_t points_per_dim = 5;
  std::string method = "lse";  // lse | random
  std::optional<FewShotConfig> few_shot;
  /// Directory that relative paths are resolved against.
  fs::path base_dir;

  SearchSpace search_space() const { return SearchSpace(space); }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }

  void validate() const {
    if (oracle != "surface" && oracle != "model") throw ConfigError("oracle must be 'surface' or 'model'");
    if (method != "lse" && method != "random") throw ConfigError("method must be 'lse' or 'random'");
    if (oracle == "surface" && surface.empty()) throw ConfigError("surface oracle needs a 'surface' name");
    if (oracle == "model" && (model.empty() || assurance_images.empty() || assurance_labels.empty()))
      throw ConfigError("model oracle needs 'model', 'assurance_images' and 'assurance_labels'");
    if (threshold.has_value() == threshold_below_clean.has_value())
      throw ConfigError("exactly one of 'threshold' and 'threshold_below_clean' must be set");
    if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) throw ConfigError("threshold must lie in [0,1]");
    if (threshold_below_clean && oracle != "model") throw ConfigError("threshold_below_clean needs the model oracle");
    if (few_shot) {
      if (oracle != "model") throw ConfigError("few_shot needs the model oracle");
      if (few_shot->per_class == 0) throw ConfigError("few_shot.per_class must be positive");
      if (!(few_shot->alpha >= 0.0 && few_shot->alpha <= 1.0)) throw ConfigError("few_shot.alpha must lie in [0,1]");
      if (few_shot->synthetic_images.empty() != few_shot->synthetic_labels.empty())
        throw ConfigError("few_shot synthetic images and labels must be given together");
    }
    if (points_per_dim < 2) throw ConfigError("points_per_dim must be at least 2");
    try {
      (void)search_space();
      lse::AssuranceRunConfig rc;
      rc.budget = budget;
      rc.init_t = init_t;
      rc.candidate_pool_size = candidate_pool_size;
      rc.refit_every = refit_every;
      rc.threshold = threshold.value_or(0.5);
      rc.validate();
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["oracle"] = c.oracle;
  if (!c.surface.empty()) j["surface"] = c.surface;
  if (!c.model.empty()) j["model"] = c.model;
  if (!c.assurance_images.empty()) j["assurance_images"] = c.assurance_images;
  if (!c.assurance_labels.empty()) j["assurance_labels"] = c.assurance_labels;
  json space = json::array();
  for (const auto& d : c.space) space.push_back({{"name", d.name()}, {"lower", d.lower}, {"upper", d.upper}});
  j["space"] = space;
  if (c.threshold) j["threshold"] = *c.threshold;
  if (c.threshold_below_clean) j["threshold_below_clean"] = *c.threshold_below_clean;
  j["budget"] = c.budget;
  j["init_t"] = c.init_t;
  j["seed"] = c.seed;
  j["candidate_pool_size"] = c.candidate_pool_size;
  j["refit_every"] = c.refit_every;
  j["points_per_dim"] = c.points_per_dim;
  j["method"] = c.method;
  if (c.few_shot) {
    json f{{"per_class", c.few_shot->per_class}, {"alpha", c.few_shot->alpha}};
    if (!c.few_shot->synthetic_images.empty()) {
      f["synthetic_images"] = c.few_shot->synthetic_images;
      f["synthetic_labels"] = c.few_shot->synthetic_labels;
    }
    j["few_shot"] = f;
  }
  return j;
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j, fs::path base_dir = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"oracle", "surface", "model", "assurance_images", "assurance_labels",
                                           "space", "threshold", "threshold_below_clean", "budget", "init_t",
                                           "seed", "candidate_pool_size", "refit_every", "points_per_dim",
                                           "method", "few_shot"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");

  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  c.oracle = detail::get_or<std::string>(j, "oracle", c.oracle);
  c.surface = detail::get_or<std::string>(j, "surface", "");
  c.model = detail::get_or<std::string>(j, "model", "");
  c.assurance_images = detail::get_or<std::string>(j, "assurance_images", "");
  c.assurance_labels = detail::get_or<std::string>(j, "assurance_labels", "");
  if (j.contains("space")) {
    const json& s = j.at("space");
    if (!s.is_array()) throw ConfigError("'space' must be an array");
    c.space.clear();
    for (const json& e : s) {
      std::string name;
      std::optional<double> lower, upper;
      if (e.is_string()) {
        name = e.get<std::string>();
      } else if (e.is_object()) {
        name = detail::get_or<std::string>(e, "name", "");
        if (e.contains("lower")) lower = detail::get_or<double>(e, "lower", 0.0);
        if (e.contains("upper")) upper = detail::get_or<double>(e, "upper", 0.0);
      } else {
        throw ConfigError("'space' entries must be names or {name, lower, upper} objects");
      }
      const auto entry = find_distortion(name);
      if (!entry) throw ConfigError("unknown distortion '" + name + "' in 'space'");
      c.space.push_back({entry->kind, lower.value_or(entry->lower), upper.value_or(entry->upper)});
    }
  }
  if (j.contains("threshold")) c.threshold = detail::get_or<double>(j, "threshold", 0.0);
  if (j.contains("threshold_below_clean"))
    c.threshold_below_clean = detail::get_or<double>(j, "threshold_below_clean", 0.0);
  c.budget = detail::get_or<std::size_t>(j, "budget", c.budget);
  c.init_t = detail::get_or<std::size_t>(j, "init_t", c.init_t);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
  c.candidate_pool_size = detail::get_or<std::size_t>(j, "candidate_pool_size", c.candidate_pool_size);
  c.refit_every = detail::get_or<std::size_t>(j, "refit_every", c.refit_every);
  c.points_per_dim = detail::get_or<std::size_t>(j, "points_per_dim", c.points_per_dim);
  c.method = detail::get_or<std::string>(j, "method", c.method);
  if (j.contains("few_shot")) {
    const json& f = j.at("few_shot");
    if (!f.is_object()) throw ConfigError("'few_shot' must be an object");
    FewShotConfig fs_cfg;
    fs_cfg.per_class = detail::get_or<std::size_t>(f, "per_class", fs_cfg.per_class);
    fs_cfg.synthetic_images = detail::get_or<std::string>(f, "synthetic_images", "");
    fs_cfg.synthetic_labels = detail::get_or<std::string>(f, "synthetic_labels", "");
    fs_cfg.alpha = detail::get_or<double>(f, "alpha", fs_cfg.alpha);
    c.few_shot = fs_cfg;
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

/// FNV-1a over the config snapshot with the seed removed; names run directories.
inline std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("seed");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline fs::path run_directory(const fs::path& out, const ExperimentConfig& c) {
  return out / (config_hash(c) + "-s" + std::to_string(c.seed));
}

// ---------------------------------------------------------------------------
// Synthetic images

/// Keeps the generated images whose largest class probability exceeds alpha.
inline AssuranceSet filter_confident(const AssuranceSet& set, const nn::ModelT& model, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0,1]");
  set.validate(model.class_count);
  const std::vector<double> conf = nn::confidences(model, set.images);
  AssuranceSet kept;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (conf[i] > alpha) {
      kept.images.push_back(set.images[i]);
      kept.labels.push_back(set.labels[i]);
    }
  }
  return kept;
}

inline AssuranceSet ingest_synthetic(const fs::path& images, const fs::path& labels, const nn::ModelT& model,
                                     double alpha) {
  return filter_confident(idx::read_set(images, labels), model, alpha);
}

// ---------------------------------------------------------------------------
// Reports

struct GridRow {
  DistortionLevel level;
  int truth = 0;
  int pred = 0;
  double mu = 0.0;
  double sigma = 0.0;

  bool operator==(const GridRow&) const = default;
};

struct AssuranceReport {
  json config;
  std::vector<std::string> dimensions;
  double threshold = 0.0;
  std::vector<GridRow> rows;
  F1Score score;
  std::size_t search_oracle_calls = 0;
  std::size_t grid_oracle_calls = 0;
  std::size_t oracle_set_size = 0;
  std::size_t synthetic_kept = 0;
  double wall_seconds = 0.0;

  std::size_t oracle_calls() const { return search_oracle_calls + grid_oracle_calls; }

  bool equal_ignoring_timing(const AssuranceReport& o) const {
    return config == o.config && dimensions == o.dimensions && threshold == o.threshold && rows == o.rows &&
           score.precision == o.score.precision && score.recall == o.score.recall && score.f1 == o.score.f1 &&
           search_oracle_calls == o.search_oracle_calls && grid_oracle_calls == o.grid_oracle_calls &&
           oracle_set_size == o.oracle_set_size && synthetic_kept == o.synthetic_kept;
  }
};

inline json report_to_json(const AssuranceReport& r) {
  json points = json::array();
  for (const auto& row : r.rows)
    points.push_back({{"level", row.level.values}, {"truth", row.truth}, {"pred", row.pred}, {"mu", row.mu},
                      {"sigma", row.sigma}});
  return json{{"config", r.config},
              {"dimensions", r.dimensions},
              {"threshold", r.threshold},
              {"metrics", {{"precision", r.score.precision}, {"recall", r.score.recall}, {"f1", r.score.f1}}},
              {"oracle_calls",
               {{"search", r.search_oracle_calls}, {"grid", r.grid_oracle_calls}, {"total", r.oracle_calls()}}},
              {"oracle_set_size", r.oracle_set_size},
              {"synthetic_kept", r.synthetic_kept},
              {"points", points},
              {"timing", {{"wall_seconds", r.wall_seconds}}}};
}

inline AssuranceReport report_from_json(const json& j) {
  try {
    AssuranceReport r;
    r.config = j.at("config");
    r.dimensions = j.at("dimensions").get<std::vector<std::string>>();
    r.threshold = j.at("threshold").get<double>();
    const json& m = j.at("metrics");
    r.score = {m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>()};
    r.search_oracle_calls = j.at("oracle_calls").at("search").get<std::size_t>();
    r.grid_oracle_calls = j.at("oracle_calls").at("grid").get<std::size_t>();
    r.oracle_set_size = j.at("oracle_set_size").get<std::size_t>();
    r.synthetic_kept = j.at("synthetic_kept").get<std::size_t>();
    r.wall_seconds = j.at("timing").at("wall_seconds").get<double>();
    for (const json& p : j.at("points")) {
      GridRow row;
      row.level.values = p.at("level").get<std::vector<double>>();
      row.truth = p.at("truth").get<int>();
      row.pred = p.at("pred").get<int>();
      row.mu = p.at("mu").get<double>();
      row.sigma = p.at("sigma").get<double>();
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what(), 0);
  }
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string report_to_csv(const AssuranceReport& r) {
  std::string out;
  for (const auto& d : r.dimensions) out += d + ",";
  out += "truth,pred,mu,sigma\n";
  for (const auto& row : r.rows) {
    for (double v : row.level.values) out += detail::fmt17(v) + ",";
    out += std::to_string(row.truth) + "," + std::to_string(row.pred) + "," + detail::fmt17(row.mu) + "," +
           detail::fmt17(row.sigma) + "\n";
  }
  return out;
}

/// Parses the per-point rows of a CSV report. Errors carry the byte offset of the offending line.
inline std::vector<GridRow> rows_from_csv(const std::string& text, std::size_t dims) {
  std::vector<GridRow> rows;
  std::size_t pos = text.find('\n');
  if (pos == std::string::npos) throw FormatError("CSV report has no header line", 0);
  ++pos;
  while (pos < text.size()) {
    const std::size_t line_start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::vector<std::string> cells;
    std::stringstream ss(text.substr(pos, end - pos));
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != dims + 4) throw FormatError("CSV row has the wrong number of columns", line_start);
    GridRow row;
    try {
      for (std::size_t i = 0; i < dims; ++i) row.level.values.push_back(std::stod(cells[i]));
      row.truth = std::stoi(cells[dims]);
      row.pred = std::stoi(cells[dims + 1]);
      row.mu = std::stod(cells[dims + 2]);
      row.sigma = std::stod(cells[dims + 3]);
    } catch (const std::logic_error&) {
      throw FormatError("CSV row holds a non-numeric cell", line_start);
    }
    rows.push_back(std::move(row));
    pos = end + 1;
  }
  return rows;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes report.json and report.csv into `dir`, creating it if needed.
inline void emit_report(const AssuranceReport& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", report_to_json(r).dump(1) + "\n");
  write_text(dir / "report.csv", report_to_csv(r));
}

inline AssuranceReport load_report(const fs::path& json_path) {
  const std::string text = read_text(json_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  return report_from_json(j);
}

// ---------------------------------------------------------------------------
// Experiment execution

/// Loaded inputs of a model-oracle experiment.
struct ModelInputs {
  nn::ModelT model;
  AssuranceSet assurance;  // the full set, used for grid truth
  AssuranceSet search;     // the set the search oracle evaluates on
  std::size_t synthetic_kept = 0;
};

inline ModelInputs load_model_inputs(const ExperimentConfig& c) {
  auto require = [&](const std::string& p) {
    const fs::path path = c.resolve(p);
    if (!fs::exists(path)) throw ConfigError("file not found: " + path.string());
    return path;
  };
  ModelInputs in;
  in.model = nn::import_model(require(c.model));
  in.assurance = idx::read_set(require(c.assurance_images), require(c.assurance_labels));
  in.assurance.validate(in.model.class_count);
  if (in.assurance.empty()) throw ConfigError("assurance set is empty");
  if (!c.few_shot) {
    in.search = in.assurance;
    return in;
  }
  in.search = take_per_class(in.assurance, c.few_shot->per_class, in.model.class_count);
  if (!c.few_shot->synthetic_images.empty()) {
    const AssuranceSet synth = ingest_synthetic(require(c.few_shot->synthetic_images),
                                                require(c.few_shot->synthetic_labels), in.model, c.few_shot->alpha);
    in.synthetic_kept = synth.size();
    in.search.append(synth);
  }
  return in;
}

inline AssuranceReport run_experiment(const ExperimentConfig& c) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  const SearchSpace space = c.search_space();

  AssuranceReport report;
  report.config = to_json(c);
  for (const auto& d : space.dims()) report.dimensions.push_back(d.name());

  std::optional<ModelInputs> inputs;
  std::optional<BenchmarkSurface> surface;
  lse::AccuracyOracle truth_oracle, search_oracle;
  if (c.oracle == "surface") {
    try {
      surface = benchmark_surface(c.surface, space);
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
    truth_oracle = [&](const DistortionLevel& l) { return (*surface)(l); };
    search_oracle = truth_oracle;
    report.oracle_set_size = 0;
  } else {
    inputs = load_model_inputs(c);
    truth_oracle = [&](const DistortionLevel& l) {
      return nn::evaluate_accuracy(inputs->model, inputs->assurance, space, l);
    };
    search_oracle = [&](const DistortionLevel& l) {
      return nn::evaluate_accuracy(inputs->model, inputs->search, space, l);
    };
    report.oracle_set_size = inputs->search.size();
    report.synthetic_kept = inputs->synthetic_kept;
  }

  double h;
  if (c.threshold) {
    h = *c.threshold;
  } else {
    const double clean = nn::evaluate_accuracy(inputs->model, inputs->assurance, DistortionParams{});
    h = std::clamp(clean - *c.threshold_below_clean, 0.0, 1.0);
  }
  report.threshold = h;

  std::size_t search_calls = 0, grid_calls = 0;
  const lse::AccuracyOracle counted_search = [&](const DistortionLevel& l) {
    ++search_calls;
    return search_oracle(l);
  };
  const lse::AccuracyOracle counted_truth = [&](const DistortionLevel& l) {
    ++grid_calls;
    return truth_oracle(l);
  };

  lse::AssuranceRunConfig rc;
  rc.threshold = h;
  rc.budget = c.budget;
  rc.init_t = c.init_t;
  rc.seed = c.seed;
  rc.candidate_pool_size = c.candidate_pool_size;
  rc.refit_every = c.refit_every;

  const EvaluationGrid grid = build_grid(space, c.points_per_dim, counted_truth, h);
  report.rows.resize(grid.size());
  std::vector<int> pred(grid.size());
  if (c.method == "lse") {
    const lse::AssuranceRun run = lse::run_lse(space, rc, counted_search);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto p = run.predict(grid.points[i]);
      pred[i] = lse::classify_rule(p.mu, p.sigma(), h);
      report.rows[i] = {grid.points[i], grid.truth[i], pred[i], p.mu, p.sigma()};
    }
  } else {
    const lse::RandomBaseline rb = lse::run_random_baseline(space, rc, counted_search);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double mu = rb.nearest(grid.points[i]).accuracy;
      pred[i] = mu >= h ? 1 : 0;
      report.rows[i] = {grid.points[i], grid.truth[i], pred[i], mu, 0.0};
    }
  }
  report.score = f1_score(grid.truth, pred);
  report.search_oracle_calls = search_calls;
  report.grid_oracle_calls = grid_calls;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace maid::harness
