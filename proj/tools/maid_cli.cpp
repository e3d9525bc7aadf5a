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

// maid: command-line front end for the assurance pipeline.
//
//   maid train-model --out DIR [--seed S] [--train-count N] [--assurance-count N]
//   maid build-grid  --config FILE [--points-per-dim K] [--threshold H] --out FILE.csv
//   maid run-assure  --config FILE [--seed S] [--budget I] [--threshold H] [--points-per-dim K] --out DIR
//                    [--few-shot [--per-class K] [--synthetic IMAGES.idx [--synthetic-labels LABELS.idx]] [--alpha A]]
//   maid report      REPORT.json [--format summary|json|csv] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 format error, 1 anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "maid/digits.hpp"
#include "maid/harness.hpp"
#include "maid/idx.hpp"
#include "maid/model.hpp"

namespace fs = std::filesystem;
using namespace maid;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::optional<double> threshold;
  std::optional<std::size_t> points_per_dim;
};

void apply(harness::ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.budget) c.budget = *o.budget;
  if (o.threshold) {
    c.threshold = *o.threshold;
    c.threshold_below_clean.reset();
  }
  if (o.points_per_dim) c.points_per_dim = *o.points_per_dim;
  c.validate();
}

// Pairs "x-images.idx" with "x-labels.idx".
std::string labels_path_for(const std::string& images) {
  const fs::path p(images);
  std::string name = p.filename().string();
  const auto at = name.rfind("images");
  if (at == std::string::npos)
    throw ConfigError("cannot derive a label file name from " + images + "; pass --synthetic-labels");
  name.replace(at, 6, "labels");
  return (p.parent_path() / name).string();
}

void print_summary(const harness::AssuranceReport& r) {
  std::printf("threshold %.4f  points %zu  precision %.4f  recall %.4f  f1 %.4f\n", r.threshold, r.rows.size(),
              r.score.precision, r.score.recall, r.score.f1);
  std::printf("oracle calls: search %zu  grid %zu  total %zu  wall %.1fs\n", r.search_oracle_calls,
              r.grid_oracle_calls, r.oracle_calls(), r.wall_seconds);
}

int train_model(const fs::path& out, std::uint64_t seed, std::size_t train_count, std::size_t assurance_count,
                std::size_t per_class) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string());
  const AssuranceSet train = digits::make_corpus(train_count, derive_seed(seed, 101));
  const AssuranceSet assure = digits::make_corpus(assurance_count, derive_seed(seed, 102));
  const nn::ModelT model = nn::train_model(train, seed);
  nn::export_model(model, out / "model.txt");
  idx::write_set(train, out / "train-images.idx", out / "train-labels.idx");
  idx::write_set(assure, out / "assurance-images.idx", out / "assurance-labels.idx");
  idx::write_set(take_per_class(assure, per_class, digits::kClassCount), out / "few-images.idx", out / "few-labels.idx");
  const double train_acc = nn::evaluate_accuracy(model, train, DistortionParams{});
  const double clean = nn::evaluate_accuracy(model, assure, DistortionParams{});
  std::printf("train accuracy %.4f  held-out accuracy %.4f\n", train_acc, clean);
  std::printf("wrote %s\n", (out / "model.txt").string().c_str());
  return 0;
}

int build_grid(harness::ExperimentConfig c, const Overrides& o, const fs::path& out) {
  apply(c, o);
  const SearchSpace space = c.search_space();
  std::optional<harness::ModelInputs> in;
  std::optional<BenchmarkSurface> surface;
  lse::AccuracyOracle oracle;
  if (c.oracle == "surface") {
    surface = benchmark_surface(c.surface, space);
    oracle = [&](const DistortionLevel& l) { return (*surface)(l); };
  } else {
    in = harness::load_model_inputs(c);
    oracle = [&](const DistortionLevel& l) { return nn::evaluate_accuracy(in->model, in->assurance, space, l); };
  }
  double h;
  if (c.threshold) {
    h = *c.threshold;
  } else {
    h = std::clamp(nn::evaluate_accuracy(in->model, in->assurance, DistortionParams{}) - *c.threshold_below_clean,
                   0.0, 1.0);
  }
  const harness::EvaluationGrid grid = harness::build_grid(space, c.points_per_dim, oracle, h);
  std::string text;
  for (const auto& d : space.dims()) text += d.name() + ",";
  text += "accuracy,truth\n";
  char buf[40];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double v : grid.points[i].values) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      text += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", grid.accuracy[i]);
    text += buf + std::to_string(grid.truth[i]) + "\n";
  }
  harness::write_text(out, text);
  std::size_t positives = 0;
  for (int t : grid.truth) positives += static_cast<std::size_t>(t);
  std::printf("grid %zu points, %zu at or above threshold %.4f\n", grid.size(), positives, h);
  return 0;
}

int run_assure(harness::ExperimentConfig c, const Overrides& o, const fs::path& out) {
  apply(c, o);
  const harness::AssuranceReport r = harness::run_experiment(c);
  const fs::path dir = harness::run_directory(out, c);
  harness::emit_report(r, dir);
  print_summary(r);
  std::printf("report written to %s\n", dir.string().c_str());
  return 0;
}

int report(const fs::path& in, const std::string& format, const std::optional<fs::path>& out) {
  const harness::AssuranceReport r = harness::load_report(in);
  if (format == "summary") {
    print_summary(r);
  } else if (format == "json" || format == "csv") {
    const std::string text =
        format == "json" ? harness::report_to_json(r).dump(1) + "\n" : harness::report_to_csv(r);
    if (out)
      harness::write_text(*out, text);
    else
      std::cout << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model assurance under image distortion"};
  app.require_subcommand(1);

  Overrides o;
  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "Run seed");
    cmd->add_option("--budget", o.budget, "Sampling budget");
    cmd->add_option("--threshold", o.threshold, "Accuracy threshold h")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--points-per-dim", o.points_per_dim, "Evaluation grid resolution")->check(CLI::PositiveNumber);
  };

  std::string config_path, out_path;
  std::uint64_t train_seed = 0;
  std::size_t train_count = 1000, assurance_count = 1000, per_class = 5;
  auto* train = app.add_subcommand("train-model", "Generate the digit corpus and train the model under test");
  train->add_option("--out", out_path, "Output directory")->required();
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--train-count", train_count, "Training images")->check(CLI::PositiveNumber);
  train->add_option("--assurance-count", assurance_count, "Assurance images")->check(CLI::PositiveNumber);
  train->add_option("--per-class", per_class, "Images per class in the few-shot subset")->check(CLI::PositiveNumber);

  auto* grid = app.add_subcommand("build-grid", "Evaluate the oracle on the full grid");
  grid->add_option("--config", config_path, "Experiment config (JSON)")->required();
  grid->add_option("--out", out_path, "Output CSV")->required();
  add_overrides(grid);

  bool few_shot = false;
  std::optional<std::string> synthetic, synthetic_labels;
  std::optional<double> alpha;
  std::optional<std::size_t> few_per_class;
  auto* run = app.add_subcommand("run-assure", "Run level set estimation and score it on the grid");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_path, "Directory for run directories")->required();
  add_overrides(run);
  run->add_flag("--few-shot", few_shot, "Search on a few images per class");
  run->add_option("--per-class", few_per_class, "Images per class with --few-shot")->check(CLI::PositiveNumber);
  run->add_option("--synthetic", synthetic, "IDX images to add to the few-shot set");
  run->add_option("--synthetic-labels", synthetic_labels, "IDX labels for --synthetic");
  run->add_option("--alpha", alpha, "Confidence cutoff for synthetic images")->check(CLI::Range(0.0, 1.0));

  std::string report_path, format = "summary";
  std::optional<fs::path> report_out;
  auto* rep = app.add_subcommand("report", "Print or re-emit a stored report");
  rep->add_option("report", report_path, "report.json")->required();
  rep->add_option("--format", format, "summary, json or csv")->check(CLI::IsMember({"summary", "json", "csv"}));
  rep->add_option("--out", report_out, "Output file for json/csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return train_model(out_path, train_seed, train_count, assurance_count, per_class);
    if (*rep) return report(report_path, format, report_out);

    harness::ExperimentConfig c = harness::load_config(config_path);
    if (*grid) return build_grid(std::move(c), o, out_path);

    if (few_shot) {
      harness::FewShotConfig f = c.few_shot.value_or(harness::FewShotConfig{});
      if (few_per_class) f.per_class = *few_per_class;
      if (alpha) f.alpha = *alpha;
      if (synthetic) {
        f.synthetic_images = fs::absolute(*synthetic).string();
        f.synthetic_labels = fs::absolute(synthetic_labels ? *synthetic_labels : labels_path_for(*synthetic)).string();
      }
      c.few_shot = f;
    } else if (synthetic || alpha || few_per_class) {
      throw ConfigError("--synthetic, --alpha and --per-class need --few-shot");
    }
    return run_assure(std::move(c), o, out_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const InputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
