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

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "maid/digits.hpp"
#include "maid/harness.hpp"

namespace {

namespace fs = std::filesystem;
namespace harness = maid::harness;
using maid::DistortionLevel;
using maid::SearchSpace;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("maid_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Grid, CardinalityEndpointsAndOrder) {
  EXPECT_EQ(harness::grid_points(SearchSpace::full(), 5).size(), 3125u);
  const auto one = harness::grid_points(SearchSpace::from_names({"rotation"}), 2);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[0].values, std::vector<double>{0.0});
  EXPECT_EQ(one[1].values, std::vector<double>{90.0});
  const auto two = harness::grid_points(SearchSpace::from_names({"rotation", "scale"}), 3);
  ASSERT_EQ(two.size(), 9u);
  EXPECT_EQ(two[1].values, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(two[3].values, (std::vector<double>{45.0, 0.7}));
  EXPECT_EQ(two[8].values, (std::vector<double>{90.0, 1.3}));
  EXPECT_THROW(harness::grid_points(SearchSpace::full(), 1), maid::InputError);
}

TEST(Grid, TruthComesFromOneOracleCallPerPoint) {
  const auto space = SearchSpace::full();
  const auto surface = maid::benchmark_surface("plateau", space);
  std::size_t calls = 0;
  const auto grid = harness::build_grid(space, 5, [&](const DistortionLevel& c) {
    ++calls;
    return surface(c);
  }, 0.85);
  EXPECT_EQ(calls, 3125u);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_EQ(grid.truth[i], surface.label(grid.points[i], 0.85));
}

TEST(F1, SubstitutionCases) {
  const auto perfect = harness::f1_score({1, 0, 1, 0}, {1, 0, 1, 0});
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(harness::f1_score({1, 0, 1}, {0, 0, 0}).f1, 0.0);
  const auto s = harness::f1_score({1, 1, 1, 0, 0}, {1, 1, 0, 1, 0});
  EXPECT_NEAR(s.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.f1, 2.0 / 3.0, 1e-15);
  const auto empty = harness::f1_score({0, 0}, {0, 0});
  EXPECT_EQ(empty.precision, 0.0);
  EXPECT_EQ(empty.f1, 0.0);
  EXPECT_THROW(harness::f1_score({1}, {1, 0}), maid::InputError);
  EXPECT_THROW(harness::f1_score({2}, {1}), maid::InputError);
}

TEST(F1, PermutationInvariant) {
  std::mt19937_64 rng(3);
  std::vector<int> t(200), p(200);
  for (int i = 0; i < 200; ++i) {
    t[i] = static_cast<int>(rng() % 2);
    p[i] = static_cast<int>(rng() % 2);
  }
  const auto before = harness::f1_score(t, p);
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> t2(200), p2(200);
  for (int i = 0; i < 200; ++i) {
    t2[i] = t[perm[i]];
    p2[i] = p[perm[i]];
  }
  const auto after = harness::f1_score(t2, p2);
  EXPECT_EQ(before.f1, after.f1);
}

harness::ExperimentConfig surface_config(const std::string& surface, std::size_t budget, std::size_t ppd) {
  harness::ExperimentConfig c;
  c.surface = surface;
  c.threshold = 0.85;
  c.budget = budget;
  c.points_per_dim = ppd;
  c.candidate_pool_size = 1000;
  return c;
}

TEST(Config, ParsesAndValidates) {
  const auto j = nlohmann::json::parse(R"({"oracle": "surface", "surface": "two_lobe", "threshold": 0.85,
      "space": ["rotation", {"name": "scale", "lower": 0.8, "upper": 1.2}], "budget": 120, "seed": 7})");
  const auto c = harness::config_from_json(j);
  EXPECT_EQ(c.space.size(), 2u);
  EXPECT_EQ(c.space[1].lower, 0.8);
  EXPECT_EQ(c.budget, 120u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(harness::to_json(c)["budget"], 120);
  EXPECT_EQ(harness::config_from_json(harness::to_json(c)).space, c.space);

  auto bad = j;
  bad["colour"] = 1;
  EXPECT_THROW(harness::config_from_json(bad), maid::ConfigError);
  bad = j;
  bad.erase("threshold");
  EXPECT_THROW(harness::config_from_json(bad), maid::ConfigError);
  bad = j;
  bad["budget"] = "many";
  EXPECT_THROW(harness::config_from_json(bad), maid::ConfigError);
  bad = j;
  bad["space"] = {"blur"};
  EXPECT_THROW(harness::config_from_json(bad), maid::ConfigError);
  bad = j;
  bad["method"] = "grid";
  EXPECT_THROW(harness::config_from_json(bad), maid::ConfigError);
}

TEST(Config, HashIgnoresSeed) {
  auto a = surface_config("plateau", 100, 3);
  auto b = a;
  b.seed = 9;
  EXPECT_EQ(harness::config_hash(a), harness::config_hash(b));
  EXPECT_NE(harness::run_directory("out", a), harness::run_directory("out", b));
  b.budget = 101;
  EXPECT_NE(harness::config_hash(a), harness::config_hash(b));
}

TEST(Experiment, SurfaceRunCountsOracleCallsAndIsDeterministic) {
  const auto c = surface_config("two_lobe", 60, 3);
  const auto a = harness::run_experiment(c);
  EXPECT_EQ(a.search_oracle_calls, 60u);
  EXPECT_EQ(a.grid_oracle_calls, 243u);
  EXPECT_EQ(a.oracle_calls(), 303u);
  EXPECT_EQ(a.rows.size(), 243u);
  EXPECT_EQ(a.config["budget"], 60);
  const auto b = harness::run_experiment(c);
  EXPECT_TRUE(a.equal_ignoring_timing(b));
  auto ja = harness::report_to_json(a), jb = harness::report_to_json(b);
  ja.erase("timing");
  jb.erase("timing");
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Experiment, RandomMethodUsesNearestSample) {
  auto c = surface_config("radial_bump", 50, 3);
  c.method = "random";
  const auto r = harness::run_experiment(c);
  EXPECT_EQ(r.search_oracle_calls, 50u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.sigma, 0.0);
    EXPECT_EQ(row.pred, row.mu >= 0.85 ? 1 : 0);
  }
}

TEST(Report, JsonAndCsvRoundTrip) {
  const auto r = harness::run_experiment(surface_config("radial_bump", 40, 3));
  const fs::path dir = scratch("report");
  harness::emit_report(r, dir);
  const auto back = harness::load_report(dir / "report.json");
  EXPECT_TRUE(back.equal_ignoring_timing(r));
  EXPECT_EQ(back.wall_seconds, r.wall_seconds);

  const std::string csv = harness::read_text(dir / "report.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.rows.size() + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rotation,scale,translate_x,translate_y,brightness,truth,pred,mu,sigma");
  EXPECT_EQ(harness::rows_from_csv(csv, 5), r.rows);

  // The stored f1 agrees with a recount from the rows.
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& row : back.rows) {
    tp += row.truth && row.pred;
    fp += !row.truth && row.pred;
    fn += row.truth && !row.pred;
  }
  const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  const double rc = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  EXPECT_NEAR(back.score.f1, p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0, 1e-15);

  EXPECT_THROW(harness::rows_from_csv("a,b\n1,2\n", 5), maid::FormatError);
  EXPECT_THROW(harness::emit_report(r, "/proc/maid-cannot-write"), maid::IoError);
  fs::remove_all(dir);
}

class ModelHarness : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("model"));
    const auto train = maid::digits::make_corpus(300, 1);
    const auto assure = maid::digits::make_corpus(200, 2);
    maid::nn::TrainOptions opt;
    opt.epochs = 10;
    model_ = new maid::nn::ModelT(maid::nn::train_model(train, 3, opt));
    maid::nn::export_model(*model_, *dir_ / "model.txt");
    maid::idx::write_set(assure, *dir_ / "assure-images.idx", *dir_ / "assure-labels.idx");
    maid::idx::write_set(maid::AssuranceSet{}, *dir_ / "empty-images.idx", *dir_ / "empty-labels.idx");
    maid::idx::write_set(maid::digits::make_corpus(40, 5), *dir_ / "synth-images.idx", *dir_ / "synth-labels.idx");
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
    delete model_;
  }

  static harness::ExperimentConfig config() {
    harness::ExperimentConfig c;
    c.oracle = "model";
    c.model = "model.txt";
    c.assurance_images = "assure-images.idx";
    c.assurance_labels = "assure-labels.idx";
    c.base_dir = *dir_;
    c.space = SearchSpace::from_names({"rotation", "brightness"}).dims();
    c.threshold_below_clean = 0.05;
    c.budget = 30;
    c.init_t = 10;
    c.points_per_dim = 3;
    c.candidate_pool_size = 500;
    return c;
  }

  static fs::path* dir_;
  static maid::nn::ModelT* model_;
};
fs::path* ModelHarness::dir_ = nullptr;
maid::nn::ModelT* ModelHarness::model_ = nullptr;

TEST_F(ModelHarness, ThresholdBelowCleanAccuracy) {
  const auto r = harness::run_experiment(config());
  const auto assure = maid::idx::read_set(*dir_ / "assure-images.idx", *dir_ / "assure-labels.idx");
  const double clean = maid::nn::evaluate_accuracy(*model_, assure, maid::DistortionParams{});
  EXPECT_NEAR(r.threshold, clean - 0.05, 1e-15);
  EXPECT_EQ(r.oracle_calls(), 30u + 9u);
  EXPECT_EQ(r.oracle_set_size, 200u);
}

TEST_F(ModelHarness, MissingFilesNameThePath) {
  auto c = config();
  c.model = "nope.txt";
  try {
    harness::run_experiment(c);
    FAIL();
  } catch (const maid::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.txt"), std::string::npos);
  }
}

TEST_F(ModelHarness, IngestHonoursAlpha) {
  const auto all = harness::ingest_synthetic(*dir_ / "synth-images.idx", *dir_ / "synth-labels.idx", *model_, 0.0);
  EXPECT_EQ(all.size(), 40u);
  const auto none = harness::ingest_synthetic(*dir_ / "synth-images.idx", *dir_ / "synth-labels.idx", *model_, 1.0);
  EXPECT_EQ(none.size(), 0u);
  const auto some = harness::ingest_synthetic(*dir_ / "synth-images.idx", *dir_ / "synth-labels.idx", *model_, 0.8);
  const auto conf = maid::nn::confidences(*model_, all.images);
  EXPECT_EQ(some.size(), static_cast<std::size_t>(std::count_if(conf.begin(), conf.end(), [](double e) { return e > 0.8; })));
  EXPECT_THROW(harness::ingest_synthetic(*dir_ / "synth-images.idx", *dir_ / "synth-labels.idx", *model_, 1.5),
               maid::InputError);
  EXPECT_THROW(harness::ingest_synthetic(*dir_ / "model.txt", *dir_ / "synth-labels.idx", *model_, 0.5),
               maid::FormatError);
}

TEST_F(ModelHarness, FewShotWithEmptySyntheticEqualsPlainFewShot) {
  auto plain = config();
  plain.few_shot = harness::FewShotConfig{};
  auto with_empty = plain;
  with_empty.few_shot->synthetic_images = "empty-images.idx";
  with_empty.few_shot->synthetic_labels = "empty-labels.idx";
  const auto a = harness::run_experiment(plain);
  const auto b = harness::run_experiment(with_empty);
  EXPECT_EQ(a.oracle_set_size, 50u);
  EXPECT_EQ(b.oracle_set_size, 50u);
  EXPECT_EQ(b.synthetic_kept, 0u);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.score.f1, b.score.f1);
  EXPECT_EQ(a.threshold, b.threshold);
}

TEST_F(ModelHarness, FewShotMergeNeverShrinksTheSet) {
  auto c = config();
  c.few_shot = harness::FewShotConfig{};
  c.few_shot->synthetic_images = "synth-images.idx";
  c.few_shot->synthetic_labels = "synth-labels.idx";
  c.few_shot->alpha = 0.0;
  const auto in = harness::load_model_inputs(c);
  EXPECT_EQ(in.search.size(), 50u + 40u);
  EXPECT_EQ(in.synthetic_kept, 40u);
  EXPECT_EQ(in.assurance.size(), 200u);
}

}  // namespace
