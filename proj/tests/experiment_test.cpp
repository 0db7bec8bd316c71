// Copyright 2026 The citycd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "citycd/experiment.hpp"
#include "citycd/synthetic.hpp"

namespace citycd {
namespace {

namespace fs = std::filesystem;

const char* kHead =
    "checkins = c.tsv\n"
    "venues = v.tsv\n"
    "train_window = 2012-05-01..2012-10-31\n"
    "test_window = 2012-11-01..2012-11-30\n"
    "targets = Alphaville, Betaburg\n";

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A small planted corpus on disk plus a config pointing at it.
class SmallCorpus : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("citycd-exp-" + std::string(::testing::UnitTest::GetInstance()
                                            ->current_test_info()
                                            ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    auto spec = fixture_spec(3);
    spec.cities = {{"Alphaville", 40.0, 0.0, 0, 40},
                   {"Betaburg", 40.0, 0.5, 0, 30},
                   {"Gammagrad", 40.0, 60.0, 240, 30}};
    spec.shares = {{0, 1, 16}, {0, 2, 1}};
    spec.venues_per_city = 24;
    const auto corpus = make_planted_corpus(spec);
    std::ofstream(dir_ / "c.tsv") << corpus.checkins;
    std::ofstream(dir_ / "v.tsv") << corpus.venues;
  }
  void TearDown() override { fs::remove_all(dir_); }

  ExperimentConfig config(const std::string& extra) const {
    std::istringstream in(std::string(kHead) + extra);
    auto cfg = parse_config(in, dir_);
    cfg.out = dir_ / "out";
    return cfg;
  }

  fs::path dir_;
};

TEST(Config, ParsesSectionsAndDefaults) {
  const auto cfg = parse(std::string(kHead) +
                         "# comment\n; another\n"
                         "strategies = single, ncd:1, pcd:2\n"
                         "recommenders = pop, ub\n"
                         "[recommender ub]\nsimilarity = sj\nk = 10:30:10\n");
  ASSERT_EQ(cfg.strategies.size(), 3u);
  EXPECT_EQ(cfg.strategies[2].str(), "pcd:2");
  EXPECT_EQ(cfg.cutoff, 5u);
  EXPECT_EQ(cfg.seed, 42u);
  const auto* ub = cfg.find_recommender("ub");
  ASSERT_NE(ub, nullptr);
  EXPECT_EQ(ub->size(), 3u);
  EXPECT_EQ(point_str(ub->points().back()), "similarity=sj;k=30");
  EXPECT_EQ(cfg.find_recommender("pop")->size(), 1u);
}

TEST(Config, DefaultRosterHas75Configurations) {
  const auto cfg =
      parse(std::string(kHead) + "recommenders = rnd, pop, avgdis, pgn, ub, ib, hkv\n");
  std::size_t total = 0;
  for (const auto& r : cfg.recommenders) total += r.size();
  EXPECT_EQ(cfg.find_recommender("ub")->size(), 22u);
  EXPECT_EQ(cfg.find_recommender("ib")->size(), 22u);
  EXPECT_EQ(cfg.find_recommender("hkv")->size(), 27u);
  EXPECT_EQ(total, 75u);
}

TEST(Config, RejectsBadInput) {
  const std::string roster = "recommenders = pop\n";
  // Overlapping windows fail before any data is read.
  EXPECT_THROW(parse("checkins = c\nvenues = v\ntrain_window = 2012-05-01..2012-11-05\n"
                     "test_window = 2012-11-01..2012-11-30\ntargets = A\n" + roster),
               ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + roster + "colour = blue\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + roster + "cutoff = 5\ncutoff = 10\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + roster + "cutoff = five\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + roster + "[recommender ub]\nk = 5\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + "recommenders = ub\n[recommender ub]\nk = \n"),
               ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + "recommenders = ub\n[recommender ub]\nq = 1\n"),
               ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + "recommenders = ub, ub\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + "recommenders = svd\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead) + roster + "strategies = ncd:0\n"), ConfigError);
  EXPECT_THROW(parse(std::string(kHead)), ConfigError);
}

TEST(Config, ExpandValues) {
  const AxisSpec k{"k", ValueType::PositiveInt, ""};
  EXPECT_EQ(expand_values(k, "5, 10:40:10"),
            (std::vector<std::string>{"5", "10", "20", "30", "40"}));
  EXPECT_EQ(expand_values(k, "7:7:1"), (std::vector<std::string>{"7"}));
  EXPECT_THROW(expand_values(k, "0"), ConfigError);
  EXPECT_THROW(expand_values(k, "2.5"), ConfigError);
  EXPECT_THROW(expand_values(k, "10:5:1"), ConfigError);
  EXPECT_THROW(expand_values(k, ""), ConfigError);
  const AxisSpec lambda{"lambda", ValueType::NonNegativeReal, ""};
  EXPECT_EQ(expand_values(lambda, "0, 0.5").size(), 2u);
  EXPECT_THROW(expand_values(lambda, "-1"), ConfigError);
  const AxisSpec sim{"similarity", ValueType::Similarity, ""};
  EXPECT_THROW(expand_values(sim, "pearson"), ConfigError);
}

TEST(Config, HashIgnoresOutputAndJobs) {
  auto a = parse(std::string(kHead) + "recommenders = pop\n");
  auto b = a;
  b.out = "elsewhere";
  b.jobs = 4;
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 43;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Optima, ReadFillsMissingAxesAndSkipsOtherRecommenders) {
  const auto cfg = parse(std::string(kHead) + "recommenders = pop, ub\n");
  std::istringstream in(
      "city\trecommender\tparams\n"
      "Alphaville\tub\tk=80\n"
      "Betaburg\tub\tsimilarity=sc;k=20\n"
      "Alphaville\tib\tsimilarity=sj;k=10\n");
  const auto optima = read_optima(in, cfg);
  ASSERT_EQ(optima.size(), 2u);
  EXPECT_EQ(point_str(optima.at({"Alphaville", "ub"})), "similarity=sc;k=80");
  EXPECT_EQ(point_str(optima.at({"Betaburg", "ub"})), "similarity=sc;k=20");

  std::istringstream bad("Alphaville\tub\tk=80;depth=2\n");
  EXPECT_THROW(read_optima(bad, cfg), ConfigError);
  std::istringstream dup("Alphaville\tub\tk=80\nAlphaville\tub\tk=90\n");
  EXPECT_THROW(read_optima(dup, cfg), ConfigError);
}

std::vector<MetricRow> rows(
    std::initializer_list<std::tuple<const char*, const char*, const char*, double>> xs) {
  std::vector<MetricRow> out;
  for (const auto& [city, strategy, rec, v] : xs) {
    out.push_back({city, strategy, rec, "ndcg", 5, v, 10, 0});
  }
  return out;
}

TEST(Tables, MarkersAndDeltas) {
  const auto t = build_result_table(rows({{"A", "single", "pop", 0.2},
                                          {"A", "single", "ub", 0.4},
                                          {"A", "ncd:1", "pop", 0.1},
                                          {"A", "ncd:1", "ub", 0.5}}),
                                    "ndcg");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(t.rows[0].cells[1].best);
  EXPECT_FALSE(t.rows[0].cells[0].delta.has_value());
  const auto& cd = t.rows[1].cells;
  EXPECT_DOUBLE_EQ(*cd[0].delta, -50.0);
  EXPECT_DOUBLE_EQ(*cd[1].delta, 25.0);
  EXPECT_TRUE(cd[0].max_loss);
  EXPECT_TRUE(cd[1].max_gain);
  EXPECT_TRUE(cd[1].best);
}

TEST(Tables, TiesGoToTheFirstColumn) {
  const auto t = build_result_table(rows({{"A", "single", "pop", 0.3},
                                          {"A", "single", "ub", 0.3},
                                          {"A", "ncd:1", "pop", 0.6},
                                          {"A", "ncd:1", "ub", 0.6}}),
                                    "ndcg");
  EXPECT_TRUE(t.rows[0].cells[0].best);
  EXPECT_FALSE(t.rows[0].cells[1].best);
  EXPECT_TRUE(t.rows[1].cells[0].max_gain);
  EXPECT_FALSE(t.rows[1].cells[1].max_gain);
}

TEST(Tables, SingleCellAndUndefinedDelta) {
  auto t = build_result_table(rows({{"A", "single", "pop", 0.3}}), "ndcg");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_TRUE(t.rows[0].cells[0].best);
  EXPECT_FALSE(t.rows[0].cells[0].max_gain);

  t = build_result_table(rows({{"A", "single", "pop", 0.0}, {"A", "pcd:1", "pop", 0.1}}),
                         "ndcg");
  EXPECT_FALSE(t.rows[1].cells[0].delta.has_value());
  std::ostringstream text;
  write_table_text(text, t);
  EXPECT_NE(text.str().find("0.100*"), std::string::npos);
}

TEST_F(SmallCorpus, GridTieKeepsFirstListedPoint) {
  // Both k values exceed the number of users, so the points are identical.
  Experiment ex(config("recommenders = ub\n[recommender ub]\nsimilarity = sj\nk = 900, 500\n"));
  ex.load();
  const auto g = ex.grid_search();
  ASSERT_EQ(g.optima.size(), 2u);
  ASSERT_EQ(g.points.size(), 4u);
  for (const auto& o : g.optima) {
    EXPECT_EQ(point_str(o.params), "similarity=sj;k=900");
    EXPECT_EQ(o.configurations, 2u);
  }
  EXPECT_EQ(g.points[0].report.precision, g.points[1].report.precision);
}

TEST_F(SmallCorpus, SinglePointGridSkipsSearch) {
  Experiment ex(config("recommenders = pop, ub\n[recommender ub]\nsimilarity = sc\nk = 5\n"));
  ex.load();
  const auto g = ex.grid_search();
  EXPECT_TRUE(g.points.empty());
  EXPECT_EQ(g.roster_configurations, 2u);
  for (const auto& o : g.optima) EXPECT_FALSE(o.precision.has_value());
}

TEST_F(SmallCorpus, ModelCacheReusesFits) {
  Experiment ex(config("strategies = single, ncd:1\nrecommenders = pop, pgn\n"));
  ex.load();
  const auto sc = ex.scope(ex.data().targets.front(), Strategy::single());
  auto& f = ex.factory();
  const auto a = f.get(sc, "pop", {});
  const auto b = f.get(sc, "pop", {});
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(f.fits(), 1u);
  EXPECT_EQ(f.hits(), 1u);
  // PGN reuses the cached popularity model.
  (void)f.get(sc, "pgn", {{"similarity", "sj"}, {"k", "100"}});
  EXPECT_EQ(f.fits(), 3u);
  EXPECT_EQ(f.hits(), 2u);
  // Unretained requests are always rebuilt.
  (void)f.get(sc, "pop", {}, false);
  EXPECT_EQ(f.fits(), 4u);
}

TEST_F(SmallCorpus, RerunsAreByteIdentical) {
  auto cfg = config(
      "strategies = single, ncd:1, pcd:1\nrecommenders = rnd, pop, avgdis, ub, hkv\n"
      "[recommender ub]\nk = 5, 20\n"
      "[recommender hkv]\nfactors = 4\nalpha = 1\nlambda = 0.1, 1\n");
  cfg.jobs = 1;
  cfg.out = dir_ / "one";
  run_pipeline(cfg);
  cfg.jobs = 3;
  cfg.out = dir_ / "two";
  run_pipeline(cfg);
  for (const char* f : {"metrics.csv", "gridsearch.csv", "table_ndcg.csv", "optima.tsv",
                        "overlap_train.tsv", "manifest.txt"}) {
    const auto one = slurp(dir_ / "one" / f);
    EXPECT_FALSE(one.empty()) << f;
    EXPECT_EQ(one, slurp(dir_ / "two" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir_ / "one" / "STALE"));
}

TEST_F(SmallCorpus, FailureLeavesStaleMarker) {
  auto cfg = config("recommenders = pop\n");
  cfg.checkins = "missing.tsv";
  EXPECT_THROW(run_pipeline(cfg), DataError);
  ASSERT_TRUE(fs::exists(cfg.out / "STALE"));
  EXPECT_NE(slurp(cfg.out / "STALE").find("missing.tsv"), std::string::npos);
  EXPECT_FALSE(fs::exists(cfg.out / "manifest.txt"));
}

TEST_F(SmallCorpus, UnknownTargetIsAConfigError) {
  auto cfg = config("recommenders = pop\n");
  cfg.targets = {"Atlantis"};
  Experiment ex(cfg);
  EXPECT_THROW(ex.load(), ConfigError);
}

}  // namespace
}  // namespace citycd
