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

// citycd: command-line front end for the experiment pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "citycd/config.hpp"
#include "citycd/experiment.hpp"

namespace {

using namespace citycd;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> cities;
  std::optional<std::string> strategy;
};

ExperimentConfig load(const Overrides& o) {
  auto cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.out = *o.out;
  if (o.cities) {
    cfg.targets = detail::split_list(*o.cities);
    cfg.top_targets = 0;
  }
  if (o.strategy) {
    cfg.strategies.clear();
    for (const auto& s : detail::split_list(*o.strategy)) {
      cfg.strategies.push_back(Strategy::parse(s));
    }
  }
  cfg.validate();
  return cfg;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_preprocess(const Overrides& o, bool split) {
  const auto cfg = load(o);
  ArtifactWriter w(cfg.out);
  with_artifacts(w, cfg, split ? "split" : "preprocess", [&](ArtifactWriter& out) {
    Dataset d;
    ingest(cfg, d);
    write_preprocess_artifacts(out, d, !split);
    if (split) {
      split_and_partition(cfg, d);
      write_split_artifacts(out, d, true);
    }
    std::fprintf(stderr, "%zu interactions after preprocessing, %zu rejected lines\n",
                 d.cleaned.size(), d.report.rejected.size());
  });
  return 0;
}

int cmd_gridsearch(const Overrides& o) {
  const auto cfg = load(o);
  ArtifactWriter w(cfg.out);
  with_artifacts(w, cfg, "gridsearch", [&](ArtifactWriter& out) {
    const auto presets = run_stage("config", [&] { return load_presets(cfg); });
    Experiment ex(cfg);
    ex.load();
    const auto g = ex.grid_search(presets);
    write_gridsearch_artifacts(out, cfg, g);
    std::fprintf(stderr,
                 "%zu configurations per city in this roster (published total 83 includes "
                 "8 for a recommender outside this toolkit), %zu points evaluated\n",
                 g.roster_configurations, g.points.size());
  });
  return 0;
}

int cmd_run(const Overrides& o) {
  const auto cfg = load(o);
  const auto s = run_pipeline(cfg);
  std::fprintf(stderr, "%zu evaluations, %zu grid points, %zu model fits, %zu cache hits\n",
               s.records.size(), s.grid.points.size(), s.fits, s.cache_hits);
  std::fprintf(stderr, "results in %s\n", cfg.out.string().c_str());
  return 0;
}

int cmd_tables(const Overrides& o) {
  std::filesystem::path out;
  if (o.out) out = *o.out;
  else if (!o.config.empty()) out = load(o).out;
  else throw ConfigError("tables needs --out or --config");
  run_stage("tables", [&] { render_tables(out); });
  return 0;
}

int cmd_overlap(const Overrides& o) {
  const auto cfg = load(o);
  ArtifactWriter w(cfg.out);
  with_artifacts(w, cfg, "overlap", [&](ArtifactWriter& out) {
    Experiment ex(cfg);
    ex.load();
    write_overlap_artifacts(out, cfg, ex.data());
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"City-as-domain venue recommendation experiments"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "experiment config file");
    if (config_required) c->required();
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--cities", o.cities, "comma-separated target cities");
    sub->add_option("--strategy", o.strategy, "single, ncd:N or pcd:N (comma list)");
  };
  auto* preprocess = app.add_subcommand("preprocess", "parse, deduplicate and k-core");
  auto* split = app.add_subcommand("split", "preprocess and split by local date");
  auto* grid = app.add_subcommand("gridsearch", "search parameter grids on single-domain");
  auto* run = app.add_subcommand("run", "full pipeline to result tables");
  auto* tables = app.add_subcommand("tables", "re-render tables from metrics.csv");
  auto* overlap = app.add_subcommand("overlap", "common-user table per strategy");
  for (auto* s : {preprocess, split, grid, run, overlap}) add_common(s, true);
  add_common(tables, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Timer timer;
  try {
    int rc = 0;
    if (*preprocess) rc = cmd_preprocess(o, false);
    else if (*split) rc = cmd_preprocess(o, true);
    else if (*grid) rc = cmd_gridsearch(o);
    else if (*run) rc = cmd_run(o);
    else if (*tables) rc = cmd_tables(o);
    else if (*overlap) rc = cmd_overlap(o);
    std::fprintf(stderr, "done in %.2f s\n", timer.seconds());
    return rc;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
