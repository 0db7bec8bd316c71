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

// End-to-end experiment runner: ingest, preprocess, split, build scopes,
// grid-search or load optima, fit, evaluate and publish tables.

#ifndef CITYCD_EXPERIMENT_HPP_
#define CITYCD_EXPERIMENT_HPP_

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "citycd/als.hpp"
#include "citycd/config.hpp"
#include "citycd/cross_domain.hpp"
#include "citycd/evaluation.hpp"
#include "citycd/ingest.hpp"
#include "citycd/parallel.hpp"
#include "citycd/recommenders.hpp"
#include "citycd/tables.hpp"

namespace citycd {

namespace fs = std::filesystem;

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Runs `f`, prefixing any library error with the stage name while keeping
/// its kind. Already-prefixed errors pass through.
template <class F>
auto run_stage(std::string_view stage, F&& f) -> decltype(f()) {
  auto prefixed = [&](const std::exception& e) {
    const std::string what = e.what();
    return what.starts_with("stage ") ? what
                                      : "stage " + std::string(stage) + ": " + what;
  };
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(prefixed(e));
  } catch (const DataError& e) {
    throw DataError(prefixed(e));
  } catch (const NumericalError& e) {
    throw NumericalError(prefixed(e));
  } catch (const InvalidInput& e) {
    throw InvalidInput(prefixed(e));
  } catch (const fs::filesystem_error& e) {
    throw DataError(prefixed(e));
  }
}

/// Writes through a temporary sibling and renames it into place.
inline void write_atomically(const fs::path& path,
                             const std::function<void(std::ostream&)>& fill) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    fill(out);
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string file_stem(std::string_view s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  return in;
}

// ---------------------------------------------------------------------------
// Data

struct Dataset {
  RawCorpus corpus;  // interners only; check-ins are dropped after dedup
  std::shared_ptr<const CityTable> table;
  ParseReport report;
  InteractionSet cleaned;  // deduplicated k-core, local time
  TemporalSplit split;
  std::map<CityId, InteractionSet> full_parts;
  std::map<CityId, InteractionSet> train_parts;
  std::map<CityId, InteractionSet> test_parts;
  std::vector<CityProfile> profiles;       // training partitions
  std::vector<CityProfile> full_profiles;  // before the split
  std::vector<CityId> targets;

  const std::string& city_name(CityId c) const { return table->cities.name(c); }
};

/// Parse, deduplicate and k-core.
inline void ingest(const ExperimentConfig& cfg, Dataset& d) {
  run_stage("parse", [&] {
    auto checkins = open_input(cfg.checkins_path());
    auto venues = open_input(cfg.venues_path());
    auto parsed = parse_corpus(checkins, venues);
    d.corpus = std::move(parsed.corpus);
    d.report = std::move(parsed.report);
  });
  run_stage("preprocess", [&] {
    auto deduped = deduplicate(d.corpus);
    d.corpus.checkins = {};
    d.cleaned = k_core(deduped, cfg.kcore);
    if (d.cleaned.empty()) throw DataError("no interactions survive the k-core");
    d.table = std::make_shared<const CityTable>(d.corpus.table);
  });
}

inline std::vector<CityProfile> restrict_profiles(std::span<const CityProfile> all,
                                                  std::span<const CityId> keep) {
  std::vector<CityProfile> out;
  for (const auto& p : all) {
    if (std::find(keep.begin(), keep.end(), p.city) != keep.end()) out.push_back(p);
  }
  return out;
}

/// Temporal split, city partitions, profiles and target resolution.
inline void split_and_partition(const ExperimentConfig& cfg, Dataset& d) {
  run_stage("split", [&] {
    d.split = temporal_split(d.cleaned, *cfg.train_window, *cfg.test_window);
    if (d.split.train.empty()) throw DataError("training window holds no interactions");
    d.full_parts = partition_by_city(d.cleaned, *d.table);
    d.train_parts = partition_by_city(d.split.train, *d.table);
    d.test_parts = partition_by_city(d.split.test, *d.table);
    d.profiles = build_profiles(d.train_parts, *d.table);
    d.full_profiles = build_profiles(d.full_parts, *d.table);
  });
  run_stage("targets", [&] {
    d.targets.clear();
    if (cfg.top_targets > 0) {
      auto ranked = top_popular_cities(
          d.full_profiles, std::min(cfg.top_targets, d.full_profiles.size()));
      for (CityId c : ranked) {
        if (d.train_parts.contains(c)) d.targets.push_back(c);
      }
      if (d.targets.size() < cfg.top_targets) {
        throw ConfigError("targets = top:" + std::to_string(cfg.top_targets) + " but only " +
                          std::to_string(d.targets.size()) + " cities have training data");
      }
    }
    for (const auto& name : cfg.targets) {
      const auto c = d.table->cities.find(name);
      if (!c) throw ConfigError("unknown target city '" + name + "'");
      if (!d.train_parts.contains(*c)) {
        throw ConfigError("target city '" + name + "' has no training interactions");
      }
      d.targets.push_back(*c);
    }
  });
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset d;
  ingest(cfg, d);
  split_and_partition(cfg, d);
  return d;
}

/// Profiles a strategy selects from: popular strategies use the configured
/// universe, the others every city.
inline std::vector<CityProfile> strategy_profiles(const ExperimentConfig& cfg,
                                                  const Dataset& d,
                                                  std::span<const CityProfile> profiles,
                                                  Strategy s) {
  if (s.kind == Strategy::Kind::Popular && cfg.popular_universe == Universe::Targets) {
    return restrict_profiles(profiles, d.targets);
  }
  return {profiles.begin(), profiles.end()};
}

// ---------------------------------------------------------------------------
// Models

/// Builds recommenders and memoizes them on (scope fingerprint, recommender,
/// parameters); IB also keys on the candidate universe it precomputes.
class ModelFactory {
 public:
  using ModelPtr = std::shared_ptr<const RecommenderModel>;

  ModelFactory(std::shared_ptr<const CityTable> table, std::uint64_t seed,
               fs::path cache_dir = {})
      : table_(std::move(table)), seed_(seed), cache_dir_(std::move(cache_dir)) {}

  /// `retain` keeps the model for later requests; grid points are not kept.
  ModelPtr get(const std::shared_ptr<const TrainingScope>& scope, const std::string& kind,
               const ParamPoint& params, bool retain = true) {
    const std::string key = cache_key(*scope, kind, params);
    if (!retain) return build(scope, kind, params, key);
    std::promise<ModelPtr> promise;
    std::shared_future<ModelPtr> future;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = memo_.find(key);
      if (it != memo_.end()) {
        future = it->second;
        ++hits_;
      } else {
        future = promise.get_future().share();
        memo_.emplace(key, future);
        owner = true;
      }
    }
    if (owner) {
      try {
        promise.set_value(build(scope, kind, params, key));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

  std::size_t fits() const { return fits_; }
  std::size_t hits() const { return hits_; }
  std::size_t disk_hits() const { return disk_hits_; }

 private:
  static std::string cache_key(const TrainingScope& scope, const std::string& kind,
                               const ParamPoint& params) {
    std::string key = hex64(scope.merged_train.fingerprint()) + '|' + kind + '|' +
                      point_str(params);
    if (kind == "ib") {
      Fnv1a h;
      for (VenueId v : scope.target_venues) h.value(v.value);
      key += '|' + hex64(h.digest());
    }
    return key;
  }

  static KnnParams knn_params(const ParamPoint& p) {
    KnnParams k;
    k.similarity = Similarity::parse(find_param(p, "similarity").value());
    k.k = param_size(p, "k");
    return k;
  }

  ModelPtr build(const std::shared_ptr<const TrainingScope>& scope, const std::string& kind,
                 const ParamPoint& p, const std::string& key) {
    ++fits_;
    const std::shared_ptr<const InteractionSet> train(scope, &scope->merged_train);
    if (kind == "rnd") return std::make_shared<RandomModel>(derive_seed(seed_, "rnd"));
    if (kind == "pop") return std::make_shared<PopularityModel>(*train);
    if (kind == "avgdis") return std::make_shared<AvgDisModel>(*train, table_);
    if (kind == "ub") return std::make_shared<UserKnnModel>(train, knn_params(p));
    if (kind == "ib") {
      return std::make_shared<ItemKnnModel>(train, knn_params(p), scope->target_venues);
    }
    if (kind == "pgn") {
      return std::make_shared<PgnModel>(
          get(scope, "pop", {}), std::make_shared<UserKnnModel>(train, knn_params(p)),
          get(scope, "avgdis", {}));
    }
    if (kind == "hkv") return fit_factors(*train, p, key);
    throw ConfigError("unknown recommender '" + kind + "'");
  }

  ModelPtr fit_factors(const InteractionSet& train, const ParamPoint& p,
                       const std::string& key) {
    FactorModelParams params;
    params.factors = param_size(p, "factors");
    params.confidence_alpha = param_real(p, "alpha");
    params.lambda = param_real(p, "lambda");
    params.iterations = param_size(p, "iterations");
    params.tolerance = param_real(p, "tolerance");
    params.seed = derive_seed(seed_, "hkv");
    fs::path file;
    if (!cache_dir_.empty()) {
      Fnv1a h;
      h.text(key);
      h.value(params.seed);
      file = cache_dir_ / ("hkv-" + hex64(h.digest()) + ".bin");
      std::ifstream in(file, std::ios::binary);
      if (in) {
        try {
          auto model = std::make_shared<FactorModel>(FactorModel::load(in));
          ++disk_hits_;
          return model;
        } catch (const DataError&) {
          // unreadable dump: refit and overwrite
        }
      }
    }
    auto model = std::make_shared<FactorModel>(fit_hkv(train, params));
    if (!file.empty()) {
      write_atomically(file, [&](std::ostream& out) { model->save(out); });
    }
    return model;
  }

  std::shared_ptr<const CityTable> table_;
  std::uint64_t seed_;
  fs::path cache_dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<ModelPtr>> memo_;
  std::atomic<std::size_t> fits_{0}, hits_{0}, disk_hits_{0};
};

// ---------------------------------------------------------------------------
// Experiment

struct Optimum {
  std::string city;
  std::string recommender;
  ParamPoint params;
  std::optional<double> precision;  // absent for preset optima
  std::size_t configurations = 1;
};

struct GridPointResult {
  std::string city;
  std::string recommender;
  ParamPoint params;
  MetricReport report;
};

struct GridSearchResult {
  std::vector<Optimum> optima;  // target order, then roster order
  std::vector<GridPointResult> points;
  std::size_t roster_configurations = 0;  // grid points per city
};

struct RunRecord {
  CityId city;
  Strategy strategy;
  std::string recommender;
  ParamPoint params;
  MetricReport report;
};

/// Parses an optima file: city, recommender and params columns (further
/// columns ignored). Missing axes take the configured grid's first value.
inline std::map<std::pair<std::string, std::string>, ParamPoint> read_optima(
    std::istream& in, const ExperimentConfig& cfg) {
  std::map<std::pair<std::string, std::string>, ParamPoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim_eol(line);
    if (text.empty() || text.front() == '#' || text.starts_with("city\t")) continue;
    const auto f = detail::split_tabs(text);
    auto fail = [&](const std::string& why) {
      return ConfigError("optima line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() < 3) throw fail("expected city, recommender, params");
    const std::string kind(f[1]);
    const auto* grid = cfg.find_recommender(kind);
    if (!grid) continue;  // not in this roster
    std::map<std::string, std::string> given;
    if (f[2] != "-") {
      std::string list(f[2]);
      std::replace(list.begin(), list.end(), ';', ',');
      for (const auto& kv : detail::split_list(list)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw fail("bad parameter '" + kv + "'");
        given[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    ParamPoint point;
    const auto& specs = recommender_kinds().at(kind);
    for (std::size_t a = 0; a < grid->axes.size(); ++a) {
      auto it = given.find(grid->axes[a].key);
      if (it == given.end()) {
        point.emplace_back(grid->axes[a].key, grid->axes[a].values.front());
      } else {
        point.emplace_back(it->first, expand_values(specs[a], it->second).front());
        given.erase(it);
      }
    }
    if (!given.empty()) throw fail("unknown parameter '" + given.begin()->first + "'");
    if (!out.emplace(std::pair{std::string(f[0]), kind}, point).second) {
      throw fail("duplicate entry for " + std::string(f[0]) + "/" + kind);
    }
  }
  return out;
}

inline void write_optima_tsv(std::ostream& out, std::span<const Optimum> optima) {
  out << "city\trecommender\tparams\tprecision\tconfigurations\n";
  for (const auto& o : optima) {
    out << o.city << '\t' << o.recommender << '\t' << point_str(o.params) << '\t'
        << (o.precision ? format_real(*o.precision) : "preset") << '\t'
        << o.configurations << '\n';
  }
}

/// City by recommender grid of the chosen values of every multi-valued axis.
inline void write_optima_text(std::ostream& out, std::span<const Optimum> optima,
                              const ExperimentConfig& cfg) {
  std::vector<const RecommenderGrid*> cols;
  for (const auto& r : cfg.recommenders) {
    if (r.size() > 1) cols.push_back(&r);
  }
  std::vector<std::string> cities;
  for (const auto& o : optima) {
    if (std::find(cities.begin(), cities.end(), o.city) == cities.end()) {
      cities.push_back(o.city);
    }
  }
  std::vector<std::vector<std::string>> grid{{"city"}};
  for (const auto* c : cols) {
    std::string head = c->kind + " (";
    bool first = true;
    for (const auto& a : c->axes) {
      if (a.values.size() < 2) continue;
      head += (first ? "" : ", ") + a.key;
      first = false;
    }
    grid[0].push_back(head + ")");
  }
  for (const auto& city : cities) {
    std::vector<std::string> line{city};
    for (const auto* c : cols) {
      std::string cell = "-";
      for (const auto& o : optima) {
        if (o.city != city || o.recommender != c->kind) continue;
        cell.clear();
        for (const auto& a : c->axes) {
          if (a.values.size() < 2) continue;
          auto v = find_param(o.params, a.key).value();
          if (a.key == "similarity") {
            for (auto& ch : v) ch = char(std::toupper(static_cast<unsigned char>(ch)));
          }
          cell += (cell.empty() ? "" : ", ") + v;
        }
      }
      line.push_back(cell);
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& l : grid) {
    for (std::size_t c = 0; c < l.size(); ++c) width[c] = std::max(width[c], l[c].size());
  }
  for (const auto& l : grid) {
    std::string text;
    for (std::size_t c = 0; c < l.size(); ++c) {
      text += l[c];
      if (c + 1 < l.size()) text += std::string(width[c] - l[c].size() + 2, ' ');
    }
    out << text << '\n';
  }
}

/// Holds the loaded data, the scopes and the model cache of one run.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const ExperimentConfig& config() const { return cfg_; }

  void load() {
    data_ = load_dataset(cfg_);
    factory_ = std::make_unique<ModelFactory>(
        data_.table, cfg_.seed, cfg_.cache.empty() ? fs::path() : fs::path(cfg_.cache));
  }

  const Dataset& data() const { return data_; }
  ModelFactory& factory() { return *factory_; }

  std::shared_ptr<const TrainingScope> scope(CityId target, Strategy s) {
    const auto key = std::pair{target.value, s.str()};
    std::lock_guard lock(scope_mutex_);
    auto it = scopes_.find(key);
    if (it != scopes_.end()) return it->second;
    const auto profiles = strategy_profiles(cfg_, data_, data_.profiles, s);
    auto built = std::make_shared<const TrainingScope>(
        build_scope(target, s, data_.train_parts, profiles));
    scopes_.emplace(key, built);
    return built;
  }

  /// Test interactions of the target; empty when the city has none.
  const InteractionSet& test_of(CityId target) const {
    auto it = data_.test_parts.find(target);
    return it == data_.test_parts.end() ? empty_ : it->second;
  }

  MetricReport evaluate_model(const RecommenderModel& model, const TrainingScope& scope,
                              std::size_t jobs = 1) const {
    return evaluate(model, {scope, test_of(scope.target), cfg_.cutoff}, jobs);
  }

  /// Every grid point of every multi-point recommender without a preset, on
  /// the single-domain scope of each target; best P@cutoff wins, first
  /// listed on ties.
  GridSearchResult grid_search(
      const std::map<std::pair<std::string, std::string>, ParamPoint>& presets = {}) {
    GridSearchResult result;
    for (const auto& r : cfg_.recommenders) result.roster_configurations += r.size();
    struct Task {
      std::size_t optimum;
      ParamPoint params;
    };
    std::vector<Task> tasks;
    for (CityId t : data_.targets) {
      const auto& name = data_.city_name(t);
      for (const auto& r : cfg_.recommenders) {
        Optimum o{name, r.kind, {}, std::nullopt, r.size()};
        auto preset = presets.find({name, r.kind});
        const auto points = r.points();
        if (preset != presets.end()) {
          o.params = preset->second;
        } else if (points.size() == 1) {
          o.params = points.front();
        } else {
          for (const auto& p : points) tasks.push_back({result.optima.size(), p});
        }
        result.optima.push_back(std::move(o));
      }
    }
    std::vector<MetricReport> reports(tasks.size());
    run_stage("gridsearch", [&] {
      parallel_for(tasks.size(), cfg_.jobs, [&](std::size_t i) {
        const auto& o = result.optima[tasks[i].optimum];
        const auto sc = scope(*data_.table->cities.find(o.city), Strategy::single());
        const auto model = factory_->get(sc, o.recommender, tasks[i].params, false);
        reports[i] = evaluate_model(*model, *sc);
      });
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      auto& o = result.optima[tasks[i].optimum];
      if (!o.precision || reports[i].precision > *o.precision) {
        o.precision = reports[i].precision;
        o.params = tasks[i].params;
      }
      result.points.push_back({o.city, o.recommender, tasks[i].params, std::move(reports[i])});
    }
    return result;
  }

  /// Fits and evaluates every (target, strategy, recommender) with the given
  /// optima. Records come back in target, strategy, roster order.
  std::vector<RunRecord> evaluate_all(std::span<const Optimum> optima) {
    std::vector<RunRecord> records;
    for (CityId t : data_.targets) {
      for (const auto& s : cfg_.strategies) {
        for (const auto& r : cfg_.recommenders) {
          const Optimum* chosen = nullptr;
          for (const auto& o : optima) {
            if (o.city == data_.city_name(t) && o.recommender == r.kind) chosen = &o;
          }
          if (!chosen) {
            throw ConfigError("no parameters for " + r.kind + " in " + data_.city_name(t));
          }
          records.push_back({t, s, r.kind, chosen->params, {}});
        }
      }
    }
    run_stage("scopes", [&] {
      for (CityId t : data_.targets) {
        for (const auto& s : cfg_.strategies) (void)scope(t, s);
      }
    });
    run_stage("evaluate", [&] {
      parallel_for(records.size(), cfg_.jobs, [&](std::size_t i) {
        auto& rec = records[i];
        const auto sc = scope(rec.city, rec.strategy);
        const auto model = factory_->get(sc, rec.recommender, rec.params);
        rec.report = evaluate_model(*model, *sc);
      });
    });
    return records;
  }

 private:
  ExperimentConfig cfg_;
  Dataset data_;
  std::unique_ptr<ModelFactory> factory_;
  std::mutex scope_mutex_;
  std::map<std::pair<std::uint32_t, std::string>, std::shared_ptr<const TrainingScope>>
      scopes_;
  InteractionSet empty_;
};

// ---------------------------------------------------------------------------
// Artifacts

/// Tracks what a run publishes so the manifest can list it.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& rel, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream buf;
    fill(buf);
    const std::string text = buf.str();
    write_atomically(root_ / rel, [&](std::ostream& out) { out << text; });
    Fnv1a h;
    h.bytes(text.data(), text.size());
    written_.emplace_back(rel, h.digest());
  }

  const fs::path& root() const { return root_; }
  const std::vector<std::pair<std::string, std::uint64_t>>& written() const {
    return written_;
  }

  void manifest(const ExperimentConfig& cfg, std::string_view command) {
    write_atomically(root_ / "manifest.txt", [&](std::ostream& out) {
      out << "command=" << command << '\n'
          << "config_hash=" << hex64(cfg.hash()) << '\n'
          << "seed=" << cfg.seed << '\n';
      for (const auto& [rel, digest] : written_) {
        out << "artifact=" << rel << '\t' << hex64(digest) << '\n';
      }
      out << "--- config\n" << cfg.canonical();
    });
  }

  /// Marks the directory as in progress until `finish` clears it; a failure
  /// leaves the marker with the cause.
  void begin() {
    fs::create_directories(root_);
    std::ofstream(root_ / "STALE") << "in progress\n";
  }
  void fail(std::string_view what) { std::ofstream(root_ / "STALE") << what << '\n'; }
  void finish() { fs::remove(root_ / "STALE"); }

 private:
  fs::path root_;
  std::vector<std::pair<std::string, std::uint64_t>> written_;
};

/// Runs `body` with the stale-marker protocol around it.
inline void with_artifacts(ArtifactWriter& w, const ExperimentConfig& cfg,
                           std::string_view command,
                           const std::function<void(ArtifactWriter&)>& body) {
  w.begin();
  try {
    body(w);
    w.manifest(cfg, command);
  } catch (const std::exception& e) {
    w.fail(e.what());
    throw;
  }
  w.finish();
}

inline void write_stats_table(std::ostream& out, const Dataset& d) {
  out << "set\tusers\titems\tcheckins\tdensity\tcheckins_per_user\tcheckins_per_item\n";
  auto row = [&](const std::string& name, const InteractionSet& s) {
    const auto st = corpus_stats(s);
    out << name << '\t' << st.users << '\t' << st.items << '\t' << st.checkins << '\t'
        << format_real(st.density) << '\t' << format_real(st.checkins_per_user) << '\t'
        << format_real(st.checkins_per_item) << '\n';
  };
  row("full", d.cleaned);
  row("train", d.split.train);
  row("test", d.split.test);
  for (CityId t : d.targets) {
    const auto& name = d.city_name(t);
    row(name + "/train", d.train_parts.at(t));
    auto test = d.test_parts.find(t);
    row(name + "/test", test == d.test_parts.end() ? InteractionSet() : test->second);
  }
}

inline void write_preprocess_artifacts(ArtifactWriter& w, const Dataset& d,
                                       bool dump_interactions) {
  w.write("preprocess/parse_report.txt",
          [&](std::ostream& o) { write_parse_report(o, d.report); });
  w.write("preprocess/stats.txt",
          [&](std::ostream& o) { write_stats(o, corpus_stats(d.cleaned)); });
  if (dump_interactions) {
    w.write("preprocess/interactions.tsv",
            [&](std::ostream& o) { write_interactions(o, d.cleaned, d.corpus); });
  }
}

inline void write_split_artifacts(ArtifactWriter& w, const Dataset& d,
                                  bool dump_interactions) {
  w.write("split/stats.tsv", [&](std::ostream& o) { write_stats_table(o, d); });
  if (dump_interactions) {
    w.write("split/train.tsv",
            [&](std::ostream& o) { write_interactions(o, d.split.train, d.corpus); });
    w.write("split/test.tsv",
            [&](std::ostream& o) { write_interactions(o, d.split.test, d.corpus); });
  }
}

/// One row per cross-domain strategy, one column per target; cells are the
/// mean common-user percentage.
inline void write_overlap(std::ostream& out, const ExperimentConfig& cfg, const Dataset& d,
                          std::span<const CityProfile> profiles) {
  out << "strategy";
  for (CityId t : d.targets) out << '\t' << d.city_name(t);
  out << '\n';
  for (const auto& s : cfg.strategies) {
    if (!s.cross_domain()) continue;
    const auto pool = strategy_profiles(cfg, d, profiles, s);
    out << s.str();
    for (CityId t : d.targets) {
      out << '\t' << format_fixed(100.0 * avg_common_users(t, s, pool), 2);
    }
    out << '\n';
  }
}

inline void write_overlap_artifacts(ArtifactWriter& w, const ExperimentConfig& cfg,
                                    const Dataset& d) {
  w.write("overlap_train.tsv",
          [&](std::ostream& o) { write_overlap(o, cfg, d, d.profiles); });
  w.write("overlap_full.tsv",
          [&](std::ostream& o) { write_overlap(o, cfg, d, d.full_profiles); });
}

inline void write_tables(ArtifactWriter& w, std::span<const MetricRow> rows) {
  for (const char* metric : {"ndcg", "precision"}) {
    const auto table = build_result_table(rows, metric);
    w.write(std::string("table_") + metric + ".csv",
            [&](std::ostream& o) { write_table_csv(o, table); });
    w.write(std::string("table_") + metric + ".txt",
            [&](std::ostream& o) { write_table_text(o, table); });
  }
}

inline void write_gridsearch_artifacts(ArtifactWriter& w, const ExperimentConfig& cfg,
                                       const GridSearchResult& g) {
  w.write("optima.tsv", [&](std::ostream& o) { write_optima_tsv(o, g.optima); });
  w.write("optima.txt", [&](std::ostream& o) { write_optima_text(o, g.optima, cfg); });
  w.write("gridsearch.csv", [&](std::ostream& o) {
    o << "# configurations per city: " << g.roster_configurations << '\n';
    o << "city,recommender,params,precision,ndcg,evaluated_users,abstained_users\n";
    for (const auto& p : g.points) {
      o << p.city << ',' << p.recommender << ',' << point_str(p.params) << ','
        << format_real(p.report.precision) << ',' << format_real(p.report.ndcg) << ','
        << p.report.evaluated_users << ',' << p.report.abstained_users << '\n';
    }
  });
}

inline std::map<std::pair<std::string, std::string>, ParamPoint> load_presets(
    const ExperimentConfig& cfg) {
  if (cfg.optima.empty()) return {};
  std::ifstream in(cfg.resolve(cfg.optima));
  if (!in) throw ConfigError("cannot read optima file " + cfg.resolve(cfg.optima).string());
  return read_optima(in, cfg);
}

struct RunSummary {
  std::vector<RunRecord> records;
  GridSearchResult grid;
  std::size_t fits = 0;
  std::size_t cache_hits = 0;
};

/// The whole pipeline. Every artifact lands under cfg.out and is listed in
/// manifest.txt together with the config hash and seed.
inline RunSummary run_pipeline(const ExperimentConfig& cfg) {
  RunSummary summary;
  ArtifactWriter w(cfg.out);
  with_artifacts(w, cfg, "run", [&](ArtifactWriter& out) {
    const auto presets = run_stage("config", [&] { return load_presets(cfg); });
    Experiment ex(cfg);
    ex.load();
    const auto& d = ex.data();
    write_preprocess_artifacts(out, d, false);
    write_split_artifacts(out, d, false);
    write_overlap_artifacts(out, cfg, d);
    summary.grid = ex.grid_search(presets);
    write_gridsearch_artifacts(out, cfg, summary.grid);
    summary.records = ex.evaluate_all(summary.grid.optima);
    for (CityId t : d.targets) {
      for (const auto& s : cfg.strategies) {
        const auto sc = ex.scope(t, s);
        out.write("scopes/" + file_stem(d.city_name(t)) + "__" + file_stem(s.str()) + ".txt",
                [&](std::ostream& o) {
                  write_scope_manifest(o, *sc, *d.table, d.train_parts.at(t));
                });
      }
    }
    std::ostringstream csv;
    csv << kMetricCsvHeader << '\n';
    for (const auto& r : summary.records) {
      write_metric_rows(csv, d.city_name(r.city), r.strategy.str(), r.recommender, r.report);
    }
    out.write("metrics.csv", [&](std::ostream& o) { o << csv.str(); });
    std::istringstream back(csv.str());
    write_tables(out, read_metric_rows(back));
    summary.fits = ex.factory().fits();
    summary.cache_hits = ex.factory().hits();
  });
  return summary;
}

/// Re-renders the result tables from a run's metrics.csv.
inline void render_tables(const fs::path& out_dir) {
  auto in = open_input(out_dir / "metrics.csv");
  const auto rows = read_metric_rows(in);
  ArtifactWriter w(out_dir);
  write_tables(w, rows);
}

}  // namespace citycd

#endif  // CITYCD_EXPERIMENT_HPP_
