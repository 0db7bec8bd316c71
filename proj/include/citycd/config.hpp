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

// Experiment configuration: a flat key=value file with one optional
// [recommender NAME] section per recommender to override its parameter grid.

#ifndef CITYCD_CONFIG_HPP_
#define CITYCD_CONFIG_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/cross_domain.hpp"
#include "citycd/error.hpp"
#include "citycd/ingest.hpp"

namespace citycd {

/// One grid point: (key, value) pairs in axis order.
using ParamPoint = std::vector<std::pair<std::string, std::string>>;

/// "k=5;similarity=sj", or "-" for a parameterless recommender.
inline std::string point_str(const ParamPoint& p) {
  if (p.empty()) return "-";
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += ';';
    out += k + '=' + v;
  }
  return out;
}

inline std::optional<std::string> find_param(const ParamPoint& p, std::string_view key) {
  for (const auto& [k, v] : p) {
    if (k == key) return v;
  }
  return std::nullopt;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
bool parse_exact(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

enum class ValueType { PositiveInt, PositiveReal, NonNegativeReal, Similarity };

struct AxisSpec {
  std::string key;
  ValueType type;
  std::string defaults;  // config syntax
};

/// Parameter axes per recommender kind, in enumeration order (outermost
/// first). The defaults are the published grids.
inline const std::map<std::string, std::vector<AxisSpec>>& recommender_kinds() {
  static const std::map<std::string, std::vector<AxisSpec>> kinds = {
      {"rnd", {}},
      {"pop", {}},
      {"avgdis", {}},
      {"pgn", {{"similarity", ValueType::Similarity, "sj"},
               {"k", ValueType::PositiveInt, "100"}}},
      {"ub", {{"similarity", ValueType::Similarity, "sc, sj"},
              {"k", ValueType::PositiveInt, "5, 10:100:10"}}},
      {"ib", {{"similarity", ValueType::Similarity, "sc, sj"},
              {"k", ValueType::PositiveInt, "5, 10:100:10"}}},
      {"hkv", {{"factors", ValueType::PositiveInt, "10, 50, 100"},
               {"alpha", ValueType::PositiveReal, "0.1, 1, 10"},
               {"lambda", ValueType::NonNegativeReal, "0.1, 1, 10"},
               {"iterations", ValueType::PositiveInt, "20"},
               {"tolerance", ValueType::NonNegativeReal, "1e-4"}}},
  };
  return kinds;
}

/// Expands a comma list whose items are values or inclusive a:b:step ranges,
/// and checks every value against the axis type.
inline std::vector<std::string> expand_values(const AxisSpec& axis, std::string_view text) {
  auto fail = [&](std::string_view what) {
    return ConfigError("parameter '" + axis.key + "': " + std::string(what));
  };
  std::vector<std::string> out;
  for (const auto& item : detail::split_list(text)) {
    if (axis.type == ValueType::Similarity) {
      if (item != "sc" && item != "sj") throw fail("expected sc or sj, got '" + item + "'");
      out.push_back(item);
      continue;
    }
    const bool integral = axis.type == ValueType::PositiveInt;
    auto check = [&](std::string_view s) {
      double v = 0.0;
      if (integral) {
        long long i = 0;
        if (!detail::parse_exact(s, i)) throw fail("not an integer: '" + std::string(s) + "'");
        v = double(i);
      } else if (!detail::parse_exact(s, v) || !std::isfinite(v)) {
        throw fail("not a number: '" + std::string(s) + "'");
      }
      const bool ok = axis.type == ValueType::NonNegativeReal ? v >= 0.0 : v > 0.0;
      if (!ok) throw fail("out of range: '" + std::string(s) + "'");
      return v;
    };
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      check(item);
      out.push_back(item);
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) throw fail("range needs a:b:step, got '" + item + "'");
    const std::string_view s = item;
    const double lo = check(s.substr(0, c1));
    const double hi = check(s.substr(c1 + 1, c2 - c1 - 1));
    const double step = check(s.substr(c2 + 1));
    if (hi < lo) throw fail("empty range '" + item + "'");
    for (std::size_t i = 0;; ++i) {
      const double v = lo + double(i) * step;
      if (v > hi + 1e-9 * step) break;
      out.push_back(integral ? std::to_string(std::llround(v)) : format_real(v, 12));
    }
  }
  if (out.empty()) throw fail("empty grid");
  return out;
}

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

/// A recommender and its parameter grid.
struct RecommenderGrid {
  std::string kind;
  std::vector<GridAxis> axes;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
  }

  /// Cartesian product, first axis outermost, values in listed order.
  std::vector<ParamPoint> points() const {
    std::vector<ParamPoint> out{ParamPoint{}};
    for (const auto& axis : axes) {
      std::vector<ParamPoint> next;
      for (const auto& p : out) {
        for (const auto& v : axis.values) {
          auto q = p;
          q.emplace_back(axis.key, v);
          next.push_back(std::move(q));
        }
      }
      out = std::move(next);
    }
    return out;
  }

  /// Default grid for `kind`, with `overrides` (key -> config text) applied.
  static RecommenderGrid make(const std::string& kind,
                              const std::map<std::string, std::string>& overrides = {}) {
    const auto& kinds = recommender_kinds();
    auto it = kinds.find(kind);
    if (it == kinds.end()) throw ConfigError("unknown recommender '" + kind + "'");
    for (const auto& [key, _] : overrides) {
      bool known = false;
      for (const auto& a : it->second) known = known || a.key == key;
      if (!known) throw ConfigError("recommender " + kind + ": unknown key '" + key + "'");
    }
    RecommenderGrid g{kind, {}};
    for (const auto& axis : it->second) {
      auto o = overrides.find(axis.key);
      g.axes.push_back({axis.key, expand_values(axis, o == overrides.end() ? axis.defaults
                                                                            : o->second)});
    }
    return g;
  }
};

/// Typed lookups; values were validated when the grid was expanded.
inline std::size_t param_size(const ParamPoint& p, std::string_view key) {
  return std::size_t(std::stoull(find_param(p, key).value()));
}
inline double param_real(const ParamPoint& p, std::string_view key) {
  return std::stod(find_param(p, key).value());
}

enum class Universe { Targets, All };

struct ExperimentConfig {
  std::filesystem::path base_dir = ".";  // relative input paths resolve here
  std::string checkins;
  std::string venues;
  std::optional<DateWindow> train_window;
  std::optional<DateWindow> test_window;
  std::vector<std::string> targets;  // city names
  std::size_t top_targets = 0;       // "targets = top:N"
  std::vector<Strategy> strategies{Strategy::single()};
  std::vector<RecommenderGrid> recommenders;
  std::size_t cutoff = 5;
  std::size_t kcore = 2;
  std::uint64_t seed = 42;
  std::filesystem::path out = "citycd-out";
  std::size_t jobs = 1;
  Universe popular_universe = Universe::Targets;
  std::string optima;  // preset optima file; empty means grid search
  std::string cache;   // fitted HKV factor cache directory; empty disables

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
  std::filesystem::path checkins_path() const { return resolve(checkins); }
  std::filesystem::path venues_path() const { return resolve(venues); }

  const RecommenderGrid* find_recommender(std::string_view kind) const {
    for (const auto& r : recommenders) {
      if (r.kind == kind) return &r;
    }
    return nullptr;
  }

  /// Everything that can change a result, one key per line. The output
  /// directory and parallelism are left out: they do not.
  std::string canonical() const {
    std::ostringstream o;
    o << "checkins=" << checkins << '\n' << "venues=" << venues << '\n';
    o << "train_window=" << (train_window ? train_window->str() : "") << '\n';
    o << "test_window=" << (test_window ? test_window->str() : "") << '\n';
    o << "targets=";
    if (top_targets > 0) {
      o << "top:" << top_targets;
    } else {
      for (std::size_t i = 0; i < targets.size(); ++i) o << (i ? "," : "") << targets[i];
    }
    o << "\nstrategies=";
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      o << (i ? "," : "") << strategies[i].str();
    }
    o << "\ncutoff=" << cutoff << "\nkcore=" << kcore << "\nseed=" << seed
      << "\npopular_universe=" << (popular_universe == Universe::All ? "all" : "targets")
      << "\noptima=" << optima << '\n';
    for (const auto& r : recommenders) {
      o << "[recommender " << r.kind << "]\n";
      for (const auto& a : r.axes) {
        o << a.key << '=';
        for (std::size_t i = 0; i < a.values.size(); ++i) o << (i ? "," : "") << a.values[i];
        o << '\n';
      }
    }
    return o.str();
  }

  std::uint64_t hash() const {
    Fnv1a h;
    h.text(canonical());
    return h.digest();
  }

  /// Checks everything that can be checked without reading the corpus.
  void validate() const {
    if (checkins.empty() || venues.empty()) {
      throw ConfigError("both 'checkins' and 'venues' must be set");
    }
    if (!train_window || !test_window) {
      throw ConfigError("both 'train_window' and 'test_window' must be set");
    }
    validate_windows(*train_window, *test_window);
    if (targets.empty() && top_targets == 0) throw ConfigError("no target cities");
    if (strategies.empty()) throw ConfigError("no strategies");
    if (recommenders.empty()) throw ConfigError("no recommenders");
    if (cutoff < 1) throw ConfigError("cutoff must be >= 1");
    if (kcore < 1) throw ConfigError("kcore must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    std::set<std::string> seen;
    for (const auto& t : targets) {
      if (!seen.insert(t).second) throw ConfigError("duplicate target '" + t + "'");
    }
    seen.clear();
    for (const auto& r : recommenders) {
      if (!seen.insert(r.kind).second) {
        throw ConfigError("recommender '" + r.kind + "' listed twice");
      }
      if (r.size() == 0) throw ConfigError("recommender " + r.kind + ": empty grid");
    }
  }
};

inline std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  if (!detail::parse_exact(value, v)) {
    throw ConfigError("'" + std::string(key) + "' expects a nonnegative integer, got '" +
                      std::string(value) + "'");
  }
  return v;
}

/// Parses and validates a configuration. Unknown keys, duplicate keys and
/// sections for recommenders missing from the roster are errors.
inline ExperimentConfig parse_config(std::istream& in,
                                     const std::filesystem::path& base_dir = ".") {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::map<std::string, std::string> top;
  std::vector<std::pair<std::string, std::map<std::string, std::string>>> sections;
  std::string buf;
  std::size_t line_no = 0;
  auto where = [&] { return "config line " + std::to_string(line_no) + ": "; };
  while (std::getline(in, buf)) {
    ++line_no;
    const auto line = detail::trim(buf);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      const auto inner = detail::trim(line.substr(1, line.size() - 2));
      constexpr std::string_view kPrefix = "recommender ";
      if (!inner.starts_with(kPrefix)) {
        throw ConfigError(where() + "unknown section [" + std::string(inner) + "]");
      }
      const std::string name(detail::trim(inner.substr(kPrefix.size())));
      for (const auto& s : sections) {
        if (s.first == name) throw ConfigError(where() + "section for '" + name + "' repeated");
      }
      sections.emplace_back(name, std::map<std::string, std::string>{});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    auto& target = sections.empty() ? top : sections.back().second;
    if (!target.emplace(key, value).second) {
      throw ConfigError(where() + "duplicate key '" + key + "'");
    }
  }

  for (const auto& [key, value] : top) {
    if (key == "checkins") {
      cfg.checkins = value;
    } else if (key == "venues") {
      cfg.venues = value;
    } else if (key == "train_window") {
      cfg.train_window = DateWindow::parse(value);
    } else if (key == "test_window") {
      cfg.test_window = DateWindow::parse(value);
    } else if (key == "targets") {
      if (value.starts_with("top:")) {
        cfg.top_targets = parse_unsigned(key, std::string_view(value).substr(4));
        if (cfg.top_targets == 0) throw ConfigError("targets = top:N needs N >= 1");
      } else {
        cfg.targets = detail::split_list(value);
      }
    } else if (key == "strategies") {
      cfg.strategies.clear();
      for (const auto& s : detail::split_list(value)) cfg.strategies.push_back(Strategy::parse(s));
    } else if (key == "recommenders") {
      for (const auto& kind : detail::split_list(value)) {
        cfg.recommenders.push_back(RecommenderGrid::make(kind));
      }
    } else if (key == "cutoff") {
      cfg.cutoff = parse_unsigned(key, value);
    } else if (key == "kcore") {
      cfg.kcore = parse_unsigned(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_unsigned(key, value);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "jobs") {
      cfg.jobs = parse_unsigned(key, value);
    } else if (key == "popular_universe") {
      if (value == "targets") cfg.popular_universe = Universe::Targets;
      else if (value == "all") cfg.popular_universe = Universe::All;
      else throw ConfigError("popular_universe must be 'targets' or 'all'");
    } else if (key == "optima") {
      cfg.optima = value;
    } else if (key == "cache") {
      cfg.cache = value;
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  for (const auto& [name, overrides] : sections) {
    bool found = false;
    for (auto& r : cfg.recommenders) {
      if (r.kind == name) {
        r = RecommenderGrid::make(name, overrides);
        found = true;
      }
    }
    if (!found) {
      throw ConfigError("section [recommender " + name + "] but '" + name +
                        "' is not in 'recommenders'");
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace citycd

#endif  // CITYCD_CONFIG_HPP_
