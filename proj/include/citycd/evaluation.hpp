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

// TrainItems evaluation: candidates are the target city's training venues
// the user has not visited; rankings are cut at k and scored with binary
// relevance.

#ifndef CITYCD_EVALUATION_HPP_
#define CITYCD_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/cross_domain.hpp"
#include "citycd/ingest.hpp"
#include "citycd/interactions.hpp"
#include "citycd/parallel.hpp"
#include "citycd/recommenders.hpp"

namespace citycd {

/// Target-city training venues minus everything the user has in the merged
/// training data. Ascending.
inline std::vector<VenueId> candidate_set(UserId user, const TrainingScope& scope) {
  const auto seen = scope.merged_train.venues_of(user);
  std::vector<VenueId> out;
  out.reserve(scope.target_venues.size());
  std::set_difference(scope.target_venues.begin(), scope.target_venues.end(),
                      seen.begin(), seen.end(), std::back_inserter(out));
  return out;
}

struct RankedEntry {
  VenueId venue;
  double score = 0.0;
};

struct RankedList {
  UserId user;
  std::vector<RankedEntry> items;  // score descending, ties by ascending venue

  std::vector<VenueId> venues() const {
    std::vector<VenueId> out;
    out.reserve(items.size());
    for (const auto& e : items) out.push_back(e.venue);
    return out;
  }
};

/// Top-`cutoff` scoreable candidates, or nullopt when the model abstains on
/// every candidate.
inline std::optional<RankedList> rank(const RecommenderModel& model, UserId user,
                                      std::span<const VenueId> candidates,
                                      std::size_t cutoff) {
  const auto scores = model.score_candidates(user, candidates);
  RankedList list{user, {}};
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (scores[k]) list.items.push_back({candidates[k], *scores[k]});
  }
  if (list.items.empty()) return std::nullopt;
  auto better = [](const RankedEntry& a, const RankedEntry& b) {
    return a.score != b.score ? a.score > b.score : a.venue < b.venue;
  };
  const std::size_t keep = std::min(cutoff, list.items.size());
  std::partial_sort(list.items.begin(), list.items.begin() + std::ptrdiff_t(keep),
                    list.items.end(), better);
  list.items.resize(keep);
  return list;
}

namespace detail {
inline bool is_relevant(std::span<const VenueId> relevant, VenueId v) {
  return std::binary_search(relevant.begin(), relevant.end(), v);
}
}  // namespace detail

/// Binary-relevance nDCG with a log2(pos + 1) discount; the ideal ranking
/// places min(|relevant|, k) hits first. `relevant` must be ascending.
inline double ndcg_at_k(std::span<const VenueId> ranking,
                        std::span<const VenueId> relevant, std::size_t k) {
  if (relevant.empty() || k == 0) return 0.0;
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranking.size());
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (detail::is_relevant(relevant, ranking[pos])) dcg += 1.0 / std::log2(double(pos) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t pos = 0; pos < ideal; ++pos) idcg += 1.0 / std::log2(double(pos) + 2.0);
  return dcg / idcg;
}

inline std::size_t hits_at_k(std::span<const VenueId> ranking,
                             std::span<const VenueId> relevant, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < std::min(k, ranking.size()); ++pos) {
    if (detail::is_relevant(relevant, ranking[pos])) ++hits;
  }
  return hits;
}

/// hits / k, even when fewer than k venues were returned.
inline double precision_at_k(std::span<const VenueId> ranking,
                             std::span<const VenueId> relevant, std::size_t k) {
  if (k == 0) return 0.0;
  return double(hits_at_k(ranking, relevant, k)) / double(k);
}

inline double recall_at_k(std::span<const VenueId> ranking,
                          std::span<const VenueId> relevant, std::size_t k) {
  if (relevant.empty()) return 0.0;
  return double(hits_at_k(ranking, relevant, k)) / double(relevant.size());
}

struct EvaluationTask {
  const TrainingScope& scope;
  const InteractionSet& test;  // target city only
  std::size_t cutoff = 5;
};

struct UserMetrics {
  UserId user;
  double ndcg = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t relevant = 0;
};

struct MetricReport {
  std::size_t cutoff = 5;
  std::vector<UserMetrics> per_user;  // covered users, ascending id
  std::size_t evaluated_users = 0;    // produced a ranking
  std::size_t abstained_users = 0;
  std::size_t skipped_users = 0;      // test users with no candidates
  std::size_t excluded_test_venues = 0;
  // Means over covered users.
  double ndcg = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // Means over covered + abstained users, abstentions counted as 0.
  double ndcg_all = 0.0;
  double precision_all = 0.0;
  double recall_all = 0.0;

  double coverage() const {
    const auto n = evaluated_users + abstained_users;
    return n == 0 ? 0.0 : double(evaluated_users) / double(n);
  }
};

/// Evaluates every target-city test user with a nonempty candidate set.
/// Relevant venues are the user's test venues that are also target training
/// venues; the rest can never be recommended and are counted as excluded.
inline MetricReport evaluate(const RecommenderModel& model, const EvaluationTask& task,
                             std::size_t jobs = 1) {
  const auto users = task.test.users();
  const auto& universe = task.scope.target_venues;

  struct Outcome {
    enum { Skipped, Abstained, Covered } kind = Skipped;
    UserMetrics metrics;
    std::size_t excluded = 0;
  };
  std::vector<Outcome> outcomes(users.size());
  parallel_for(users.size(), jobs, [&](std::size_t idx) {
    const UserId u = users[idx];
    Outcome& out = outcomes[idx];
    std::vector<VenueId> relevant;
    for (VenueId v : task.test.venues_of(u)) {
      if (std::binary_search(universe.begin(), universe.end(), v)) {
        relevant.push_back(v);
      } else {
        ++out.excluded;
      }
    }
    const auto candidates = candidate_set(u, task.scope);
    if (candidates.empty()) return;
    const auto ranked = rank(model, u, candidates, task.cutoff);
    if (!ranked) {
      out.kind = Outcome::Abstained;
      return;
    }
    const auto list = ranked->venues();
    out.kind = Outcome::Covered;
    out.metrics = {u, ndcg_at_k(list, relevant, task.cutoff),
                   precision_at_k(list, relevant, task.cutoff),
                   recall_at_k(list, relevant, task.cutoff), relevant.size()};
  });

  MetricReport report;
  report.cutoff = task.cutoff;
  for (const auto& o : outcomes) {
    report.excluded_test_venues += o.excluded;
    switch (o.kind) {
      case Outcome::Skipped: ++report.skipped_users; break;
      case Outcome::Abstained: ++report.abstained_users; break;
      case Outcome::Covered:
        ++report.evaluated_users;
        report.per_user.push_back(o.metrics);
        report.ndcg += o.metrics.ndcg;
        report.precision += o.metrics.precision;
        report.recall += o.metrics.recall;
        break;
    }
  }
  const double all = double(report.evaluated_users + report.abstained_users);
  if (all > 0) {
    report.ndcg_all = report.ndcg / all;
    report.precision_all = report.precision / all;
    report.recall_all = report.recall / all;
  }
  if (report.evaluated_users > 0) {
    const double n = double(report.evaluated_users);
    report.ndcg /= n;
    report.precision /= n;
    report.recall /= n;
  }
  return report;
}

/// 100 (cd - sd) / sd; undefined when sd <= 0.
inline std::optional<double> delta_percent(double cd_value, double sd_value) {
  if (!(sd_value > 0.0)) return std::nullopt;
  return 100.0 * (cd_value - sd_value) / sd_value;
}

inline constexpr const char* kMetricCsvHeader =
    "city,strategy,recommender,metric,cutoff,value,evaluated_users,abstained_users";

/// One CSV line per metric, full double precision.
inline void write_metric_rows(std::ostream& out, std::string_view city,
                              std::string_view strategy, std::string_view recommender,
                              const MetricReport& r) {
  const std::pair<const char*, double> rows[] = {
      {"ndcg", r.ndcg},           {"precision", r.precision},
      {"recall", r.recall},       {"ndcg_all", r.ndcg_all},
      {"precision_all", r.precision_all}, {"recall_all", r.recall_all},
      {"coverage", r.coverage()}};
  for (const auto& [metric, value] : rows) {
    out << city << ',' << strategy << ',' << recommender << ',' << metric << ','
        << r.cutoff << ',' << format_real(value) << ',' << r.evaluated_users << ','
        << r.abstained_users << '\n';
  }
}

}  // namespace citycd

#endif  // CITYCD_EVALUATION_HPP_
