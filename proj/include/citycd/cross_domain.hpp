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

// Training scopes with cities as domains: the target city alone, the target
// plus its nearest cities, or the target plus the most popular cities; and
// the common-user overlap between cities.

#ifndef CITYCD_CROSS_DOMAIN_HPP_
#define CITYCD_CROSS_DOMAIN_HPP_

#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/error.hpp"
#include "citycd/ingest.hpp"
#include "citycd/interactions.hpp"
#include "citycd/similarity.hpp"

namespace citycd {

struct CityProfile {
  CityId city;
  GeoPoint centroid;
  std::size_t train_checkin_count = 0;
  std::vector<UserId> train_users;  // ascending
};

/// One profile per partition; the centroid covers the partition's venues.
inline std::vector<CityProfile> build_profiles(
    const std::map<CityId, InteractionSet>& partitions, const CityTable& table) {
  std::vector<CityProfile> out;
  out.reserve(partitions.size());
  std::vector<GeoPoint> points;
  for (const auto& [city, data] : partitions) {
    points.clear();
    for (VenueId v : data.venues()) points.push_back(table.location_of(v));
    if (points.empty()) continue;
    out.push_back({city, geographic_midpoint(points), data.size(), data.users()});
  }
  return out;
}

inline const CityProfile& find_profile(std::span<const CityProfile> profiles,
                                       CityId city) {
  for (const auto& p : profiles) {
    if (p.city == city) return p;
  }
  throw ConfigError("city " + std::to_string(city.value) + " has no profile");
}

inline double city_distance(const CityProfile& a, const CityProfile& b) {
  return haversine_km(a.centroid, b.centroid);
}

/// The n cities closest to the target (target excluded), nearest first,
/// ties by ascending id.
inline std::vector<CityId> nearest_cities(CityId target,
                                          std::span<const CityProfile> profiles,
                                          std::size_t n) {
  const auto& origin = find_profile(profiles, target);
  std::vector<std::pair<double, CityId>> ranked;
  for (const auto& p : profiles) {
    if (p.city != target) ranked.emplace_back(city_distance(origin, p), p.city);
  }
  if (n > ranked.size()) {
    throw ConfigError("asked for " + std::to_string(n) + " nearest cities but only " +
                      std::to_string(ranked.size()) + " other cities exist");
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<CityId> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(ranked[k].second);
  return out;
}

/// The m cities with most training check-ins, descending, ties by id.
inline std::vector<CityId> top_popular_cities(std::span<const CityProfile> profiles,
                                              std::size_t m) {
  if (m > profiles.size()) {
    throw ConfigError("asked for " + std::to_string(m) + " popular cities but only " +
                      std::to_string(profiles.size()) + " exist");
  }
  std::vector<const CityProfile*> ranked;
  for (const auto& p : profiles) ranked.push_back(&p);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    return a->train_checkin_count != b->train_checkin_count
               ? a->train_checkin_count > b->train_checkin_count
               : a->city < b->city;
  });
  std::vector<CityId> out;
  for (std::size_t k = 0; k < m; ++k) out.push_back(ranked[k]->city);
  return out;
}

struct Strategy {
  enum class Kind { Single, Nearest, Popular };
  Kind kind = Kind::Single;
  std::size_t n = 0;

  static Strategy single() { return {Kind::Single, 0}; }
  static Strategy nearest(std::size_t n) { return {Kind::Nearest, n}; }
  static Strategy popular(std::size_t n) { return {Kind::Popular, n}; }

  /// "single", "ncd:N" or "pcd:N".
  static Strategy parse(std::string_view s) {
    if (s == "single" || s == "sd") return single();
    const auto colon = s.find(':');
    if (colon != std::string_view::npos) {
      const auto head = s.substr(0, colon);
      const auto tail = s.substr(colon + 1);
      std::size_t n = 0;
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), n);
      if (ec == std::errc() && ptr == tail.data() + tail.size() && n >= 1) {
        if (head == "ncd") return nearest(n);
        if (head == "pcd") return popular(n);
      }
    }
    throw ConfigError("bad strategy '" + std::string(s) +
                      "' (expected single, ncd:N or pcd:N)");
  }

  std::string str() const {
    switch (kind) {
      case Kind::Single: return "single";
      case Kind::Nearest: return "ncd:" + std::to_string(n);
      case Kind::Popular: return "pcd:" + std::to_string(n);
    }
    return "?";
  }

  bool cross_domain() const { return kind != Kind::Single; }

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Cities whose training data a scope merges, target first. Popular scopes
/// take the target plus the n most popular other cities, so when the target
/// is itself among the n+1 most popular the scope is exactly that top set.
inline std::vector<CityId> select_source_cities(CityId target, Strategy strategy,
                                                std::span<const CityProfile> profiles) {
  (void)find_profile(profiles, target);
  std::vector<CityId> sources{target};
  switch (strategy.kind) {
    case Strategy::Kind::Single:
      break;
    case Strategy::Kind::Nearest: {
      const auto near = nearest_cities(target, profiles, strategy.n);
      sources.insert(sources.end(), near.begin(), near.end());
      break;
    }
    case Strategy::Kind::Popular: {
      if (strategy.n + 1 > profiles.size()) {
        throw ConfigError("popular strategy needs " + std::to_string(strategy.n) +
                          " other cities but only " +
                          std::to_string(profiles.size() - 1) + " exist");
      }
      for (CityId c : top_popular_cities(profiles, profiles.size())) {
        if (sources.size() == strategy.n + 1) break;
        if (c != target) sources.push_back(c);
      }
      break;
    }
  }
  return sources;
}

struct TrainingScope {
  CityId target;
  Strategy strategy;
  std::vector<CityId> source_cities;  // target first
  InteractionSet merged_train;
  std::vector<VenueId> target_venues;  // target's own training venues, ascending
};

/// Unions the source cities' training partitions. Handles are corpus-wide,
/// so a user active in several cities keeps a single row.
inline TrainingScope build_scope(CityId target, Strategy strategy,
                                 const std::map<CityId, InteractionSet>& partitions,
                                 std::span<const CityProfile> profiles) {
  if (!partitions.contains(target)) {
    throw ConfigError("target city " + std::to_string(target.value) +
                      " has no training partition");
  }
  TrainingScope scope{target, strategy,
                      select_source_cities(target, strategy, profiles), {}, {}};
  std::vector<Interaction> merged;
  std::size_t user_dim = 0, venue_dim = 0;
  for (CityId c : scope.source_cities) {
    auto it = partitions.find(c);
    if (it == partitions.end()) continue;
    user_dim = std::max(user_dim, it->second.user_dim());
    venue_dim = std::max(venue_dim, it->second.venue_dim());
    it->second.for_each([&](const Interaction& e) { merged.push_back(e); });
  }
  scope.merged_train = InteractionSet(std::move(merged), user_dim, venue_dim);
  scope.target_venues = partitions.at(target).venues();
  return scope;
}

/// |U(a) n U(b)| / |U(a) u U(b)|.
inline double common_users(const CityProfile& a, const CityProfile& b) {
  return set_jaccard(std::span<const UserId>(a.train_users),
                     std::span<const UserId>(b.train_users));
}

/// Mean overlap between the target and each other source city of the
/// strategy; 0 when the strategy has no other city.
inline double avg_common_users(CityId target, Strategy strategy,
                               std::span<const CityProfile> profiles) {
  const auto& origin = find_profile(profiles, target);
  double sum = 0.0;
  std::size_t n = 0;
  for (CityId c : select_source_cities(target, strategy, profiles)) {
    if (c == target) continue;
    sum += common_users(origin, find_profile(profiles, c));
    ++n;
  }
  return n == 0 ? 0.0 : sum / double(n);
}

inline void write_scope_manifest(std::ostream& out, const TrainingScope& scope,
                                 const CityTable& table,
                                 const InteractionSet& target_train) {
  out << "target=" << table.cities.name(scope.target) << '\n'
      << "strategy=" << scope.strategy.str() << '\n'
      << "sources=";
  for (std::size_t k = 0; k < scope.source_cities.size(); ++k) {
    out << (k ? "," : "") << table.cities.name(scope.source_cities[k]);
  }
  out << '\n'
      << "merged_users=" << scope.merged_train.active_users() << '\n'
      << "merged_venues=" << scope.merged_train.active_venues() << '\n'
      << "merged_interactions=" << scope.merged_train.size() << '\n'
      << "target_interactions=" << target_train.size() << '\n'
      << "fingerprint=" << scope.merged_train.fingerprint() << '\n';
}

}  // namespace citycd

#endif  // CITYCD_CROSS_DOMAIN_HPP_
