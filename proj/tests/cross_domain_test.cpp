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

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "citycd/cross_domain.hpp"

namespace citycd {
namespace {

// Builds a world of cities, each city holding `venues_per_city` venues at
// the given coordinates, and partitions from (user, city, venue slot) visits.
struct World {
  CityTable table;
  std::vector<std::vector<VenueId>> venues_by_city;

  World(std::vector<std::pair<double, double>> city_coords, int venues_per_city) {
    std::uint32_t next = 0;
    for (std::size_t c = 0; c < city_coords.size(); ++c) {
      const CityId city = table.cities.intern("city" + std::to_string(c));
      venues_by_city.emplace_back();
      for (int k = 0; k < venues_per_city; ++k) {
        table.venues.push_back({VenueId(next), GeoPoint::from_degrees(city_coords[c].first,
                                                                      city_coords[c].second), city});
        venues_by_city.back().push_back(VenueId(next++));
      }
    }
  }

  std::map<CityId, InteractionSet> partitions(
      const std::vector<std::tuple<int, int, int>>& visits) const {
    std::vector<Interaction> e;
    for (auto [u, c, k] : visits) e.push_back({UserId(u), venues_by_city[c][k], 0});
    return partition_by_city(InteractionSet(e), table);
  }
};

TEST(CityDistance, Basics) {
  const World w({{0, 0}, {0, 1}}, 1);
  const auto parts = w.partitions({{0, 0, 0}, {1, 1, 0}});
  const auto profiles = build_profiles(parts, w.table);
  ASSERT_EQ(profiles.size(), 2u);
  EXPECT_EQ(city_distance(profiles[0], profiles[0]), 0.0);
  EXPECT_NEAR(city_distance(profiles[0], profiles[1]), 111.195, 0.001);
  EXPECT_EQ(city_distance(profiles[0], profiles[1]), city_distance(profiles[1], profiles[0]));
}

std::vector<CityProfile> line_profiles(std::vector<double> lons,
                                       std::vector<std::size_t> counts = {}) {
  std::vector<CityProfile> out;
  for (std::size_t c = 0; c < lons.size(); ++c) {
    out.push_back({CityId(std::uint32_t(c)), GeoPoint::from_degrees(0, lons[c]),
                   counts.empty() ? 0 : counts[c], {}});
  }
  return out;
}

TEST(NearestCities, OrderingTiesAndErrors) {
  const auto p = line_profiles({0, 1, 5});
  EXPECT_EQ(nearest_cities(CityId(0), p, 1), std::vector<CityId>{CityId(1)});
  EXPECT_EQ(nearest_cities(CityId(0), p, 2), (std::vector<CityId>{CityId(1), CityId(2)}));
  EXPECT_EQ(nearest_cities(CityId(2), p, 2), (std::vector<CityId>{CityId(1), CityId(0)}));
  EXPECT_THROW(nearest_cities(CityId(0), p, 3), ConfigError);

  const auto tie = line_profiles({0, 2, -2});
  EXPECT_EQ(nearest_cities(CityId(0), tie, 2), (std::vector<CityId>{CityId(1), CityId(2)}));
}

TEST(NearestCities, PrefixProperty) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lon(-179, 179);
  std::vector<double> lons;
  for (int c = 0; c < 12; ++c) lons.push_back(lon(rng));
  const auto p = line_profiles(lons);
  for (std::uint32_t t = 0; t < 12; ++t) {
    for (std::size_t n = 1; n < 11; ++n) {
      const auto a = nearest_cities(CityId(t), p, n);
      const auto b = nearest_cities(CityId(t), p, n + 1);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(TopPopularCities, Examples) {
  const auto p = line_profiles({0, 1, 2}, {10, 5, 1});
  EXPECT_EQ(top_popular_cities(p, 2), (std::vector<CityId>{CityId(0), CityId(1)}));
  EXPECT_TRUE(top_popular_cities(p, 0).empty());
  const auto eq = line_profiles({0, 1, 2}, {3, 3, 3});
  EXPECT_EQ(top_popular_cities(eq, 3), (std::vector<CityId>{CityId(0), CityId(1), CityId(2)}));
}

TEST(Strategy, ParseAndPrint) {
  EXPECT_EQ(Strategy::parse("single"), Strategy::single());
  EXPECT_EQ(Strategy::parse("ncd:7"), Strategy::nearest(7));
  EXPECT_EQ(Strategy::parse("pcd:3").str(), "pcd:3");
  for (const char* bad : {"ncd", "ncd:0", "pcd:x", "cdc:2", "ncd:2x"}) {
    EXPECT_THROW(Strategy::parse(bad), ConfigError) << bad;
  }
}

TEST(BuildScope, SingleDomainIsTargetPartition) {
  const World w({{0, 0}, {0, 1}}, 3);
  const auto parts = w.partitions({{0, 0, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 2}});
  const auto profiles = build_profiles(parts, w.table);
  const auto s = build_scope(CityId(0), Strategy::single(), parts, profiles);
  EXPECT_EQ(s.source_cities, std::vector<CityId>{CityId(0)});
  EXPECT_EQ(s.merged_train, parts.at(CityId(0)));
  EXPECT_EQ(s.target_venues, parts.at(CityId(0)).venues());
}

TEST(BuildScope, NearestUnionIsDisjoint) {
  const World w({{0, 0}, {0, 1}}, 3);
  const auto parts = w.partitions({{0, 0, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 2}});
  const auto profiles = build_profiles(parts, w.table);
  const auto s = build_scope(CityId(0), Strategy::nearest(1), parts, profiles);
  EXPECT_EQ(s.merged_train.size(), parts.at(CityId(0)).size() + parts.at(CityId(1)).size());
  // user 0 is active in both cities and keeps one row
  EXPECT_EQ(s.merged_train.venues_of(UserId(0)).size(), 3u);
  EXPECT_EQ(s.merged_train.active_users(), 2u);
  EXPECT_THROW(build_scope(CityId(0), Strategy::nearest(2), parts, profiles), ConfigError);
  EXPECT_THROW(build_scope(CityId(0), Strategy::popular(2), parts, profiles), ConfigError);
}

TEST(BuildScope, PopularOverAllSelectedCitiesIsIdentical) {
  std::vector<std::pair<double, double>> coords;
  for (int c = 0; c < 8; ++c) coords.emplace_back(c * 3.0, c * 7.0);
  const World w(coords, 4);
  std::mt19937_64 rng(5);
  std::vector<std::tuple<int, int, int>> visits;
  for (int u = 0; u < 60; ++u)
    for (int c = 0; c < 8; ++c)
      for (int k = 0; k < 4; ++k)
        if (rng() % 5 == 0) visits.emplace_back(u, c, k);
  const auto parts = w.partitions(visits);
  const auto profiles = build_profiles(parts, w.table);
  ASSERT_EQ(profiles.size(), 8u);
  const auto first = build_scope(CityId(0), Strategy::popular(7), parts, profiles);
  for (std::uint32_t t = 0; t < 8; ++t) {
    const auto s = build_scope(CityId(t), Strategy::popular(7), parts, profiles);
    EXPECT_EQ(s.merged_train, first.merged_train);
    EXPECT_EQ(s.source_cities.front(), CityId(t));
    for (auto strategy : {Strategy::nearest(3), Strategy::popular(2), Strategy::single()}) {
      const auto cd = build_scope(CityId(t), strategy, parts, profiles);
      parts.at(CityId(t)).for_each([&](const Interaction& e) {
        EXPECT_TRUE(cd.merged_train.contains(e.user, e.venue));
      });
      cd.merged_train.for_each([&](const Interaction& e) {
        const CityId c = w.table.city_of(e.venue);
        EXPECT_NE(std::find(cd.source_cities.begin(), cd.source_cities.end(), c),
                  cd.source_cities.end());
      });
    }
  }
}

TEST(BuildScope, PopularKeepsTargetWhenNotAmongTop) {
  const World w({{0, 0}, {0, 1}, {0, 2}}, 2);
  // city 2 is the least popular
  const auto parts = w.partitions({{0, 0, 0}, {1, 0, 1}, {2, 0, 0}, {0, 1, 0}, {1, 1, 1}, {3, 2, 0}});
  const auto profiles = build_profiles(parts, w.table);
  const auto s = build_scope(CityId(2), Strategy::popular(1), parts, profiles);
  EXPECT_EQ(s.source_cities, (std::vector<CityId>{CityId(2), CityId(0)}));
}

CityProfile users_profile(std::vector<int> users) {
  CityProfile p;
  for (int u : users) p.train_users.push_back(UserId(u));
  return p;
}

TEST(CommonUsers, Enumeration) {
  EXPECT_EQ(common_users(users_profile({1, 2}), users_profile({3})), 0.0);
  EXPECT_EQ(common_users(users_profile({1, 2}), users_profile({1, 2})), 1.0);
  EXPECT_EQ(common_users(users_profile({1, 2, 3}), users_profile({2, 3, 4})), 0.5);
}

TEST(AvgCommonUsers, SingleSourceAndMean) {
  auto p = line_profiles({0, 1, 9});
  p[0].train_users = {UserId(1), UserId(2), UserId(3)};
  p[1].train_users = {UserId(2), UserId(3), UserId(4)};
  p[2].train_users = {UserId(1), UserId(9)};
  EXPECT_EQ(avg_common_users(CityId(0), Strategy::nearest(1), p), 0.5);
  EXPECT_EQ(avg_common_users(CityId(0), Strategy::nearest(2), p), (0.5 + 0.25) / 2);
  EXPECT_EQ(avg_common_users(CityId(0), Strategy::single(), p), 0.0);
}

TEST(ScopeManifest, KeyValueLines) {
  const World w({{0, 0}, {0, 1}}, 1);
  const auto parts = w.partitions({{0, 0, 0}, {1, 1, 0}});
  const auto profiles = build_profiles(parts, w.table);
  const auto s = build_scope(CityId(1), Strategy::nearest(1), parts, profiles);
  std::ostringstream out;
  write_scope_manifest(out, s, w.table, parts.at(CityId(1)));
  EXPECT_NE(out.str().find("target=city1\nstrategy=ncd:1\nsources=city1,city0\n"), std::string::npos);
  EXPECT_NE(out.str().find("merged_interactions=2\n"), std::string::npos);
}

}  // namespace
}  // namespace citycd
