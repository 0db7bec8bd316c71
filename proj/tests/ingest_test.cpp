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
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "citycd/ingest.hpp"
#include "oracles.hpp"

namespace citycd {
namespace {

ParseResult parse(const std::string& checkins, const std::string& venues) {
  std::istringstream c(checkins), v(venues);
  return parse_corpus(c, v);
}

const char* kVenues =
    "# venue lat lon city\n"
    "v1\t40.0\t-3.7\tMadrid\n"
    "v2\t41.4\t2.17\tBarcelona\textra\tfields\n";

TEST(ParseCorpus, CleanInput) {
  const auto r = parse(
      "u1\tv1\t1000\t0\n"
      "u1\tv2\t2000\t60\n"
      "u2\tv1\t3000\t-120\n",
      kVenues);
  EXPECT_EQ(r.corpus.checkins.size(), 3u);
  EXPECT_TRUE(r.report.rejected.empty());
  EXPECT_EQ(r.report.skipped_lines, 1u);
  EXPECT_EQ(r.corpus.users.size(), 2u);
  EXPECT_EQ(r.corpus.table.city_count(), 2u);
  EXPECT_EQ(r.corpus.table.cities.name(r.corpus.table.city_of(VenueId(1))), "Barcelona");
  EXPECT_EQ(r.corpus.checkins[1].tz_offset_min, 60);
}

TEST(ParseCorpus, UnknownVenueIsRejectedWithReason) {
  const auto r = parse("u1\tv1\t1000\t0\nu1\tv9\t1000\t0\n", kVenues);
  EXPECT_EQ(r.corpus.checkins.size(), 1u);
  ASSERT_EQ(r.report.rejected.size(), 1u);
  EXPECT_EQ(r.report.rejected[0].reason, "unknown venue");
  EXPECT_EQ(r.report.rejected[0].line, 2u);
  EXPECT_EQ(r.report.rejected[0].source, "checkins");
}

TEST(ParseCorpus, MalformedFieldsAreCounted) {
  const auto r = parse(
      "u1\tv1\t1000\tabc\n"
      "u1\tv1\tnot a time\t0\n"
      "u1\tv1\t1000\n"
      "u1\tv1\t1000\t900\n",
      kVenues + std::string("v3\tnorth\t0\tX\nv4\t95\t0\tX\nv1\t0\t0\tX\n"));
  EXPECT_TRUE(r.corpus.checkins.empty());
  EXPECT_EQ(r.report.rejected_count("bad field"), 3u);  // 2 check-ins + 1 venue
  EXPECT_EQ(r.report.rejected_count("field count"), 1u);
  EXPECT_EQ(r.report.rejected_count("offset out of range"), 1u);
  EXPECT_EQ(r.report.rejected_count("bad coordinates"), 1u);
  EXPECT_EQ(r.report.rejected_count("duplicate venue"), 1u);
}

TEST(ParseCorpus, FoursquareTimeLiteral) {
  const auto r = parse("u1\tv1\tTue Apr 03 18:00:09 +0000 2012\t240\n", kVenues);
  ASSERT_EQ(r.corpus.checkins.size(), 1u);
  EXPECT_EQ(r.corpus.checkins[0].utc_time, 1333476009);
  EXPECT_EQ(local_time(r.corpus.checkins[0]), 1333476009 + 240 * 60);
  EXPECT_EQ(*detail::parse_utc_time("Tue Apr 03 20:00:09 +0200 2012"), 1333476009);
}

TEST(ParseCorpus, UnreadableStream) {
  std::istringstream ok("");
  std::ifstream missing("/nonexistent/file");
  EXPECT_THROW(parse_corpus(missing, ok), DataError);
}

std::vector<Interaction> events(std::initializer_list<std::tuple<int, int, Timestamp>> list) {
  std::vector<Interaction> out;
  for (auto [u, v, t] : list) out.push_back({UserId(u), VenueId(v), t});
  return out;
}

TEST(Deduplicate, KeepsEarliestVisit) {
  const auto d = deduplicate(events({{1, 1, 100}, {1, 1, 50}, {1, 1, 200}}));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(*d.time_of(UserId(1), VenueId(1)), 50);
}

TEST(Deduplicate, IdentityAndPerPair) {
  const auto shared = deduplicate(events({{1, 7, 5}, {2, 7, 9}}));
  EXPECT_EQ(shared.size(), 2u);
  const auto again = deduplicate(shared.entries());
  EXPECT_EQ(again, shared);
}

TEST(Deduplicate, FromCorpusUsesLocalTime) {
  const auto r = parse("u1\tv1\t10000\t0\nu1\tv1\t9000\t60\n", kVenues);
  const auto d = deduplicate(r.corpus);
  EXPECT_EQ(*d.time_of(UserId(0), VenueId(0)), 10000);  // 9000 + 3600 is later
}

InteractionSet from_lists(const std::vector<std::vector<int>>& rows) {
  std::vector<Interaction> e;
  for (std::size_t u = 0; u < rows.size(); ++u) {
    for (int v : rows[u]) e.push_back({UserId(std::uint32_t(u)), VenueId(v), 0});
  }
  return InteractionSet(e);
}

TEST(KCore, AlreadyACore) {
  const auto s = from_lists({{1, 2}, {1, 2}});
  EXPECT_EQ(k_core(s, 2), s);
}

TEST(KCore, Cascade) {
  // u0:{i1}, u1:{i1,i2}, u2:{i2,i3,i4}, u3:{i3,i4}
  const auto s = from_lists({{1}, {1, 2}, {2, 3, 4}, {3, 4}});
  const auto core = k_core(s, 2);
  EXPECT_EQ(core, from_lists({{}, {}, {3, 4}, {3, 4}}));
  EXPECT_TRUE(core.venues_of(UserId(1)).empty());
}

TEST(KCore, DegenerateK) {
  const auto s = from_lists({{1}, {1, 2}, {0}});
  EXPECT_EQ(k_core(s, 1), s);
  EXPECT_THROW(k_core(s, 0), ConfigError);
  EXPECT_TRUE(k_core(s, 5).empty());
}

TEST(KCore, MatchesOneAtATimeOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int nu = 1 + int(rng() % 15), nv = 1 + int(rng() % 15);
    std::bernoulli_distribution coin(0.05 + 0.4 * double(rng() % 100) / 100.0);
    std::set<std::pair<int, int>> edges;
    std::vector<Interaction> e;
    for (int u = 0; u < nu; ++u)
      for (int v = 0; v < nv; ++v)
        if (coin(rng)) {
          edges.insert({u, v});
          e.push_back({UserId(u), VenueId(v), 0});
        }
    for (std::size_t k : {1u, 2u, 3u}) {
      const auto core = k_core(InteractionSet(e, nu, nv), k);
      const auto expect = oracle::k_core_one_at_a_time(edges, k, rng);
      std::set<std::pair<int, int>> got;
      core.for_each([&](const Interaction& x) { got.insert({int(x.user.value), int(x.venue.value)}); });
      EXPECT_EQ(got, expect);
      EXPECT_EQ(k_core(core, k), core);
      for (UserId u : core.users()) EXPECT_GE(core.venues_of(u).size(), k);
      for (VenueId v : core.venues()) EXPECT_GE(core.users_of(v).size(), k);
    }
  }
}

Timestamp noon(const char* date) { return day_start(parse_date(date)) + 12 * 3600; }

const DateWindow kTrain{parse_date("2012-05-01"), parse_date("2012-10-31")};
const DateWindow kTest{parse_date("2012-11-01"), parse_date("2012-11-30")};

TEST(TemporalSplit, AssignsByLocalDate) {
  const auto s = InteractionSet(events({{0, 0, noon("2012-05-01")},
                                        {0, 1, noon("2012-10-31")},
                                        {0, 2, noon("2012-11-01")},
                                        {0, 3, noon("2012-12-05")}}));
  const auto split = temporal_split(s, kTrain, kTest);
  EXPECT_EQ(split.train.size(), 2u);
  EXPECT_TRUE(split.train.contains(UserId(0), VenueId(0)));
  EXPECT_TRUE(split.train.contains(UserId(0), VenueId(1)));
  EXPECT_EQ(split.test.size(), 1u);
  EXPECT_TRUE(split.test.contains(UserId(0), VenueId(2)));
  EXPECT_EQ(split.discarded, 1u);
}

TEST(TemporalSplit, LocalDateDecidesNotUtc) {
  // 2012-11-01 02:00 UTC seen at UTC-5 is 2012-10-31 locally.
  const CheckIn c{UserId(0), VenueId(0), 1351735200, -300};
  EXPECT_EQ(format_date(local_date(c.utc_time)), "2012-11-01");
  const auto split =
      temporal_split(InteractionSet(events({{0, 0, local_time(c)}})), kTrain, kTest);
  EXPECT_EQ(split.train.size(), 1u);
  EXPECT_TRUE(split.test.empty());
}

TEST(TemporalSplit, EmptyAndInvalidWindows) {
  const auto split = temporal_split(InteractionSet(), kTrain, kTest);
  EXPECT_TRUE(split.train.empty());
  EXPECT_TRUE(split.test.empty());
  const DateWindow overlapping{parse_date("2012-10-15"), parse_date("2012-11-15")};
  EXPECT_THROW(temporal_split(InteractionSet(), kTrain, overlapping), ConfigError);
  EXPECT_THROW(temporal_split(InteractionSet(), kTest, kTrain), ConfigError);
  EXPECT_THROW(DateWindow::parse("2012-05-01"), ConfigError);
  EXPECT_EQ(DateWindow::parse("2012-05-01..2012-10-31").str(), "2012-05-01..2012-10-31");
}

TEST(TemporalSplit, PartitionsInput) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<Timestamp> t(noon("2012-04-01"), noon("2012-12-31"));
  std::vector<Interaction> e;
  for (int u = 0; u < 30; ++u)
    for (int v = 0; v < 30; ++v)
      if (rng() % 4 == 0) e.push_back({UserId(u), VenueId(v), t(rng)});
  const InteractionSet s(e);
  const auto split = temporal_split(s, kTrain, kTest);
  EXPECT_EQ(split.train.size() + split.test.size() + split.discarded, s.size());
  split.train.for_each([&](const Interaction& x) {
    EXPECT_TRUE(kTrain.contains(local_date(x.time)));
    EXPECT_FALSE(split.test.contains(x.user, x.venue));
  });
  split.test.for_each([&](const Interaction& x) { EXPECT_TRUE(kTest.contains(local_date(x.time))); });
}

CityTable table_of(std::initializer_list<const char*> cities_per_venue) {
  CityTable t;
  std::uint32_t v = 0;
  for (const char* c : cities_per_venue) {
    t.venues.push_back({VenueId(v++), GeoPoint::from_degrees(0, 0), t.cities.intern(c)});
  }
  return t;
}

TEST(PartitionByCity, DirectMapping) {
  const auto table = table_of({"A", "B"});
  const auto parts = partition_by_city(InteractionSet(events({{0, 0, 1}, {0, 1, 2}})), table);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts.at(CityId(0)), InteractionSet(events({{0, 0, 1}})));
  EXPECT_EQ(parts.at(CityId(1)), InteractionSet(events({{0, 1, 2}})));
}

TEST(PartitionByCity, SingleCityAndTotality) {
  const auto one = table_of({"A", "A", "A"});
  const auto s = InteractionSet(events({{0, 0, 1}, {1, 2, 2}, {2, 1, 3}}));
  const auto parts = partition_by_city(s, one);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts.begin()->second, s);

  std::mt19937_64 rng(8);
  CityTable many;
  for (std::uint32_t v = 0; v < 40; ++v) {
    many.venues.push_back({VenueId(v), GeoPoint::from_degrees(0, 0),
                           many.cities.intern(std::to_string(rng() % 5))});
  }
  std::vector<Interaction> e;
  for (int u = 0; u < 20; ++u)
    for (int v = 0; v < 40; ++v)
      if (rng() % 3 == 0) e.push_back({UserId(u), VenueId(v), 0});
  const InteractionSet big(e);
  std::size_t total = 0;
  for (const auto& [city, part] : partition_by_city(big, many)) {
    total += part.size();
    part.for_each([&](const Interaction& x) { EXPECT_EQ(many.city_of(x.venue), city); });
  }
  EXPECT_EQ(total, big.size());
}

TEST(PartitionByCity, MissingCityIsDataError) {
  const auto table = table_of({"A"});
  EXPECT_THROW(partition_by_city(InteractionSet(events({{0, 3, 1}})), table), DataError);
}

TEST(CorpusStats, FromCounts) {
  const auto s = InteractionSet(events({{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 2, 0}}));
  const auto st = corpus_stats(s);
  EXPECT_EQ(st.users, 2u);
  EXPECT_EQ(st.items, 3u);
  EXPECT_EQ(st.checkins, 4u);
  EXPECT_NEAR(st.density, 4.0 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(st.checkins_per_user, 2.0);
  EXPECT_NEAR(st.checkins_per_item, 4.0 / 3.0, 1e-15);

  const auto empty = corpus_stats(InteractionSet());
  EXPECT_EQ(empty.users + empty.items + empty.checkins, 0u);
  EXPECT_EQ(empty.density, 0.0);
  EXPECT_EQ(empty.checkins_per_user, 0.0);
}

TEST(Writers, InteractionsReingestToSameLocalDates) {
  const auto r = parse("u1\tv1\t1351735200\t-300\nu2\tv2\t1351735200\t600\n", kVenues);
  const auto d = deduplicate(r.corpus);
  std::ostringstream out;
  write_interactions(out, d, r.corpus);
  std::istringstream back_c(out.str()), back_v(kVenues);
  const auto again = parse_corpus(back_c, back_v);
  EXPECT_EQ(deduplicate(again.corpus), d);
}

}  // namespace
}  // namespace citycd
