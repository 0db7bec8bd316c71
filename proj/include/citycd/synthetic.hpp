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

// Planted synthetic corpora. Each city places its venues around a ring and
// every user favours one arc of it, at the same position in every city, so
// data from a city sharing many users carries signal about the target.

#ifndef CITYCD_SYNTHETIC_HPP_
#define CITYCD_SYNTHETIC_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/ingest.hpp"

namespace citycd {

struct PlantedCity {
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::int32_t tz_offset_min = 0;
  std::size_t users = 0;  // including shared users
};

/// `count` users are active in both cities.
struct PlantedShare {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t count = 0;
};

struct PlantedSpec {
  std::vector<PlantedCity> cities;
  std::vector<PlantedShare> shares;
  std::size_t venues_per_city = 60;  // placed around a ring
  std::size_t taste_width = 8;       // consecutive ring venues a user favours
  double ring_radius_km = 4.0;
  double venue_jitter_km = 0.3;
  double taste_probability = 0.85;  // a visit goes to the favoured arc
  std::size_t min_train_visits = 3;
  std::size_t max_train_visits = 8;
  std::size_t min_test_visits = 1;
  std::size_t max_test_visits = 3;
  // Shared users live in one of their cities and only visit the other.
  std::size_t min_away_train_visits = 1;
  std::size_t max_away_train_visits = 2;
  // Local dates: training May to October 2012, test November 2012.
  std::int64_t train_first_day = 15461;  // 2012-05-01
  std::int64_t train_days = 184;
  std::int64_t test_first_day = 15645;  // 2012-11-01
  std::int64_t test_days = 30;
  std::uint64_t seed = 1;
};

/// The shipped fixture: A and B are 42 km apart and share 30% of their
/// users (Jaccard); C is far away, the largest, and shares one user with A.
inline PlantedSpec fixture_spec(std::uint64_t seed = 7) {
  PlantedSpec s;
  s.cities = {{"Alphaville", 40.0, 0.0, 0, 120},
              {"Betaburg", 40.0, 0.5, 0, 100},
              {"Gammagrad", 40.0, 60.0, 240, 160}};
  s.shares = {{0, 1, 51}, {0, 2, 1}};
  s.seed = seed;
  return s;
}

/// The fixture scaled up eightfold with no distant link, large enough that
/// the sign of a cross-domain change is stable across seeds. A single shared
/// user would make every change against the distant city a coin flip.
inline PlantedSpec directional_spec(std::uint64_t seed) {
  auto s = fixture_spec(seed);
  for (auto& c : s.cities) c.users *= 8;
  s.shares = {{0, 1, 51 * 8}};
  return s;
}

struct PlantedCorpus {
  std::string checkins;  // check-in TSV text
  std::string venues;    // venue TSV text
};

namespace detail {

inline GeoPoint offset_km(double lat, double lon, double north_km, double east_km) {
  const double dlat = north_km / kEarthRadiusKm * detail::kRadToDeg;
  const double dlon =
      east_km / (kEarthRadiusKm * std::cos(lat * detail::kDegToRad)) * detail::kRadToDeg;
  return GeoPoint::from_degrees(lat + dlat, lon + dlon);
}

}  // namespace detail

inline PlantedCorpus make_planted_corpus(const PlantedSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const std::size_t nv = spec.venues_per_city;

  std::string venues = "# venue\tlat\tlon\tcity\n";
  char buf[160];
  for (std::size_t c = 0; c < spec.cities.size(); ++c) {
    const auto& city = spec.cities[c];
    for (std::size_t v = 0; v < nv; ++v) {
      const double angle = 2.0 * std::numbers::pi * double(v) / double(nv);
      const auto p = detail::offset_km(
          city.lat, city.lon,
          spec.ring_radius_km * std::cos(angle) + spec.venue_jitter_km * gauss(rng),
          spec.ring_radius_km * std::sin(angle) + spec.venue_jitter_km * gauss(rng));
      std::snprintf(buf, sizeof(buf), "c%zu-v%03zu\t%.6f\t%.6f\t%s\n", c, v, p.lat(),
                    p.lon(), city.name.c_str());
      venues += buf;
    }
  }

  // Users: shared users first, then each city's own.
  std::vector<std::vector<std::size_t>> members(spec.cities.size());
  std::vector<std::size_t> home;  // per user
  std::size_t next_user = 0;
  for (const auto& s : spec.shares) {
    for (std::size_t i = 0; i < s.count; ++i) {
      members[s.a].push_back(next_user);
      members[s.b].push_back(next_user);
      home.push_back(pick(0, 1) ? s.b : s.a);
      ++next_user;
    }
  }
  for (std::size_t c = 0; c < spec.cities.size(); ++c) {
    while (members[c].size() < spec.cities[c].users) {
      members[c].push_back(next_user++);
      home.push_back(c);
    }
  }
  // A user's favoured arc starts at the same ring position in every city.
  std::vector<std::size_t> taste(next_user);
  for (auto& t : taste) t = pick(0, nv - 1);

  // Popularity within an arc decays with the offset from its start.
  std::vector<double> weight(spec.taste_width);
  for (std::size_t k = 0; k < weight.size(); ++k) weight[k] = 1.0 / (1.0 + 0.25 * double(k));
  std::discrete_distribution<std::size_t> in_arc(weight.begin(), weight.end());

  std::string checkins = "# user\tvenue\tutc\toffset\n";
  for (std::size_t c = 0; c < spec.cities.size(); ++c) {
    const auto& city = spec.cities[c];
    for (std::size_t u : members[c]) {
      auto emit = [&](std::size_t visits, std::int64_t first_day, std::int64_t days) {
        for (std::size_t k = 0; k < visits; ++k) {
          const std::size_t v = unit(rng) < spec.taste_probability
                                    ? (taste[u] + in_arc(rng)) % nv
                                    : pick(0, nv - 1);
          const std::int64_t day = first_day + std::int64_t(pick(0, std::size_t(days - 1)));
          const std::int64_t local = day * 86400 + std::int64_t(pick(8 * 3600, 22 * 3600));
          const std::int64_t utc = local - 60 * std::int64_t(city.tz_offset_min);
          std::snprintf(buf, sizeof(buf), "u%04zu\tc%zu-v%03zu\t%lld\t%d\n", u, c, v,
                        static_cast<long long>(utc), city.tz_offset_min);
          checkins += buf;
        }
      };
      const bool away = home[u] != c;
      emit(away ? pick(spec.min_away_train_visits, spec.max_away_train_visits)
                : pick(spec.min_train_visits, spec.max_train_visits),
           spec.train_first_day, spec.train_days);
      emit(pick(spec.min_test_visits, spec.max_test_visits), spec.test_first_day,
           spec.test_days);
    }
  }
  return {std::move(checkins), std::move(venues)};
}

}  // namespace citycd

#endif  // CITYCD_SYNTHETIC_HPP_
