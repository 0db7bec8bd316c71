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

// The recommender family. Every model is fitted at construction and is
// immutable afterwards; scoring is reentrant.

#ifndef CITYCD_RECOMMENDERS_HPP_
#define CITYCD_RECOMMENDERS_HPP_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/error.hpp"
#include "citycd/ingest.hpp"
#include "citycd/interactions.hpp"
#include "citycd/parallel.hpp"
#include "citycd/similarity.hpp"

namespace citycd {

/// A score, or nullopt when the model cannot score the candidate.
using Score = std::optional<double>;

class RecommenderModel {
 public:
  virtual ~RecommenderModel() = default;

  virtual std::string name() const = 0;

  /// One entry per candidate, in order.
  virtual std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const = 0;

  Score score(UserId user, VenueId venue) const {
    const VenueId one[] = {venue};
    return score_candidates(user, one).front();
  }
};

using Neighbor = std::pair<std::uint32_t, double>;

namespace detail {

// Keeps the k most similar entries, similarity descending, ties by id.
inline void keep_top_k(std::vector<Neighbor>& items, std::size_t k) {
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  if (items.size() > k) {
    std::partial_sort(items.begin(), items.begin() + std::ptrdiff_t(k),
                      items.end(), better);
    items.resize(k);
  } else {
    std::sort(items.begin(), items.end(), better);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

class RandomModel final : public RecommenderModel {
 public:
  explicit RandomModel(std::uint64_t seed) : seed_(seed) {}

  std::string name() const override { return "rnd"; }

  std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const override {
    std::vector<Score> out;
    out.reserve(candidates.size());
    for (VenueId v : candidates) {
      const std::uint64_t key =
          (std::uint64_t(user.value) << 32) | std::uint64_t(v.value);
      const std::uint64_t h = splitmix64(seed_ ^ splitmix64(key));
      out.emplace_back(double(h >> 11) * 0x1.0p-53);
    }
    return out;
  }

 private:
  std::uint64_t seed_;
};

/// Number of distinct training users per venue, independent of the user.
class PopularityModel final : public RecommenderModel {
 public:
  explicit PopularityModel(const InteractionSet& train)
      : counts_(train.venue_dim()) {
    for (std::size_t v = 0; v < counts_.size(); ++v) {
      counts_[v] = double(train.users_of(VenueId(std::uint32_t(v))).size());
    }
  }

  std::string name() const override { return "pop"; }

  std::vector<Score> score_candidates(
      UserId, std::span<const VenueId> candidates) const override {
    std::vector<Score> out;
    out.reserve(candidates.size());
    for (VenueId v : candidates) {
      out.emplace_back(v.index() < counts_.size() ? counts_[v.index()] : 0.0);
    }
    return out;
  }

 private:
  std::vector<double> counts_;
};

/// Ranks venues by closeness to the spherical centroid of the user's training
/// venues. Score is the negated distance, so the nearest venue ranks first.
class AvgDisModel final : public RecommenderModel {
 public:
  AvgDisModel(const InteractionSet& train,
              std::shared_ptr<const CityTable> table,
              double radius_km = kEarthRadiusKm)
      : table_(std::move(table)), radius_km_(radius_km),
        centroids_(train.user_dim()) {
    std::vector<GeoPoint> points;
    for (UserId u : train.users()) {
      points.clear();
      for (VenueId v : train.venues_of(u)) points.push_back(table_->location_of(v));
      try {
        centroids_[u.index()] = geographic_midpoint(points);
      } catch (const DegenerateMidpoint&) {
        // left unscoreable
      }
    }
  }

  std::string name() const override { return "avgdis"; }

  const std::optional<GeoPoint>& centroid(UserId u) const {
    static const std::optional<GeoPoint> none;
    return u.index() < centroids_.size() ? centroids_[u.index()] : none;
  }

  std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const override {
    std::vector<Score> out(candidates.size());
    const auto& c = centroid(user);
    if (!c) return out;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      out[k] = -haversine_km(*c, table_->location_of(candidates[k]), radius_km_);
    }
    return out;
  }

 private:
  std::shared_ptr<const CityTable> table_;
  double radius_km_;
  std::vector<std::optional<GeoPoint>> centroids_;
};

/// User-based k-NN. N_k(u) holds the k users with the highest strictly
/// positive similarity; score(u, i) sums the similarities of neighbours that
/// visited i. Users without neighbours are not scoreable.
class UserKnnModel final : public RecommenderModel {
 public:
  UserKnnModel(std::shared_ptr<const InteractionSet> train, KnnParams params)
      : train_(std::move(train)), params_(params) {
    params_.validate();
  }

  std::string name() const override { return "ub"; }

  std::vector<Neighbor> neighbors(UserId u) const {
    const auto& train = *train_;
    const auto mine = train.venues_of(u);
    if (mine.empty()) return {};
    std::unordered_map<std::uint32_t, std::size_t> common;
    for (VenueId v : mine) {
      for (UserId w : train.users_of(v)) {
        if (w != u) ++common[w.value];
      }
    }
    std::vector<Neighbor> out;
    out.reserve(common.size());
    for (const auto& [w, inter] : common) {
      const double s = params_.similarity(
          inter, mine.size(), train.venues_of(UserId(w)).size());
      if (s > 0.0) out.emplace_back(w, s);
    }
    detail::keep_top_k(out, params_.k);
    return out;
  }

  std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const override {
    std::vector<Score> out(candidates.size());
    const auto nbrs = neighbors(user);
    if (nbrs.empty()) return out;
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& [w, s] : nbrs) {
      for (VenueId j : train_->venues_of(UserId(w))) acc[j.value] += s;
    }
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      auto it = acc.find(candidates[k].value);
      out[k] = it == acc.end() ? 0.0 : it->second;
    }
    return out;
  }

 private:
  std::shared_ptr<const InteractionSet> train_;
  KnnParams params_;
};

/// Item-based k-NN. N_k(i) holds the k venues most similar to i by user-set
/// similarity; score(u, i) sums sim(i, j) over j in N_k(i) visited by u. A
/// candidate none of whose neighbours the user visited is not scoreable.
class ItemKnnModel final : public RecommenderModel {
 public:
  /// Neighbourhoods of `precompute` are built up front; others on demand.
  ItemKnnModel(std::shared_ptr<const InteractionSet> train, KnnParams params,
               std::span<const VenueId> precompute = {}, std::size_t jobs = 1)
      : train_(std::move(train)), params_(params) {
    params_.validate();
    std::vector<std::vector<Neighbor>> built(precompute.size());
    parallel_for(precompute.size(), jobs,
                 [&](std::size_t k) { built[k] = compute(precompute[k]); });
    for (std::size_t k = 0; k < precompute.size(); ++k) {
      cache_.emplace(precompute[k].value, std::move(built[k]));
    }
  }

  std::string name() const override { return "ib"; }

  std::vector<Neighbor> neighbors(VenueId i) const {
    auto it = cache_.find(i.value);
    return it != cache_.end() ? it->second : compute(i);
  }

  std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const override {
    std::vector<Score> out(candidates.size());
    const auto mine = train_->venues_of(user);
    if (mine.empty()) return out;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      auto it = cache_.find(candidates[k].value);
      std::vector<Neighbor> local;
      if (it == cache_.end()) local = compute(candidates[k]);
      const auto& nbrs = it != cache_.end() ? it->second : local;
      bool hit = false;
      double s = 0.0;
      for (const auto& [j, sim] : nbrs) {
        if (std::binary_search(mine.begin(), mine.end(), VenueId(j))) {
          s += sim;
          hit = true;
        }
      }
      if (hit) out[k] = s;
    }
    return out;
  }

 private:
  std::vector<Neighbor> compute(VenueId i) const {
    const auto& train = *train_;
    const auto visitors = train.users_of(i);
    if (visitors.empty()) return {};
    std::unordered_map<std::uint32_t, std::size_t> common;
    for (UserId w : visitors) {
      for (VenueId j : train.venues_of(w)) {
        if (j != i) ++common[j.value];
      }
    }
    std::vector<Neighbor> out;
    out.reserve(common.size());
    for (const auto& [j, inter] : common) {
      const double s = params_.similarity(
          inter, visitors.size(), train.users_of(VenueId(j)).size());
      if (s > 0.0) out.emplace_back(j, s);
    }
    detail::keep_top_k(out, params_.k);
    return out;
  }

  std::shared_ptr<const InteractionSet> train_;
  KnnParams params_;
  std::unordered_map<std::uint32_t, std::vector<Neighbor>> cache_;
};

/// Scales one component's scores over the candidate set into [0, 1] by its
/// maximum. Nonnegative components divide by the maximum (all-zero stays 0).
/// Components with negative scores (distances) use max/score, which keeps
/// the order and maps the best candidate to 1. Unscoreable entries give 0.
inline std::vector<double> normalize_by_max(std::span<const Score> scores) {
  std::vector<double> out(scores.size(), 0.0);
  std::optional<double> top;
  bool has_negative = false;
  for (const auto& s : scores) {
    if (!s) continue;
    if (!top || *s > *top) top = *s;
    if (*s < 0.0) has_negative = true;
  }
  if (!top) return out;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!scores[k]) continue;
    const double s = *scores[k];
    if (*top > 0.0) {
      out[k] = s / *top;
    } else if (has_negative) {
      out[k] = s == 0.0 ? 1.0 : *top / s;
    }
  }
  return out;
}

/// Hybrid of popularity, user k-NN and AvgDis: the sum of each component's
/// max-normalized score. Always scores every candidate.
class PgnModel final : public RecommenderModel {
 public:
  PgnModel(std::shared_ptr<const RecommenderModel> popularity,
           std::shared_ptr<const RecommenderModel> user_knn,
           std::shared_ptr<const RecommenderModel> avgdis)
      : components_{std::move(popularity), std::move(user_knn),
                    std::move(avgdis)} {}

  std::string name() const override { return "pgn"; }

  std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const override {
    std::vector<double> sum(candidates.size(), 0.0);
    for (const auto& c : components_) {
      const auto raw = c->score_candidates(user, candidates);
      const auto norm = normalize_by_max(raw);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += norm[k];
    }
    return {sum.begin(), sum.end()};
  }

 private:
  std::shared_ptr<const RecommenderModel> components_[3];
};

}  // namespace citycd

#endif  // CITYCD_RECOMMENDERS_HPP_
