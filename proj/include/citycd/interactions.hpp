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

#ifndef CITYCD_INTERACTIONS_HPP_
#define CITYCD_INTERACTIONS_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/error.hpp"

namespace citycd {

struct Interaction {
  UserId user;
  VenueId venue;
  Timestamp time = 0;  // earliest local visit

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Binary user x venue matrix with one timestamp per pair, stored as CSR rows
/// (user -> venues) and CSC columns (venue -> users). Handles are
/// corpus-global, so sets built from different slices of one corpus share
/// their id space and can be merged by concatenation.
class InteractionSet {
 public:
  InteractionSet() : row_ptr_(1, 0), col_ptr_(1, 0) {}

  /// Dimensions grow to cover every handle in `entries`. Throws DataError on
  /// a repeated (user, venue) pair.
  explicit InteractionSet(std::vector<Interaction> entries,
                          std::size_t user_dim = 0, std::size_t venue_dim = 0) {
    for (const auto& e : entries) {
      user_dim = std::max(user_dim, e.user.index() + 1);
      venue_dim = std::max(venue_dim, e.venue.index() + 1);
    }
    std::sort(entries.begin(), entries.end(),
              [](const Interaction& a, const Interaction& b) {
                return std::tie(a.user, a.venue) < std::tie(b.user, b.venue);
              });
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i].user == entries[i - 1].user &&
          entries[i].venue == entries[i - 1].venue) {
        throw DataError("duplicate interaction (user " +
                        std::to_string(entries[i].user.value) + ", venue " +
                        std::to_string(entries[i].venue.value) + ")");
      }
    }

    row_ptr_.assign(user_dim + 1, 0);
    row_venues_.reserve(entries.size());
    row_times_.reserve(entries.size());
    std::vector<std::size_t> col_count(venue_dim, 0);
    for (const auto& e : entries) {
      ++row_ptr_[e.user.index() + 1];
      row_venues_.push_back(e.venue);
      row_times_.push_back(e.time);
      ++col_count[e.venue.index()];
    }
    for (std::size_t u = 0; u < user_dim; ++u) row_ptr_[u + 1] += row_ptr_[u];

    col_ptr_.assign(venue_dim + 1, 0);
    for (std::size_t v = 0; v < venue_dim; ++v) {
      col_ptr_[v + 1] = col_ptr_[v] + col_count[v];
    }
    col_users_.resize(entries.size());
    std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (const auto& e : entries) col_users_[fill[e.venue.index()]++] = e.user;

    for (std::size_t u = 0; u < user_dim; ++u) {
      if (row_ptr_[u + 1] > row_ptr_[u]) ++active_users_;
    }
    for (std::size_t v = 0; v < venue_dim; ++v) {
      if (col_ptr_[v + 1] > col_ptr_[v]) ++active_venues_;
    }
  }

  std::size_t user_dim() const { return row_ptr_.size() - 1; }
  std::size_t venue_dim() const { return col_ptr_.size() - 1; }
  std::size_t size() const { return row_venues_.size(); }
  bool empty() const { return row_venues_.empty(); }

  /// Users and venues with at least one interaction.
  std::size_t active_users() const { return active_users_; }
  std::size_t active_venues() const { return active_venues_; }

  /// L^u, ascending. Empty for users outside the matrix.
  std::span<const VenueId> venues_of(UserId u) const {
    if (u.index() >= user_dim()) return {};
    return {row_venues_.data() + row_ptr_[u.index()],
            row_venues_.data() + row_ptr_[u.index() + 1]};
  }

  std::span<const Timestamp> times_of(UserId u) const {
    if (u.index() >= user_dim()) return {};
    return {row_times_.data() + row_ptr_[u.index()],
            row_times_.data() + row_ptr_[u.index() + 1]};
  }

  /// Users of a venue, ascending.
  std::span<const UserId> users_of(VenueId v) const {
    if (v.index() >= venue_dim()) return {};
    return {col_users_.data() + col_ptr_[v.index()],
            col_users_.data() + col_ptr_[v.index() + 1]};
  }

  std::optional<Timestamp> time_of(UserId u, VenueId v) const {
    const auto row = venues_of(u);
    auto it = std::lower_bound(row.begin(), row.end(), v);
    if (it == row.end() || *it != v) return std::nullopt;
    return times_of(u)[static_cast<std::size_t>(it - row.begin())];
  }

  bool contains(UserId u, VenueId v) const { return time_of(u, v).has_value(); }

  std::vector<UserId> users() const {
    std::vector<UserId> out;
    out.reserve(active_users_);
    for (std::size_t u = 0; u < user_dim(); ++u) {
      if (row_ptr_[u + 1] > row_ptr_[u]) out.emplace_back(std::uint32_t(u));
    }
    return out;
  }

  std::vector<VenueId> venues() const {
    std::vector<VenueId> out;
    out.reserve(active_venues_);
    for (std::size_t v = 0; v < venue_dim(); ++v) {
      if (col_ptr_[v + 1] > col_ptr_[v]) out.emplace_back(std::uint32_t(v));
    }
    return out;
  }

  /// |interactions| / (|active users| * |active venues|); 0 when empty.
  double density() const {
    if (empty()) return 0.0;
    return static_cast<double>(size()) /
           (static_cast<double>(active_users_) *
            static_cast<double>(active_venues_));
  }

  /// Visits every interaction in (user, venue) order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t u = 0; u < user_dim(); ++u) {
      for (std::size_t k = row_ptr_[u]; k < row_ptr_[u + 1]; ++k) {
        f(Interaction{UserId(std::uint32_t(u)), row_venues_[k], row_times_[k]});
      }
    }
  }

  std::vector<Interaction> entries() const {
    std::vector<Interaction> out;
    out.reserve(size());
    for_each([&](const Interaction& e) { out.push_back(e); });
    return out;
  }

  /// Content hash over the interactions (dimensions excluded).
  std::uint64_t fingerprint() const {
    Fnv1a h;
    for_each([&](const Interaction& e) {
      h.value(e.user.value);
      h.value(e.venue.value);
      h.value(e.time);
    });
    return h.digest();
  }

  /// Content equality; dimensions are not compared.
  friend bool operator==(const InteractionSet& a, const InteractionSet& b) {
    return a.size() == b.size() && a.entries() == b.entries();
  }

 private:
  std::vector<std::size_t> row_ptr_;
  std::vector<VenueId> row_venues_;
  std::vector<Timestamp> row_times_;
  std::vector<std::size_t> col_ptr_;
  std::vector<UserId> col_users_;
  std::size_t active_users_ = 0;
  std::size_t active_venues_ = 0;
};

}  // namespace citycd

#endif  // CITYCD_INTERACTIONS_HPP_
