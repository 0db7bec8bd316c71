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

// Identifier handles, interning, geodesic primitives and local-time arithmetic
// shared by every other component.

#ifndef CITYCD_CORE_HPP_
#define CITYCD_CORE_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "citycd/error.hpp"

namespace citycd {

/// Dense integer handle, contiguous from 0 within one corpus. The tag keeps
/// users, venues and cities from being mixed up.
template <class Tag>
struct Handle {
  std::uint32_t value = 0;

  constexpr Handle() = default;
  constexpr explicit Handle(std::uint32_t v) : value(v) {}
  constexpr std::size_t index() const { return value; }

  friend constexpr auto operator<=>(Handle, Handle) = default;
};

struct UserTag {};
struct VenueTag {};
struct CityTag {};

using UserId = Handle<UserTag>;
using VenueId = Handle<VenueTag>;
using CityId = Handle<CityTag>;

/// Maps raw string identifiers to dense handles in first-seen order.
template <class Id>
class Interner {
 public:
  Id intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return Id(it->second);
    const auto next = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), next);
    return Id(next);
  }

  std::optional<Id> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return Id(it->second);
  }

  const std::string& name(Id id) const {
    if (id.index() >= names_.size()) {
      throw InvalidInput("unknown handle " + std::to_string(id.value));
    }
    return names_[id.index()];
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// ---------------------------------------------------------------------------
// Geodesy

inline constexpr double kEarthRadiusKm = 6371.0;

/// Latitude in [-90, 90], longitude normalized into (-180, 180].
class GeoPoint {
 public:
  constexpr GeoPoint() = default;

  static GeoPoint from_degrees(double lat, double lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon)) {
      throw InvalidInput("non-finite coordinate");
    }
    if (lat < -90.0 || lat > 90.0) {
      throw InvalidInput("latitude out of range: " + std::to_string(lat));
    }
    lon = std::fmod(lon, 360.0);
    if (lon <= -180.0) lon += 360.0;
    if (lon > 180.0) lon -= 360.0;
    return GeoPoint(lat, lon);
  }

  constexpr double lat() const { return lat_; }
  constexpr double lon() const { return lon_; }

  friend constexpr bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  constexpr GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {}

  double lat_ = 0.0;
  double lon_ = 0.0;
};

namespace detail {
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}  // namespace detail

/// Great-circle distance on a sphere of the given radius.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b,
                           double radius_km = kEarthRadiusKm) {
  const double lat1 = a.lat() * detail::kDegToRad;
  const double lat2 = b.lat() * detail::kDegToRad;
  const double sin_dlat = std::sin((lat2 - lat1) / 2.0);
  const double sin_dlon =
      std::sin((b.lon() - a.lon()) * detail::kDegToRad / 2.0);
  const double h = sin_dlat * sin_dlat +
                   std::cos(lat1) * std::cos(lat2) * sin_dlon * sin_dlon;
  return 2.0 * radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Spherical centroid: mean of the unit vectors, projected back to the
/// sphere. Throws DegenerateMidpoint when the mean vector vanishes.
inline GeoPoint geographic_midpoint(std::span<const GeoPoint> points) {
  if (points.empty()) throw InvalidInput("midpoint of an empty point list");
  if (points.size() == 1) return points.front();
  double x = 0.0, y = 0.0, z = 0.0;
  for (const auto& p : points) {
    const double lat = p.lat() * detail::kDegToRad;
    const double lon = p.lon() * detail::kDegToRad;
    x += std::cos(lat) * std::cos(lon);
    y += std::cos(lat) * std::sin(lon);
    z += std::sin(lat);
  }
  const double n = static_cast<double>(points.size());
  x /= n;
  y /= n;
  z /= n;
  if (std::sqrt(x * x + y * y + z * z) < 1e-12) {
    throw DegenerateMidpoint("average vector vanishes (antipodal points)");
  }
  const double lat = std::atan2(z, std::hypot(x, y)) * detail::kRadToDeg;
  const double lon = std::atan2(y, x) * detail::kRadToDeg;
  return GeoPoint::from_degrees(lat, lon);
}

// ---------------------------------------------------------------------------
// Time

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;
using LocalDate = std::chrono::year_month_day;

inline constexpr std::int32_t kMinOffsetMinutes = -720;
inline constexpr std::int32_t kMaxOffsetMinutes = 840;
// 1970-01-01 .. 2100-01-01
inline constexpr Timestamp kMinEpoch = 0;
inline constexpr Timestamp kMaxEpoch = 4102444800;

struct CheckIn {
  UserId user;
  VenueId venue;
  Timestamp utc_time = 0;
  std::int32_t tz_offset_min = 0;
};

constexpr Timestamp local_time(const CheckIn& c) {
  return c.utc_time + 60 * static_cast<Timestamp>(c.tz_offset_min);
}

/// Calendar date of a local timestamp, proleptic Gregorian, no DST.
inline LocalDate local_date(Timestamp local) {
  using namespace std::chrono;
  const auto days_since_epoch =
      static_cast<int>(local >= 0 ? local / 86400 : (local - 86399) / 86400);
  return year_month_day{sys_days{days{days_since_epoch}}};
}

/// Midnight of a date as seconds since the epoch.
inline Timestamp day_start(LocalDate date) {
  using namespace std::chrono;
  return static_cast<Timestamp>(sys_days{date}.time_since_epoch().count()) *
         86400;
}

/// Parses YYYY-MM-DD.
inline LocalDate parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string s(text);
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
    throw ConfigError("bad date '" + s + "' (expected YYYY-MM-DD)");
  }
  LocalDate date{std::chrono::year{y}, std::chrono::month{m},
                 std::chrono::day{d}};
  if (!date.ok()) throw ConfigError("invalid calendar date '" + s + "'");
  return date;
}

inline std::string format_date(LocalDate date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(date.year()),
                unsigned(date.month()), unsigned(date.day()));
  return buf;
}

// ---------------------------------------------------------------------------
// Stable hashing, used for seeds and cache fingerprints.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void text(std::string_view s) {
    bytes(s.data(), s.size());
    const char sep = '\x1f';
    bytes(&sep, 1);
  }
  template <class T>
    requires std::is_trivially_copyable_v<T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Seed for a named component derived from the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
  Fnv1a h;
  h.value(master);
  h.text(name);
  return splitmix64(h.digest());
}

}  // namespace citycd

#endif  // CITYCD_CORE_HPP_
