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

// Raw check-in ingestion and the preprocessing chain:
// parse -> local time -> deduplicate -> k-core -> temporal split -> per city.

#ifndef CITYCD_INGEST_HPP_
#define CITYCD_INGEST_HPP_

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "citycd/core.hpp"
#include "citycd/error.hpp"
#include "citycd/interactions.hpp"

namespace citycd {

struct VenueRecord {
  VenueId venue;
  GeoPoint location;
  CityId city;
};

/// Venue coordinates and city membership, indexed by VenueId.
struct CityTable {
  Interner<CityId> cities;
  std::vector<VenueRecord> venues;

  CityId city_of(VenueId v) const {
    if (v.index() >= venues.size()) {
      throw DataError("venue " + std::to_string(v.value) + " has no city");
    }
    return venues[v.index()].city;
  }

  const GeoPoint& location_of(VenueId v) const {
    if (v.index() >= venues.size()) {
      throw DataError("venue " + std::to_string(v.value) + " has no location");
    }
    return venues[v.index()].location;
  }

  std::size_t city_count() const { return cities.size(); }
};

struct RawCorpus {
  Interner<UserId> users;
  Interner<VenueId> venue_names;
  CityTable table;
  std::vector<CheckIn> checkins;
};

struct RejectedLine {
  std::string source;  // "checkins" or "venues"
  std::size_t line = 0;
  std::string reason;
  std::string text;
};

struct ParseReport {
  std::size_t checkin_lines = 0;
  std::size_t venue_lines = 0;
  std::size_t skipped_lines = 0;  // comments and blanks
  std::vector<RejectedLine> rejected;

  std::size_t rejected_count(std::string_view reason) const {
    return static_cast<std::size_t>(
        std::count_if(rejected.begin(), rejected.end(),
                      [&](const RejectedLine& r) { return r.reason == reason; }));
  }
};

struct ParseResult {
  RawCorpus corpus;
  ParseReport report;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline int month_index(std::string_view name) {
  static constexpr std::string_view kMonths[] = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  for (int i = 0; i < 12; ++i) {
    if (kMonths[i] == name) return i + 1;
  }
  return 0;
}

/// Integer epoch seconds, or the "EEE MMM dd HH:mm:ss Z yyyy" literal.
inline std::optional<Timestamp> parse_utc_time(std::string_view s) {
  Timestamp epoch = 0;
  if (parse_number(s, epoch)) return epoch;

  std::vector<std::string_view> tok;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto sp = s.find(' ', start);
    const auto end = sp == std::string_view::npos ? s.size() : sp;
    if (end > start) tok.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  if (tok.size() != 6) return std::nullopt;
  const int month = month_index(tok[1]);
  unsigned day = 0;
  int year = 0;
  if (month == 0 || !parse_number(tok[2], day) || !parse_number(tok[5], year)) {
    return std::nullopt;
  }
  const auto& hms = tok[3];
  int hh = 0, mm = 0, ss = 0;
  if (hms.size() != 8 || hms[2] != ':' || hms[5] != ':' ||
      !parse_number(hms.substr(0, 2), hh) ||
      !parse_number(hms.substr(3, 2), mm) ||
      !parse_number(hms.substr(6, 2), ss) || hh > 23 || mm > 59 || ss > 60) {
    return std::nullopt;
  }
  const auto& zone = tok[4];
  int zone_hhmm = 0;
  if (zone.size() != 5 || (zone[0] != '+' && zone[0] != '-') ||
      !parse_number(zone.substr(1), zone_hhmm)) {
    return std::nullopt;
  }
  const int zone_min =
      (zone[0] == '-' ? -1 : 1) * ((zone_hhmm / 100) * 60 + zone_hhmm % 100);

  const LocalDate date{std::chrono::year{year},
                       std::chrono::month{static_cast<unsigned>(month)},
                       std::chrono::day{day}};
  if (!date.ok()) return std::nullopt;
  return day_start(date) + hh * 3600 + mm * 60 + ss - zone_min * 60;
}

inline std::string_view trim_eol(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Reads the venue file, then the check-in file. Malformed lines are kept in
/// the report with a reason; nothing is dropped silently.
inline ParseResult parse_corpus(std::istream& checkins, std::istream& venues) {
  if (!checkins || !venues) throw DataError("unreadable input stream");
  ParseResult result;
  auto& corpus = result.corpus;
  auto& report = result.report;

  auto reject = [&](std::string source, std::size_t line, std::string reason,
                    std::string_view text) {
    report.rejected.push_back(
        {std::move(source), line, std::move(reason), std::string(text)});
  };

  std::string buf;
  std::size_t line_no = 0;
  while (std::getline(venues, buf)) {
    ++line_no;
    const auto line = detail::trim_eol(buf);
    if (line.empty() || line.front() == '#') {
      ++report.skipped_lines;
      continue;
    }
    ++report.venue_lines;
    const auto f = detail::split_tabs(line);
    if (f.size() < 4 || f[0].empty() || f[3].empty()) {
      reject("venues", line_no, "field count", line);
      continue;
    }
    double lat = 0.0, lon = 0.0;
    if (!detail::parse_number(f[1], lat) || !detail::parse_number(f[2], lon)) {
      reject("venues", line_no, "bad field", line);
      continue;
    }
    GeoPoint location;
    try {
      location = GeoPoint::from_degrees(lat, lon);
    } catch (const InvalidInput&) {
      reject("venues", line_no, "bad coordinates", line);
      continue;
    }
    if (corpus.venue_names.find(f[0])) {
      reject("venues", line_no, "duplicate venue", line);
      continue;
    }
    const VenueId id = corpus.venue_names.intern(f[0]);
    const CityId city = corpus.table.cities.intern(f[3]);
    corpus.table.venues.push_back({id, location, city});
  }
  if (venues.bad()) throw DataError("I/O error while reading venue stream");

  line_no = 0;
  while (std::getline(checkins, buf)) {
    ++line_no;
    const auto line = detail::trim_eol(buf);
    if (line.empty() || line.front() == '#') {
      ++report.skipped_lines;
      continue;
    }
    ++report.checkin_lines;
    const auto f = detail::split_tabs(line);
    if (f.size() != 4 || f[0].empty() || f[1].empty()) {
      reject("checkins", line_no, "field count", line);
      continue;
    }
    const auto utc = detail::parse_utc_time(f[2]);
    std::int32_t offset = 0;
    if (!utc || !detail::parse_number(f[3], offset)) {
      reject("checkins", line_no, "bad field", line);
      continue;
    }
    if (offset < kMinOffsetMinutes || offset > kMaxOffsetMinutes) {
      reject("checkins", line_no, "offset out of range", line);
      continue;
    }
    if (*utc < kMinEpoch || *utc >= kMaxEpoch) {
      reject("checkins", line_no, "time out of range", line);
      continue;
    }
    const auto venue = corpus.venue_names.find(f[1]);
    if (!venue) {
      reject("checkins", line_no, "unknown venue", line);
      continue;
    }
    corpus.checkins.push_back(
        {corpus.users.intern(f[0]), *venue, *utc, offset});
  }
  if (checkins.bad()) throw DataError("I/O error while reading check-in stream");
  return result;
}

/// Keeps one interaction per (user, venue) with the earliest timestamp.
inline InteractionSet deduplicate(std::vector<Interaction> events,
                                  std::size_t user_dim = 0,
                                  std::size_t venue_dim = 0) {
  std::sort(events.begin(), events.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.venue, a.time) <
                     std::tie(b.user, b.venue, b.time);
            });
  auto last = std::unique(events.begin(), events.end(),
                          [](const Interaction& a, const Interaction& b) {
                            return a.user == b.user && a.venue == b.venue;
                          });
  events.erase(last, events.end());
  return InteractionSet(std::move(events), user_dim, venue_dim);
}

inline InteractionSet deduplicate(const RawCorpus& corpus) {
  std::vector<Interaction> events;
  events.reserve(corpus.checkins.size());
  for (const auto& c : corpus.checkins) {
    events.push_back({c.user, c.venue, local_time(c)});
  }
  return deduplicate(std::move(events), corpus.users.size(),
                     corpus.venue_names.size());
}

/// Maximal sub-matrix in which every surviving user and venue keeps at least
/// k interactions. Peels nodes below k until a fixed point.
inline InteractionSet k_core(const InteractionSet& data, std::size_t k) {
  if (k < 1) throw ConfigError("k-core requires k >= 1");
  const std::size_t nu = data.user_dim();
  const std::size_t nv = data.venue_dim();
  std::vector<std::size_t> udeg(nu), vdeg(nv);
  std::vector<char> ualive(nu, 1), valive(nv, 1);
  // Queue entries: user u as u, venue v as nu + v.
  std::deque<std::size_t> queue;
  for (std::size_t u = 0; u < nu; ++u) {
    udeg[u] = data.venues_of(UserId(std::uint32_t(u))).size();
    if (udeg[u] < k) {
      ualive[u] = 0;
      queue.push_back(u);
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    vdeg[v] = data.users_of(VenueId(std::uint32_t(v))).size();
    if (vdeg[v] < k) {
      valive[v] = 0;
      queue.push_back(nu + v);
    }
  }
  while (!queue.empty()) {
    const std::size_t node = queue.front();
    queue.pop_front();
    if (node < nu) {
      for (VenueId v : data.venues_of(UserId(std::uint32_t(node)))) {
        if (valive[v.index()] && --vdeg[v.index()] < k) {
          valive[v.index()] = 0;
          queue.push_back(nu + v.index());
        }
      }
    } else {
      for (UserId u : data.users_of(VenueId(std::uint32_t(node - nu)))) {
        if (ualive[u.index()] && --udeg[u.index()] < k) {
          ualive[u.index()] = 0;
          queue.push_back(u.index());
        }
      }
    }
  }
  std::vector<Interaction> kept;
  data.for_each([&](const Interaction& e) {
    if (ualive[e.user.index()] && valive[e.venue.index()]) kept.push_back(e);
  });
  return InteractionSet(std::move(kept), nu, nv);
}

/// Closed range of local calendar dates.
struct DateWindow {
  LocalDate first;
  LocalDate last;

  bool contains(LocalDate d) const { return first <= d && d <= last; }

  static DateWindow parse(std::string_view text) {
    const auto dots = text.find("..");
    if (dots == std::string_view::npos) {
      throw ConfigError("bad window '" + std::string(text) +
                        "' (expected YYYY-MM-DD..YYYY-MM-DD)");
    }
    DateWindow w{parse_date(text.substr(0, dots)), parse_date(text.substr(dots + 2))};
    if (w.last < w.first) {
      throw ConfigError("window ends before it starts: " + std::string(text));
    }
    return w;
  }

  std::string str() const { return format_date(first) + ".." + format_date(last); }
};

struct TemporalSplit {
  InteractionSet train;
  InteractionSet test;
  DateWindow train_window;
  DateWindow test_window;
  std::size_t discarded = 0;
};

inline void validate_windows(const DateWindow& train, const DateWindow& test) {
  if (train.last < train.first || test.last < test.first) {
    throw ConfigError("window ends before it starts");
  }
  if (!(train.last < test.first)) {
    throw ConfigError("training window " + train.str() +
                      " must end before test window " + test.str());
  }
}

/// Assigns each interaction by the local date of its earliest visit.
inline TemporalSplit temporal_split(const InteractionSet& data,
                                    const DateWindow& train_window,
                                    const DateWindow& test_window) {
  validate_windows(train_window, test_window);
  std::vector<Interaction> train, test;
  std::size_t discarded = 0;
  data.for_each([&](const Interaction& e) {
    const auto date = local_date(e.time);
    if (train_window.contains(date)) {
      train.push_back(e);
    } else if (test_window.contains(date)) {
      test.push_back(e);
    } else {
      ++discarded;
    }
  });
  return {InteractionSet(std::move(train), data.user_dim(), data.venue_dim()),
          InteractionSet(std::move(test), data.user_dim(), data.venue_dim()),
          train_window, test_window, discarded};
}

inline std::map<CityId, InteractionSet> partition_by_city(
    const InteractionSet& data, const CityTable& table) {
  std::map<CityId, std::vector<Interaction>> buckets;
  data.for_each([&](const Interaction& e) {
    buckets[table.city_of(e.venue)].push_back(e);
  });
  std::map<CityId, InteractionSet> out;
  for (auto& [city, entries] : buckets) {
    out.emplace(city, InteractionSet(std::move(entries), data.user_dim(),
                                     data.venue_dim()));
  }
  return out;
}

struct CorpusStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t checkins = 0;
  double density = 0.0;
  double checkins_per_user = 0.0;
  double checkins_per_item = 0.0;
};

inline CorpusStats corpus_stats(const InteractionSet& data) {
  CorpusStats s;
  s.users = data.active_users();
  s.items = data.active_venues();
  s.checkins = data.size();
  if (s.checkins == 0) return s;
  s.density = data.density();
  s.checkins_per_user = double(s.checkins) / double(s.users);
  s.checkins_per_item = double(s.checkins) / double(s.items);
  return s;
}

inline std::string format_real(double v, int precision = 17) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

inline void write_stats(std::ostream& out, const CorpusStats& s) {
  out << "users=" << s.users << '\n'
      << "items=" << s.items << '\n'
      << "checkins=" << s.checkins << '\n'
      << "density=" << format_real(s.density) << '\n'
      << "checkins_per_user=" << format_real(s.checkins_per_user) << '\n'
      << "checkins_per_item=" << format_real(s.checkins_per_item) << '\n';
}

/// Writes interactions back in the check-in format. The stored timestamp is
/// already local, so it is emitted with a zero offset; re-ingesting the file
/// reproduces the same local dates.
inline void write_interactions(std::ostream& out, const InteractionSet& data,
                               const RawCorpus& corpus) {
  data.for_each([&](const Interaction& e) {
    out << corpus.users.name(e.user) << '\t'
        << corpus.venue_names.name(e.venue) << '\t' << e.time << "\t0\n";
  });
}

inline void write_parse_report(std::ostream& out, const ParseReport& r) {
  out << "checkin_lines=" << r.checkin_lines << '\n'
      << "venue_lines=" << r.venue_lines << '\n'
      << "skipped_lines=" << r.skipped_lines << '\n'
      << "rejected=" << r.rejected.size() << '\n';
  for (const auto& rej : r.rejected) {
    out << "reject\t" << rej.source << ':' << rej.line << '\t' << rej.reason
        << '\t' << rej.text << '\n';
  }
}

}  // namespace citycd

#endif  // CITYCD_INGEST_HPP_
