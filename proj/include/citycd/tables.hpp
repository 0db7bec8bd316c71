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

// Result tables: one row per (city, strategy), one column per recommender,
// cross-domain cells carrying the change against the single-domain row.

#ifndef CITYCD_TABLES_HPP_
#define CITYCD_TABLES_HPP_

#include <algorithm>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "citycd/error.hpp"
#include "citycd/evaluation.hpp"
#include "citycd/ingest.hpp"

namespace citycd {

struct MetricRow {
  std::string city;
  std::string strategy;
  std::string recommender;
  std::string metric;
  std::size_t cutoff = 0;
  double value = 0.0;
  std::size_t evaluated_users = 0;
  std::size_t abstained_users = 0;
};

/// Reads rows written by write_metric_rows under kMetricCsvHeader.
inline std::vector<MetricRow> read_metric_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim_eol(line) != kMetricCsvHeader) {
    throw DataError("metric CSV: missing or unexpected header");
  }
  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim_eol(line);
    if (text.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = text;
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    MetricRow r;
    if (f.size() != 8 || !detail::parse_number(f[4], r.cutoff) ||
        !detail::parse_number(f[5], r.value) ||
        !detail::parse_number(f[6], r.evaluated_users) ||
        !detail::parse_number(f[7], r.abstained_users)) {
      throw DataError("metric CSV line " + std::to_string(line_no) + " is malformed");
    }
    r.city = f[0];
    r.strategy = f[1];
    r.recommender = f[2];
    r.metric = f[3];
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ResultCell {
  std::optional<double> value;
  std::optional<double> delta;  // cross-domain rows only
  bool best = false;            // highest value in the row
  bool max_gain = false;        // largest positive delta in the row
  bool max_loss = false;        // largest negative delta in the row
};

struct ResultRow {
  std::string city;
  std::string strategy;
  std::vector<ResultCell> cells;  // parallel to ResultTable::columns
};

struct ResultTable {
  std::string metric;
  std::size_t cutoff = 0;
  std::vector<std::string> columns;
  std::vector<ResultRow> rows;
};

inline constexpr const char* kSingleStrategy = "single";

/// Builds the table for one metric. Rows and columns keep first-appearance
/// order; ties on any marker go to the leftmost column.
inline ResultTable build_result_table(std::span<const MetricRow> rows,
                                      std::string_view metric) {
  ResultTable t;
  t.metric = metric;
  auto column_of = [&](const std::string& rec) {
    auto it = std::find(t.columns.begin(), t.columns.end(), rec);
    if (it != t.columns.end()) return std::size_t(it - t.columns.begin());
    t.columns.push_back(rec);
    for (auto& row : t.rows) row.cells.emplace_back();
    return t.columns.size() - 1;
  };
  auto row_of = [&](const std::string& city, const std::string& strategy) -> ResultRow& {
    for (auto& r : t.rows) {
      if (r.city == city && r.strategy == strategy) return r;
    }
    t.rows.push_back({city, strategy, std::vector<ResultCell>(t.columns.size())});
    return t.rows.back();
  };
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    if (t.cutoff != 0 && t.cutoff != r.cutoff) {
      throw DataError("metric rows mix cutoffs " + std::to_string(t.cutoff) + " and " +
                      std::to_string(r.cutoff));
    }
    t.cutoff = r.cutoff;
    const auto col = column_of(r.recommender);
    row_of(r.city, r.strategy).cells[col].value = r.value;
  }

  for (auto& row : t.rows) {
    const ResultRow* single = nullptr;
    if (row.strategy != kSingleStrategy) {
      for (const auto& r : t.rows) {
        if (r.city == row.city && r.strategy == kSingleStrategy) single = &r;
      }
    }
    std::optional<std::size_t> best, gain, loss;
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      auto& cell = row.cells[c];
      if (!cell.value) continue;
      if (!best || *cell.value > *row.cells[*best].value) best = c;
      if (single && single->cells[c].value) {
        cell.delta = delta_percent(*cell.value, *single->cells[c].value);
      }
      if (!cell.delta) continue;
      if (*cell.delta > 0 && (!gain || *cell.delta > *row.cells[*gain].delta)) gain = c;
      if (*cell.delta < 0 && (!loss || *cell.delta < *row.cells[*loss].delta)) loss = c;
    }
    if (best) row.cells[*best].best = true;
    if (gain) row.cells[*gain].max_gain = true;
    if (loss) row.cells[*loss].max_loss = true;
  }
  return t;
}

/// Long form: one line per cell, full precision.
inline void write_table_csv(std::ostream& out, const ResultTable& t) {
  out << "city,strategy,recommender,metric,cutoff,value,delta_percent,best,max_gain,max_loss\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto& cell = row.cells[c];
      if (!cell.value) continue;
      out << row.city << ',' << row.strategy << ',' << t.columns[c] << ',' << t.metric
          << ',' << t.cutoff << ',' << format_real(*cell.value) << ','
          << (cell.delta ? format_real(*cell.delta) : "") << ',' << int(cell.best) << ','
          << int(cell.max_gain) << ',' << int(cell.max_loss) << '\n';
    }
  }
}

inline std::string format_fixed(double v, int decimals, bool sign = false) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), sign ? "%+.*f" : "%.*f", decimals, v);
  return buf;
}

/// Aligned text, values to 3 decimals. Markers: '*' best in row, '^' largest
/// gain, 'v' largest loss.
inline void write_table_text(std::ostream& out, const ResultTable& t) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"city", "strategy"};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  grid.push_back(header);
  for (const auto& row : t.rows) {
    std::vector<std::string> line{row.city, row.strategy};
    for (const auto& cell : row.cells) {
      std::string s = cell.value ? format_fixed(*cell.value, 3) : "-";
      if (cell.best) s += '*';
      if (cell.delta) s += " (" + format_fixed(*cell.delta, 2, true) + "%)";
      if (cell.max_gain) s += '^';
      if (cell.max_loss) s += 'v';
      line.push_back(std::move(s));
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  out << t.metric << '@' << t.cutoff << '\n';
  for (const auto& line : grid) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      text += line[c];
      if (c + 1 < line.size()) text += std::string(width[c] - line[c].size() + 2, ' ');
    }
    out << text << '\n';
  }
  out << "* best in row, ^ largest gain, v largest loss vs single\n";
}

}  // namespace citycd

#endif  // CITYCD_TABLES_HPP_
