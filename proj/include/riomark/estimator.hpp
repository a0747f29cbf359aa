// Copyright 2026 The riomark Authors
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

#pragma once

// Overreporting flags and stratified raw rates. An activity is overreported
// when its reported marker exceeds the classifier's effective prediction
// (99 mapped to 0 first). Records reported as 0 cannot be overreported and
// must be filtered out before flagging.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "riomark/error.hpp"
#include "riomark/ingest.hpp"

namespace riomark {

inline RioMarker effective_marker(RioMarker m) {
  return m.value == 99 ? RioMarker{0} : m;
}

inline bool overreport_flag(RioMarker reported, RioMarker predicted) {
  if (reported.value != 1 && reported.value != 2) {
    throw Error("flag: reported marker must be 1 or 2 "
                "(record should have been filtered)");
  }
  return reported.value > effective_marker(predicted).value;
}

struct OverreportFlag {
  std::string id;
  RioMarker reported;
  RioMarker predicted_effective;
  bool overreported = false;
};

inline OverreportFlag make_flag(const std::string& id, RioMarker reported,
                                RioMarker predicted) {
  OverreportFlag f;
  f.id = id;
  f.reported = reported;
  f.predicted_effective = effective_marker(predicted);
  f.overreported = overreport_flag(reported, predicted);
  return f;
}

enum class GroupBy { none, year, donor_year };

struct RateSummary {
  std::optional<std::string> donor;  // canonical donor name
  std::optional<int> year;
  std::size_t n = 0;
  std::size_t n_overreported = 0;
  double rate = 0.0;
  bool low_n = false;  // fewer than the low-n threshold data points
};

// One RateSummary per non-empty stratum, the overall stratum first. Strata
// with fewer than `low_n_threshold` records carry low_n=true, mirroring the
// caveat flag on thin cells.
inline std::vector<RateSummary> stratified_rates(
    const std::vector<OverreportFlag>& flags,
    const std::vector<ActivityRecord>& records, GroupBy group_by,
    std::size_t low_n_threshold = 500) {
  std::unordered_map<std::string, const ActivityRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;

  struct Cell {
    std::size_t n = 0;
    std::size_t over = 0;
  };
  Cell overall;
  std::map<std::pair<std::string, int>, Cell> cells;

  for (const auto& f : flags) {
    auto it = by_id.find(f.id);
    if (it == by_id.end()) throw Error("stratified_rates: no record for id '" + f.id + "'");
    ++overall.n;
    overall.over += f.overreported ? 1 : 0;
    if (group_by == GroupBy::none) continue;
    std::pair<std::string, int> key;
    key.second = it->second->year;
    if (group_by == GroupBy::donor_year) key.first = canonical_donor(it->second->donor);
    Cell& cell = cells[key];
    ++cell.n;
    cell.over += f.overreported ? 1 : 0;
  }

  auto summary = [&](std::optional<std::string> donor, std::optional<int> year,
                     const Cell& c) {
    RateSummary s;
    s.donor = std::move(donor);
    s.year = year;
    s.n = c.n;
    s.n_overreported = c.over;
    s.rate = c.n > 0 ? static_cast<double>(c.over) / static_cast<double>(c.n) : 0.0;
    s.low_n = c.n < low_n_threshold;
    return s;
  };

  std::vector<RateSummary> out;
  out.push_back(summary(std::nullopt, std::nullopt, overall));
  for (const auto& [key, cell] : cells) {
    if (cell.n == 0) continue;
    out.push_back(summary(group_by == GroupBy::donor_year
                              ? std::optional<std::string>(key.first)
                              : std::nullopt,
                          key.second, cell));
  }
  return out;
}

// Diagnostic only: predicted strictly above reported. The estimator never
// consumes this.
inline std::size_t count_underreported(const std::vector<OverreportFlag>& flags) {
  std::size_t n = 0;
  for (const auto& f : flags) {
    if (f.predicted_effective.value > f.reported.value) ++n;
  }
  return n;
}

}  // namespace riomark
