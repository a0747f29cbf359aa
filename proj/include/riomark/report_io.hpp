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

// Machine-readable report files. CSV reports start with a single
// `# manifest_digest=...` comment line (skipped by the readers in this
// library); the data section below it is plain RFC-4180 and is byte-stable
// across reruns with identical inputs and seed. Numbers are written in
// shortest round-trip form, full precision.

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riomark/bayes.hpp"
#include "riomark/csv.hpp"
#include "riomark/diagnostics.hpp"
#include "riomark/estimator.hpp"
#include "riomark/rng.hpp"
#include "riomark/textprep.hpp"

namespace riomark {

inline std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Two-decimal percentage for human-readable console output only.
inline std::string fmt_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string manifest_comment(const std::string& digest) {
  return "# manifest_digest=" + digest + "\n";
}

// `year,classifier_rate,care_lo,care_hi,count` -- one row per year, the
// shape of the per-year extrapolation table.
inline std::string per_year_csv(
    const std::vector<std::pair<RateSummary, CorrectedEstimate>>& rows,
    const std::string& digest) {
  std::ostringstream out;
  out << manifest_comment(digest);
  csv::write_row(out, {"year", "classifier_rate", "care_lo", "care_hi", "count"});
  for (const auto& [rate, corrected] : rows) {
    csv::write_row(out, {std::to_string(rate.year.value()), fmt_double(rate.rate),
                         fmt_double(corrected.ci_lo), fmt_double(corrected.ci_hi),
                         std::to_string(rate.n)});
  }
  return out.str();
}

// `donor,year,n,n_overreported,rate,low_n`; the overall stratum comes first
// with empty donor and year fields.
inline std::string rates_csv(const std::vector<RateSummary>& rows,
                             const std::string& digest) {
  std::ostringstream out;
  out << manifest_comment(digest);
  csv::write_row(out, {"donor", "year", "n", "n_overreported", "rate", "low_n"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.donor.value_or(""),
                         r.year ? std::to_string(*r.year) : std::string(),
                         std::to_string(r.n), std::to_string(r.n_overreported),
                         fmt_double(r.rate), r.low_n ? "true" : "false"});
  }
  return out.str();
}

inline std::string flags_csv(const std::vector<OverreportFlag>& flags,
                             const std::string& digest) {
  std::ostringstream out;
  out << manifest_comment(digest);
  csv::write_row(out, {"id", "reported", "predicted", "overreported"});
  for (const auto& f : flags) {
    csv::write_row(out, {f.id, std::to_string(f.reported.value),
                         std::to_string(f.predicted_effective.value),
                         f.overreported ? "true" : "false"});
  }
  return out.str();
}

inline std::string predictions_csv(const std::vector<std::pair<std::string, RioMarker>>& rows,
                                   const std::string& digest) {
  std::ostringstream out;
  out << manifest_comment(digest);
  csv::write_row(out, {"id", "predicted_marker"});
  for (const auto& [id, marker] : rows) {
    csv::write_row(out, {id, std::to_string(marker.value)});
  }
  return out.str();
}

inline std::string agreement_bins_csv(const std::vector<AgreementBin>& bins,
                                      const std::string& digest) {
  std::ostringstream out;
  out << manifest_comment(digest);
  csv::write_row(out, {"bin_lo", "bin_hi", "n", "agreement"});
  for (const auto& b : bins) {
    csv::write_row(out, {fmt_double(b.bin_lo), fmt_double(b.bin_hi),
                         std::to_string(b.n),
                         b.n > 0 ? fmt_double(b.agreement) : std::string()});
  }
  return out.str();
}

// `text_hash,group_size,marker_0,marker_1,marker_2,example_id`
inline std::string duplicates_csv(const std::vector<DuplicateGroup>& groups,
                                  const std::string& digest) {
  std::ostringstream out;
  out << manifest_comment(digest);
  csv::write_row(out, {"text_hash", "group_size", "marker_0", "marker_1", "marker_2",
                       "example_id"});
  for (const auto& g : groups) {
    auto count = [&](int marker) -> std::size_t {
      auto it = g.marker_histogram.find(marker);
      return it != g.marker_histogram.end() ? it->second : 0;
    };
    csv::write_row(out, {hex64(fnv1a64(g.text)), std::to_string(g.size()),
                         std::to_string(count(0)), std::to_string(count(1)),
                         std::to_string(count(2)),
                         g.member_ids.empty() ? std::string() : g.member_ids.front()});
  }
  return out.str();
}

}  // namespace riomark
