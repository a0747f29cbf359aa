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

// Input-length diagnostics: the IQR lower fence used to exclude
// uninformative short descriptions, per-donor and per-year length medians,
// and classifier/report agreement binned by log length.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "riomark/error.hpp"
#include "riomark/estimator.hpp"
#include "riomark/ingest.hpp"
#include "riomark/stats.hpp"

namespace riomark {

struct GroupMedian {
  double median = 0.0;
  std::size_t n = 0;
};

struct LengthReport {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double cutoff = 0.0;  // max(0, q1 - 1.5*iqr)
  std::map<std::string, GroupMedian> per_donor;
  std::map<int, GroupMedian> per_year;
};

inline double iqr_lower_fence(const Quartiles& q) {
  return std::max(0.0, q.q1 - 1.5 * (q.q3 - q.q1));
}

inline LengthReport iqr_cutoff(const std::vector<long>& lengths) {
  if (lengths.empty()) throw Error("iqr_cutoff: empty sample");
  std::vector<double> v(lengths.begin(), lengths.end());
  const Quartiles q = quartiles(std::move(v));
  LengthReport report;
  report.q1 = q.q1;
  report.median = q.median;
  report.q3 = q.q3;
  report.iqr = q.q3 - q.q1;
  report.cutoff = iqr_lower_fence(q);
  return report;
}

// Full report with per-donor / per-year medians, over the configured length
// source.
inline LengthReport length_report(const std::vector<ActivityRecord>& records,
                                  LengthSource source, bool include_short) {
  if (records.empty()) throw Error("length_report: no records");
  std::vector<long> lengths;
  std::map<std::string, std::vector<double>> donor_lengths;
  std::map<int, std::vector<double>> year_lengths;
  lengths.reserve(records.size());
  for (const auto& r : records) {
    const auto len = static_cast<long>(filter_length(r, source, include_short));
    lengths.push_back(len);
    donor_lengths[canonical_donor(r.donor)].push_back(static_cast<double>(len));
    year_lengths[r.year].push_back(static_cast<double>(len));
  }
  LengthReport report = iqr_cutoff(lengths);
  for (auto& [donor, v] : donor_lengths) {
    const std::size_t n = v.size();
    report.per_donor[donor] = {quantile(std::move(v), 0.5), n};
  }
  for (auto& [year, v] : year_lengths) {
    const std::size_t n = v.size();
    report.per_year[year] = {quantile(std::move(v), 0.5), n};
  }
  return report;
}

struct AgreementBin {
  double bin_lo = 0.0;  // log-length bounds
  double bin_hi = 0.0;
  std::size_t n = 0;
  double agreement = 0.0;  // undefined when n == 0
};

struct LengthAgreementPoint {
  double log_length = 0.0;
  bool agrees = false;  // effective prediction equals reported marker
};

// Equal-width bins over the observed log-length range. Empty bins are
// emitted with n=0 so bin totals conserve the record count.
inline std::vector<AgreementBin> agreement_by_length(
    const std::vector<LengthAgreementPoint>& points, int n_bins) {
  if (n_bins < 2) throw Error("agreement_by_length: n_bins must be >= 2");
  if (points.empty()) throw Error("agreement_by_length: no records");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    lo = std::min(lo, p.log_length);
    hi = std::max(hi, p.log_length);
  }
  std::vector<AgreementBin> bins(static_cast<std::size_t>(n_bins));
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    bins[b].bin_lo = lo + width * b;
    bins[b].bin_hi = b + 1 == n_bins ? hi : lo + width * (b + 1);
  }
  std::vector<std::size_t> agree_counts(bins.size(), 0);
  for (const auto& p : points) {
    std::size_t b = width > 0.0
                        ? static_cast<std::size_t>((p.log_length - lo) / width)
                        : bins.size() - 1;
    if (b >= bins.size()) b = bins.size() - 1;
    ++bins[b].n;
    if (p.agrees) ++agree_counts[b];
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].n > 0) {
      bins[b].agreement =
          static_cast<double>(agree_counts[b]) / static_cast<double>(bins[b].n);
    }
  }
  return bins;
}

inline nlohmann::json length_report_to_json(const LengthReport& r,
                                            const std::string& length_source) {
  nlohmann::json j;
  j["q1"] = r.q1;
  j["median"] = r.median;
  j["q3"] = r.q3;
  j["iqr"] = r.iqr;
  j["cutoff"] = r.cutoff;
  j["length_source"] = length_source;
  nlohmann::json donors = nlohmann::json::object();
  for (const auto& [donor, g] : r.per_donor) {
    donors[donor] = {{"median", g.median}, {"n", g.n}};
  }
  j["per_donor"] = std::move(donors);
  nlohmann::json years = nlohmann::json::object();
  for (const auto& [year, g] : r.per_year) {
    years[std::to_string(year)] = {{"median", g.median}, {"n", g.n}};
  }
  j["per_year"] = std::move(years);
  return j;
}

}  // namespace riomark
