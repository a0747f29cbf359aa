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

// Annotation-scheme correction. From a small calibration set carrying both
// flags (W: classifier-scheme overreport, C: high-quality-scheme overreport)
// two conditional agreement probabilities are estimated as Beta(1+n, 1+m)
// posteriors. The correction factor P(C|W)/P(W|C) is propagated by Monte
// Carlo: paired draws from independent substreams, ratio per draw, empirical
// median and equal-tailed 95% interval. A corrected rate multiplies a raw
// overreporting rate by each ratio draw, clamps to [0,1], and summarizes the
// same way. The two posteriors are sampled independently even though both
// derive from the same calibration records; the model is intentionally this
// simple.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "riomark/csv.hpp"
#include "riomark/error.hpp"
#include "riomark/rng.hpp"
#include "riomark/stats.hpp"

namespace riomark {

struct PairedFlags {
  std::string id;
  bool w = false;  // classifier / training-scheme overreport flag
  bool c = false;  // high-quality-scheme overreport flag
};

struct BinomialCounts {
  std::size_t n = 0;  // positives
  std::size_t m = 0;  // negatives
};

struct ConditionalCounts {
  BinomialCounts c_given_w;  // over records with w: how often c agrees
  BinomialCounts w_given_c;  // over records with c: how often w agrees
};

inline ConditionalCounts conditional_counts(const std::vector<PairedFlags>& pairs) {
  if (pairs.empty()) throw Error("conditional_counts: empty calibration set");
  ConditionalCounts counts;
  for (const auto& p : pairs) {
    if (p.w) {
      if (p.c) ++counts.c_given_w.n;
      else ++counts.c_given_w.m;
    }
    if (p.c) {
      if (p.w) ++counts.w_given_c.n;
      else ++counts.w_given_c.m;
    }
  }
  return counts;
}

struct BetaPosterior {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
};

// Uniform prior plus the observed counts: Beta(1+n, 1+m).
inline BetaPosterior beta_posterior(long n, long m) {
  if (n < 0 || m < 0) throw Error("beta_posterior: negative counts");
  return {1.0 + static_cast<double>(n), 1.0 + static_cast<double>(m)};
}

inline BetaPosterior beta_posterior(const BinomialCounts& counts) {
  return beta_posterior(static_cast<long>(counts.n), static_cast<long>(counts.m));
}

inline std::vector<double> sample_beta(const BetaPosterior& p, std::size_t n_samples,
                                       std::uint64_t seed) {
  if (n_samples < 1) throw Error("sample_beta: n_samples must be >= 1");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) out.push_back(rng.beta(p.alpha, p.beta));
  return out;
}

struct CorrectionFactor {
  std::vector<double> samples;  // ratio draws, in draw order
  double point = 0.0;           // empirical median
  double ci_lo = 0.0;           // equal-tailed 95% interval
  double ci_hi = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  ConditionalCounts counts;
  std::vector<std::string> warnings;

  // Quantile summary from explicit ratio draws; used by correction_factor
  // and by degenerate/fixed-factor constructions.
  static CorrectionFactor from_samples(std::vector<double> draws, std::uint64_t seed) {
    if (draws.empty()) throw Error("correction factor: no samples");
    CorrectionFactor cf;
    cf.samples = std::move(draws);
    cf.seed = seed;
    cf.n_samples = cf.samples.size();
    std::vector<double> sorted = cf.samples;
    std::sort(sorted.begin(), sorted.end());
    cf.point = quantile_sorted(sorted, 0.5);
    cf.ci_lo = quantile_sorted(sorted, 0.025);
    cf.ci_hi = quantile_sorted(sorted, 0.975);
    return cf;
  }
};

// Draws the two posteriors from independent named substreams and forms the
// per-draw ratio. Denominator draws are in (0,1) so the ratio is finite;
// draws under 1e-300 are redrawn anyway.
inline CorrectionFactor correction_factor(const std::vector<PairedFlags>& pairs,
                                          std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error("correction_factor: n_samples must be >= 1");
  const ConditionalCounts counts = conditional_counts(pairs);
  const BetaPosterior cw = beta_posterior(counts.c_given_w);
  const BetaPosterior wc = beta_posterior(counts.w_given_c);

  Rng rng_cw(substream_seed(seed, "c_given_w"));
  Rng rng_wc(substream_seed(seed, "w_given_c"));
  std::vector<double> ratios;
  ratios.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double num = rng_cw.beta(cw.alpha, cw.beta);
    double den = rng_wc.beta(wc.alpha, wc.beta);
    while (den < 1e-300) den = rng_wc.beta(wc.alpha, wc.beta);
    ratios.push_back(num / den);
  }

  CorrectionFactor cf = CorrectionFactor::from_samples(std::move(ratios), seed);
  cf.counts = counts;
  const std::size_t w_total = counts.c_given_w.n + counts.c_given_w.m;
  const std::size_t c_total = counts.w_given_c.n + counts.w_given_c.m;
  if (w_total < 10) {
    cf.warnings.push_back("c_given_w condition has only " + std::to_string(w_total) +
                          " records");
  }
  if (c_total < 10) {
    cf.warnings.push_back("w_given_c condition has only " + std::to_string(c_total) +
                          " records");
  }
  return cf;
}

struct CorrectedEstimate {
  double raw_rate = 0.0;
  double point = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// corrected_i = clamp(raw * ratio_i, 0, 1); clamping happens before the
// quantiles so the estimate keeps its probability interpretation.
inline CorrectedEstimate corrected_rate(double raw, const CorrectionFactor& cf) {
  if (!(raw >= 0.0 && raw <= 1.0)) throw Error("corrected_rate: raw rate outside [0,1]");
  if (cf.samples.empty()) throw Error("corrected_rate: factor has no samples");
  std::vector<double> corrected;
  corrected.reserve(cf.samples.size());
  for (double r : cf.samples) {
    corrected.push_back(std::clamp(raw * r, 0.0, 1.0));
  }
  std::sort(corrected.begin(), corrected.end());
  CorrectedEstimate est;
  est.raw_rate = raw;
  est.point = quantile_sorted(corrected, 0.5);
  est.ci_lo = quantile_sorted(corrected, 0.025);
  est.ci_hi = quantile_sorted(corrected, 0.975);
  return est;
}

inline nlohmann::json factor_to_json(const CorrectionFactor& cf) {
  nlohmann::json j;
  j["point"] = cf.point;
  j["ci95_lo"] = cf.ci_lo;
  j["ci95_hi"] = cf.ci_hi;
  j["n_samples"] = cf.n_samples;
  j["seed"] = cf.seed;
  j["counts"]["c_given_w"] = {cf.counts.c_given_w.n, cf.counts.c_given_w.m};
  j["counts"]["w_given_c"] = {cf.counts.w_given_c.n, cf.counts.w_given_c.m};
  if (!cf.warnings.empty()) j["warnings"] = cf.warnings;
  return j;
}

struct CalibrationParseResult {
  std::vector<PairedFlags> pairs;
  std::vector<RowIssue> skipped;
};

// Calibration input: CSV `id,w_flag,c_flag` with 0/1 flags.
inline CalibrationParseResult parse_calibration_pairs(std::istream& in,
                                                      bool strict = false) {
  CalibrationParseResult result;
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error("empty calibration file: missing header");
  if (row.size() != 3 || row[0] != "id" || row[1] != "w_flag" || row[2] != "c_flag") {
    throw Error("malformed calibration header: expected id,w_flag,c_flag");
  }
  std::unordered_set<std::string> ids;
  while (reader.next(row)) {
    const long line = reader.row_line();
    if (row.size() == 1 && row[0].empty()) continue;
    auto flag = [](const std::string& s, bool& out) {
      if (s == "0") out = false;
      else if (s == "1") out = true;
      else return false;
      return true;
    };
    PairedFlags p;
    if (row.size() != 3 || row[0].empty() || !flag(row[1], p.w) || !flag(row[2], p.c)) {
      if (strict) throw Error("line " + std::to_string(line) + ": malformed calibration row");
      result.skipped.push_back({line, "malformed calibration row"});
      continue;
    }
    p.id = row[0];
    if (!ids.insert(p.id).second) {
      throw Error("duplicate calibration id '" + p.id + "' at line " +
                  std::to_string(line));
    }
    result.pairs.push_back(std::move(p));
  }
  return result;
}

}  // namespace riomark
