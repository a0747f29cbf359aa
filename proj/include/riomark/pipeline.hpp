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

// End-to-end estimation: filter records, flag overreporting against the
// predictions, estimate the correction factor from the calibration pairs,
// and propagate it to corrected per-year rates. The short-text rerun
// executes the identical pipeline on the length-filtered data (calibration
// records included) and returns both runs.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "riomark/bayes.hpp"
#include "riomark/classifier.hpp"
#include "riomark/diagnostics.hpp"
#include "riomark/error.hpp"
#include "riomark/estimator.hpp"
#include "riomark/ingest.hpp"
#include "riomark/textprep.hpp"

namespace riomark {

struct PipelineConfig {
  DatasetFilter filter;  // the pipeline default sets min_reported_marker = 1
  TextAssembly assembly;
  LengthSource length_source = LengthSource::long_description;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 42;
  std::size_t low_n_threshold = 500;
};

struct CalibrationInput {
  std::vector<PairedFlags> pairs;
  // Lengths by id, known when the pairs were computed from calibration
  // records. Pairs without a known length are kept by the short-text rerun.
  std::unordered_map<std::string, long> lengths;
};

struct EstimateInputs {
  std::vector<ActivityRecord> records;
  PredictionSet predictions;
  CalibrationInput calibration;
};

struct EstimateRun {
  double cutoff = 0.0;  // short-text cutoff applied; 0 means none
  std::size_t input_records = 0;
  std::size_t marker0_in_input = 0;  // audit: unflaggable records seen in input
  std::size_t analyzed_records = 0;
  std::size_t excluded_short = 0;
  std::size_t excluded_short_calibration = 0;
  std::size_t underreported = 0;  // diagnostic counter, no estimator semantics
  std::size_t calibration_pairs_used = 0;
  double calibration_w_rate = 0.0;  // classifier overreport rate on calibration
  double calibration_c_rate = 0.0;  // high-quality overreport rate on calibration
  std::vector<OverreportFlag> flags;
  RateSummary overall;
  std::vector<RateSummary> per_year;
  std::vector<RateSummary> donor_year;  // overall stratum first
  CorrectionFactor factor;
  CorrectedEstimate overall_corrected;
  std::vector<std::pair<RateSummary, CorrectedEstimate>> per_year_corrected;
};

namespace detail {

// Filtered records that can enter the flagging step: whatever the filter
// settings, records reported 0 are outside the overreporting rule's domain.
inline std::vector<ActivityRecord> analysis_records(const EstimateInputs& inputs,
                                                    const PipelineConfig& config) {
  DatasetFilter filter = config.filter;
  filter.length_source = config.length_source;
  filter.include_short_description = config.assembly.include_short_description;
  std::vector<ActivityRecord> records = apply_filter(inputs.records, filter);
  std::vector<ActivityRecord> flaggable;
  flaggable.reserve(records.size());
  for (auto& r : records) {
    if (r.reported_marker.value >= 1) flaggable.push_back(std::move(r));
  }
  return flaggable;
}

inline void require_predictions(const std::vector<ActivityRecord>& records,
                                const PredictionSet& predictions) {
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!predictions.predictions.count(r.id)) missing.push_back(r.id);
  }
  if (missing.empty()) return;
  std::string msg = "missing predictions for " + std::to_string(missing.size()) +
                    " record(s):";
  const std::size_t show = std::min<std::size_t>(missing.size(), 20);
  for (std::size_t i = 0; i < show; ++i) msg += " " + missing[i];
  if (missing.size() > show) msg += " ...";
  throw Error(msg);
}

}  // namespace detail

inline EstimateRun run_estimate(const EstimateInputs& inputs,
                                const PipelineConfig& config, double cutoff = 0.0) {
  EstimateRun run;
  run.cutoff = cutoff;
  run.input_records = inputs.records.size();
  for (const auto& r : inputs.records) {
    if (r.reported_marker.value == 0) ++run.marker0_in_input;
  }

  std::vector<ActivityRecord> records = detail::analysis_records(inputs, config);

  if (cutoff > 0.0) {
    std::vector<ActivityRecord> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
      const auto len = static_cast<double>(filter_length(
          r, config.length_source, config.assembly.include_short_description));
      if (len < cutoff) {
        ++run.excluded_short;
      } else {
        kept.push_back(std::move(r));
      }
    }
    records = std::move(kept);
  }
  if (records.empty()) throw Error("estimate: no records left after filtering");
  run.analyzed_records = records.size();

  detail::require_predictions(records, inputs.predictions);
  run.flags.reserve(records.size());
  for (const auto& r : records) {
    run.flags.push_back(make_flag(r.id, r.reported_marker,
                                  inputs.predictions.predictions.at(r.id)));
  }
  run.underreported = count_underreported(run.flags);

  run.overall = stratified_rates(run.flags, records, GroupBy::none,
                                 config.low_n_threshold)
                    .front();
  {
    auto rates = stratified_rates(run.flags, records, GroupBy::year,
                                  config.low_n_threshold);
    run.per_year.assign(rates.begin() + 1, rates.end());
  }
  run.donor_year = stratified_rates(run.flags, records, GroupBy::donor_year,
                                    config.low_n_threshold);

  std::vector<PairedFlags> pairs = inputs.calibration.pairs;
  if (cutoff > 0.0) {
    std::vector<PairedFlags> kept;
    kept.reserve(pairs.size());
    for (auto& p : pairs) {
      auto it = inputs.calibration.lengths.find(p.id);
      if (it != inputs.calibration.lengths.end() &&
          static_cast<double>(it->second) < cutoff) {
        ++run.excluded_short_calibration;
      } else {
        kept.push_back(std::move(p));
      }
    }
    pairs = std::move(kept);
  }
  if (pairs.empty()) throw Error("estimate: no calibration pairs left after filtering");
  run.calibration_pairs_used = pairs.size();
  for (const auto& p : pairs) {
    run.calibration_w_rate += p.w ? 1.0 : 0.0;
    run.calibration_c_rate += p.c ? 1.0 : 0.0;
  }
  run.calibration_w_rate /= static_cast<double>(pairs.size());
  run.calibration_c_rate /= static_cast<double>(pairs.size());

  run.factor = correction_factor(pairs, config.n_samples, config.seed);
  run.overall_corrected = corrected_rate(run.overall.rate, run.factor);
  run.per_year_corrected.reserve(run.per_year.size());
  for (const auto& rate : run.per_year) {
    run.per_year_corrected.emplace_back(rate, corrected_rate(rate.rate, run.factor));
  }
  return run;
}

enum class ExcludeShortMode { off, automatic, fixed };

struct ExcludeShort {
  ExcludeShortMode mode = ExcludeShortMode::off;
  double fixed_cutoff = 0.0;
};

struct EstimatePair {
  EstimateRun base;
  std::optional<EstimateRun> filtered;
  double cutoff = 0.0;  // the cutoff used by the filtered run
};

// The base run plus, when requested, the rerun excluding short texts. In
// `automatic` mode the cutoff is the IQR lower fence of the analyzed
// records' lengths (computed on the configured length source).
inline EstimatePair rerun_excluding_short(const EstimateInputs& inputs,
                                          const PipelineConfig& config,
                                          const ExcludeShort& exclude) {
  EstimatePair pair;
  pair.base = run_estimate(inputs, config, 0.0);
  if (exclude.mode == ExcludeShortMode::off) return pair;

  if (exclude.mode == ExcludeShortMode::fixed) {
    pair.cutoff = exclude.fixed_cutoff;
  } else {
    const std::vector<ActivityRecord> analyzed = detail::analysis_records(inputs, config);
    std::vector<long> lengths;
    lengths.reserve(analyzed.size());
    for (const auto& r : analyzed) {
      lengths.push_back(static_cast<long>(filter_length(
          r, config.length_source, config.assembly.include_short_description)));
    }
    pair.cutoff = iqr_cutoff(lengths).cutoff;
  }
  if (pair.cutoff > 0.0) {
    pair.filtered = run_estimate(inputs, config, pair.cutoff);
  } else {
    // A zero cutoff excludes nothing; rerunning would duplicate the base run.
    pair.filtered = pair.base;
  }
  return pair;
}

// Calibration pairs computed in-pipeline: the W flag compares the
// classifier's prediction with the reported marker, the C flag compares the
// high-quality gold marker with the reported marker (both via the
// overreporting rule). Records reported 0 are outside the rule's domain and
// are skipped with a count.
struct ComputedCalibration {
  CalibrationInput input;
  std::size_t skipped_marker0 = 0;
  std::size_t unmatched_labels = 0;
  std::size_t unmatched_records = 0;
};

inline ComputedCalibration compute_calibration(
    const std::vector<ActivityRecord>& calibration_records,
    const std::vector<GoldLabel>& gold, const PredictionSet& predictions,
    const PipelineConfig& config) {
  ComputedCalibration out;
  GoldJoin join = join_gold(calibration_records, gold);
  out.unmatched_labels = join.unmatched_labels;
  out.unmatched_records = join.unmatched_records;
  for (const auto& [record, gold_marker] : join.pairs) {
    if (record.reported_marker.value == 0) {
      ++out.skipped_marker0;
      continue;
    }
    PairedFlags p;
    p.id = record.id;
    auto it = predictions.predictions.find(record.id);
    if (it == predictions.predictions.end()) {
      throw Error("missing prediction for calibration record '" + record.id + "'");
    }
    p.w = overreport_flag(record.reported_marker, it->second);
    p.c = overreport_flag(record.reported_marker, gold_marker);
    out.input.pairs.push_back(std::move(p));
    out.input.lengths[record.id] = static_cast<long>(filter_length(
        record, config.length_source, config.assembly.include_short_description));
  }
  return out;
}

// Built-in predictions for a set of records.
inline PredictionSet predict_records(const LinearModel& model,
                                     const std::vector<ActivityRecord>& records,
                                     const TextAssembly& assembly) {
  PredictionSet set;
  set.source = PredictionSource::builtin;
  for (const auto& r : records) {
    set.predictions.emplace(r.id,
                            model.predict_text(assemble_record_text(
                                r, assembly.include_short_description)));
  }
  return set;
}

}  // namespace riomark
