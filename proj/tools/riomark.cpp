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

// riomark: estimate overreporting of climate-adaptation aid in CRS-style
// activity records. Subcommands mirror the pipeline stages:
//
//   train     train the built-in classifier on gold-labeled records
//   cv        k-fold cross-validation of the built-in classifier
//   predict   write marker predictions for a records file
//   estimate  flag overreporting, correct the rate, emit report tables
//   diagnose  length/duplicate/agreement diagnostics
//
// All randomness flows from --seed (fallback: RIOMARK_SEED, then 42) through
// named substreams, so identical inputs and seed reproduce identical report
// bytes. Exit codes: 0 success, 1 data/runtime error, 2 usage error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riomark/riomark.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::uint64_t seed = 42;
  CLI::Option* seed_opt = nullptr;
  bool strict = false;
  std::string config_path;  // consumed before parsing; listed for --help
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  args.seed_opt = cmd->add_option("--seed", args.seed,
                                  "master seed for all randomness (fallback: "
                                  "RIOMARK_SEED, then 42)");
  cmd->add_flag("--strict", args.strict, "abort on the first malformed input row");
  cmd->add_option("--config", args.config_path,
                  "flat key=value config file (flag > config > default)");
}

// Flat key=value config file. Keys are long option names without the leading
// dashes; '#' starts a comment. Values for boolean flags are true/false.
// Handled before CLI11 sees the arguments (CLI11 2.4 does not process config
// files attached to subcommands), giving flag > config > default precedence.
std::vector<std::pair<std::string, std::string>> load_flat_config(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw riomark::Error("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = riomark::trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw riomark::Error("config line " + std::to_string(line_no) +
                           ": expected key=value");
    }
    entries.emplace_back(riomark::trim(text.substr(0, eq)),
                         riomark::trim(text.substr(eq + 1)));
  }
  return entries;
}

// Splices config-file entries into the argument list right after the
// subcommand, skipping keys the user already passed as flags.
void apply_config_file(std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw riomark::Error("--config needs a file path");
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return;
  if (args.empty()) return;  // no subcommand; CLI11 will report it

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> injected;
  for (const auto& [key, value] : load_flat_config(config_path)) {
    if (given(key)) continue;
    if (value == "false") continue;
    injected.push_back("--" + key);
    if (value != "true") injected.push_back(value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
}

// flag > config > RIOMARK_SEED > 42
void resolve_seed(CommonArgs& args) {
  if (args.seed_opt->count() > 0) return;
  if (const char* env = std::getenv("RIOMARK_SEED")) {
    try {
      args.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw riomark::Error("RIOMARK_SEED is not an integer: " + std::string(env));
    }
  }
}

riomark::RecordFormat parse_format(const std::string& s) {
  if (s == "csv") return riomark::RecordFormat::csv;
  if (s == "jsonl" || s == "json-lines") return riomark::RecordFormat::json_lines;
  throw riomark::Error("unknown format '" + s + "' (expected csv or jsonl)");
}

riomark::LengthSource parse_length_source(const std::string& s) {
  if (s == "long_description") return riomark::LengthSource::long_description;
  if (s == "assembled") return riomark::LengthSource::assembled;
  throw riomark::Error("unknown length source '" + s +
                       "' (expected long_description or assembled)");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw riomark::Error("cannot open: " + path);
  return in;
}

riomark::ParseResult load_records(const std::string& path, riomark::RecordFormat format,
                                  bool strict) {
  std::ifstream in = open_input(path);
  riomark::ParseResult parsed = riomark::parse_records(in, format, strict);
  if (!parsed.skipped.empty()) {
    std::cerr << "note: skipped " << parsed.skipped.size() << " malformed row(s) in "
              << path << "\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(parsed.skipped.size(), 5); ++i) {
      std::cerr << "  line " << parsed.skipped[i].line << ": "
                << parsed.skipped[i].reason << "\n";
    }
  }
  return parsed;
}

struct FilterArgs {
  int min_marker = 1;
  std::string donors;
  std::string years;
  std::string length_source = "long_description";
  bool include_short = false;
};

void add_filter_options(CLI::App* cmd, FilterArgs& args) {
  cmd->add_option("--min-marker", args.min_marker,
                  "keep records with reported marker >= this (default 1)")
      ->check(CLI::Range(0, 2));
  cmd->add_option("--donors", args.donors,
                  "comma-separated donor allowlist (canonicalized)");
  cmd->add_option("--years", args.years, "year range min:max (or a single year)");
  cmd->add_option("--length-source", args.length_source,
                  "text whose length drives length filters: long_description "
                  "(default) or assembled");
  cmd->add_flag("--include-short-desc", args.include_short,
                "append the short description to the classifier input");
}

riomark::DatasetFilter build_filter(const FilterArgs& args) {
  riomark::DatasetFilter f;
  f.min_reported_marker = args.min_marker;
  if (!args.donors.empty()) {
    std::set<std::string> donors;
    std::stringstream ss(args.donors);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = riomark::trim(item);
      if (!item.empty()) donors.insert(item);
    }
    if (!donors.empty()) f.donors = std::move(donors);
  }
  if (!args.years.empty()) {
    const auto colon = args.years.find(':');
    try {
      if (colon == std::string::npos) {
        const int y = std::stoi(args.years);
        f.year_range = {y, y};
      } else {
        f.year_range = {std::stoi(args.years.substr(0, colon)),
                        std::stoi(args.years.substr(colon + 1))};
      }
    } catch (const std::exception&) {
      throw riomark::Error("bad --years value: " + args.years);
    }
  }
  f.length_source = parse_length_source(args.length_source);
  f.include_short_description = args.include_short;
  return f;
}

json metricset_to_json(const riomark::MetricSet& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["macro_precision"] = m.macro_precision;
  j["macro_recall"] = m.macro_recall;
  j["macro_f1"] = m.macro_f1;
  json per_class = json::object();
  for (const auto& [c, prf] : m.per_class) {
    per_class[std::to_string(c)] = {
        {"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
  }
  j["per_class"] = std::move(per_class);
  return j;
}

json cv_report_to_json(const riomark::CvReport& report) {
  json j;
  j["folds"] = json::array();
  for (const auto& fold : report.per_fold) j["folds"].push_back(metricset_to_json(fold));
  j["mean"] = metricset_to_json(report.mean);
  j["std"] = metricset_to_json(report.std_dev);
  j["val_macro_f1_by_epoch"] = report.val_macro_f1_by_epoch;
  return j;
}

// "mean ± std" percentage presentation for console output.
std::string pm(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f +/- %.2f", mean * 100.0, sd * 100.0);
  return buf;
}

struct TrainHyper {
  double l2 = 1e-4;
  double lr = 0.5;
  int epochs = 30;
  int batch_size = 32;
  int min_df = 1;
};

void add_hyper_options(CLI::App* cmd, TrainHyper& hyper) {
  cmd->add_option("--l2", hyper.l2, "L2 regularization strength");
  cmd->add_option("--lr", hyper.lr, "learning rate");
  cmd->add_option("--epochs", hyper.epochs, "training epochs");
  cmd->add_option("--batch-size", hyper.batch_size, "mini-batch size");
  cmd->add_option("--min-df", hyper.min_df, "minimum document frequency for features");
}

riomark::TrainOptions to_train_options(const TrainHyper& hyper, std::uint64_t seed) {
  riomark::TrainOptions opts;
  opts.l2 = hyper.l2;
  opts.lr = hyper.lr;
  opts.epochs = hyper.epochs;
  opts.batch_size = hyper.batch_size;
  opts.min_df = hyper.min_df;
  opts.seed = seed;
  return opts;
}

// Gold-labeled training texts: records joined with the gold marker file.
struct TrainingData {
  std::vector<std::string> texts;
  std::vector<riomark::RioMarker> labels;
};

TrainingData load_training_data(const std::string& records_path,
                                riomark::RecordFormat format,
                                const std::string& gold_path, bool include_short,
                                bool strict) {
  riomark::ParseResult parsed = load_records(records_path, format, strict);
  std::ifstream gold_in = open_input(gold_path);
  riomark::GoldParseResult gold = riomark::parse_gold_labels(gold_in, strict);
  if (!gold.skipped.empty()) {
    std::cerr << "note: skipped " << gold.skipped.size() << " malformed gold row(s)\n";
  }
  riomark::GoldJoin join = riomark::join_gold(parsed.records, gold.labels);
  if (join.unmatched_labels > 0) {
    std::cerr << "warning: " << join.unmatched_labels
              << " gold label(s) match no record\n";
  }
  if (join.pairs.empty()) throw riomark::Error("no gold-labeled records to train on");
  TrainingData data;
  for (const auto& [record, marker] : join.pairs) {
    data.texts.push_back(riomark::assemble_record_text(record, include_short));
    data.labels.push_back(marker);
  }
  return data;
}

void write_report(const fs::path& path, const std::string& content) {
  riomark::atomic_write(path, content);
  std::cerr << "wrote " << path.string() << "\n";
}

json corrected_to_json(const riomark::CorrectedEstimate& est) {
  return {{"raw_rate", est.raw_rate},
          {"point", est.point},
          {"ci95_lo", est.ci_lo},
          {"ci95_hi", est.ci_hi}};
}

json run_to_json(const riomark::EstimateRun& run) {
  json j;
  j["cutoff"] = run.cutoff;
  j["input_records"] = run.input_records;
  j["records_with_marker_0"] = run.marker0_in_input;
  j["analyzed_records"] = run.analyzed_records;
  j["excluded_short"] = run.excluded_short;
  j["excluded_short_calibration"] = run.excluded_short_calibration;
  j["underreported_diagnostic"] = run.underreported;
  j["calibration_pairs_used"] = run.calibration_pairs_used;
  j["calibration_w_rate"] = run.calibration_w_rate;
  j["calibration_c_rate"] = run.calibration_c_rate;
  j["overall_rate"] = run.overall.rate;
  j["overall_n"] = run.overall.n;
  j["overall_n_overreported"] = run.overall.n_overreported;
  j["factor"] = riomark::factor_to_json(run.factor);
  j["overall_corrected"] = corrected_to_json(run.overall_corrected);
  return j;
}

void emit_estimate_run(const riomark::EstimateRun& run, const fs::path& out_dir,
                       const std::string& suffix, const std::string& digest) {
  write_report(out_dir / ("per_year" + suffix + ".csv"),
               riomark::per_year_csv(run.per_year_corrected, digest));
  write_report(out_dir / ("donor_year" + suffix + ".csv"),
               riomark::rates_csv(run.donor_year, digest));
  write_report(out_dir / ("flags" + suffix + ".csv"),
               riomark::flags_csv(run.flags, digest));
  json factor = riomark::factor_to_json(run.factor);
  factor["manifest_digest"] = digest;
  write_report(out_dir / ("factor" + suffix + ".json"), factor.dump(2) + "\n");
}

void print_estimate_summary(const riomark::EstimateRun& run, const std::string& label) {
  std::cout << label << ": overreporting rate " << riomark::fmt_percent(run.overall.rate)
            << " (" << run.overall.n_overreported << "/" << run.overall.n << ")\n"
            << label << ": correction factor " << riomark::fmt_percent(run.factor.point)
            << " [" << riomark::fmt_percent(run.factor.ci_lo) << "; "
            << riomark::fmt_percent(run.factor.ci_hi) << "]\n"
            << label << ": corrected estimate "
            << riomark::fmt_percent(run.overall_corrected.point) << " ["
            << riomark::fmt_percent(run.overall_corrected.ci_lo) << "; "
            << riomark::fmt_percent(run.overall_corrected.ci_hi) << "]\n";
  for (const auto& w : run.factor.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
}

int cmd_train(const std::string& records_path, const std::string& format_name,
              const std::string& gold_path, const std::string& model_path,
              int k, const TrainHyper& hyper, const CommonArgs& common,
              bool include_short) {
  const riomark::RecordFormat format = parse_format(format_name);
  TrainingData data = load_training_data(records_path, format, gold_path,
                                         include_short, common.strict);
  riomark::TrainOptions opts = to_train_options(hyper, common.seed);

  const fs::path model_file(model_path);
  const fs::path report_dir =
      model_file.has_parent_path() ? model_file.parent_path() : fs::path(".");

  riomark::RunManifest manifest;
  manifest.command = "train";
  manifest.seed = common.seed;
  manifest.timestamp = riomark::iso8601_utc_now();
  manifest.config = {{"k", std::to_string(k)},
                     {"l2", riomark::fmt_double(hyper.l2)},
                     {"lr", riomark::fmt_double(hyper.lr)},
                     {"epochs", std::to_string(hyper.epochs)},
                     {"batch_size", std::to_string(hyper.batch_size)},
                     {"min_df", std::to_string(hyper.min_df)},
                     {"include_short_desc", include_short ? "true" : "false"}};
  manifest.input_digests = {{"records", riomark::file_digest(records_path)},
                            {"gold", riomark::file_digest(gold_path)}};
  const std::string digest = manifest.digest();

  if (k > 0) {
    if (k < 2) throw riomark::Error("--k must be >= 2 (or 0 to skip CV)");
    riomark::CvReport report = riomark::kfold_cv(data.texts, data.labels, k, opts);
    std::cout << "cv accuracy " << pm(report.mean.accuracy, report.std_dev.accuracy)
              << "  macro-F1 " << pm(report.mean.macro_f1, report.std_dev.macro_f1)
              << " (k=" << k << ")\n";
    json j = cv_report_to_json(report);
    j["manifest_digest"] = digest;
    write_report(report_dir / "cv_report.json", j.dump(2) + "\n");
  }

  // Seeded 80/20 split; the 20% is the validation/holdout side.
  std::vector<std::size_t> order(data.texts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  riomark::Rng rng(riomark::substream_seed(common.seed, "train-split"));
  rng.shuffle(order);
  const std::size_t train_n = order.size() - order.size() / 5;
  std::vector<std::string> train_texts, val_texts;
  std::vector<riomark::RioMarker> train_labels, val_labels;
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (p < train_n) {
      train_texts.push_back(data.texts[order[p]]);
      train_labels.push_back(data.labels[order[p]]);
    } else {
      val_texts.push_back(data.texts[order[p]]);
      val_labels.push_back(data.labels[order[p]]);
    }
  }
  riomark::LinearModel model;
  riomark::MetricSet holdout;
  if (val_texts.empty()) {
    model = riomark::train_text_classifier(train_texts, train_labels, opts);
    std::cerr << "warning: dataset too small for a holdout split\n";
  } else {
    model = riomark::train_text_classifier(train_texts, train_labels, opts, &val_texts,
                                           &val_labels);
    std::vector<riomark::RioMarker> pred;
    for (const auto& t : val_texts) pred.push_back(model.predict_text(t));
    holdout = riomark::metrics(val_labels, pred);
    std::cout << "holdout accuracy " << riomark::fmt_percent(holdout.accuracy)
              << "  macro-F1 " << riomark::fmt_percent(holdout.macro_f1) << " (n="
              << val_texts.size() << ")\n";
    json j = metricset_to_json(holdout);
    j["n"] = val_texts.size();
    j["manifest_digest"] = digest;
    write_report(report_dir / "holdout_metrics.json", j.dump(2) + "\n");
  }

  std::ostringstream model_out;
  riomark::save_model(model, model_out);
  write_report(model_file, model_out.str());
  write_report(report_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return 0;
}

int cmd_cv(const std::string& records_path, const std::string& format_name,
           const std::string& gold_path, int k, const TrainHyper& hyper,
           const CommonArgs& common, bool include_short, const std::string& out_path) {
  const riomark::RecordFormat format = parse_format(format_name);
  TrainingData data = load_training_data(records_path, format, gold_path,
                                         include_short, common.strict);
  riomark::CvReport report =
      riomark::kfold_cv(data.texts, data.labels, k, to_train_options(hyper, common.seed));
  std::cout << "cv accuracy " << pm(report.mean.accuracy, report.std_dev.accuracy)
            << "  macro-P " << pm(report.mean.macro_precision, report.std_dev.macro_precision)
            << "  macro-R " << pm(report.mean.macro_recall, report.std_dev.macro_recall)
            << "  macro-F1 " << pm(report.mean.macro_f1, report.std_dev.macro_f1)
            << " (k=" << k << ")\n";
  if (!out_path.empty()) {
    riomark::RunManifest manifest;
    manifest.command = "cv";
    manifest.seed = common.seed;
    manifest.timestamp = riomark::iso8601_utc_now();
    manifest.config = {{"k", std::to_string(k)},
                       {"l2", riomark::fmt_double(hyper.l2)},
                       {"lr", riomark::fmt_double(hyper.lr)},
                       {"epochs", std::to_string(hyper.epochs)},
                       {"batch_size", std::to_string(hyper.batch_size)},
                       {"min_df", std::to_string(hyper.min_df)}};
    manifest.input_digests = {{"records", riomark::file_digest(records_path)},
                              {"gold", riomark::file_digest(gold_path)}};
    json j = cv_report_to_json(report);
    j["manifest_digest"] = manifest.digest();
    write_report(out_path, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_predict(const std::string& records_path, const std::string& format_name,
                const std::string& model_path, const std::string& out_path,
                const CommonArgs& common, bool include_short) {
  const riomark::RecordFormat format = parse_format(format_name);
  riomark::ParseResult parsed = load_records(records_path, format, common.strict);
  std::ifstream model_in = open_input(model_path);
  const riomark::LinearModel model = riomark::load_model(model_in);

  riomark::RunManifest manifest;
  manifest.command = "predict";
  manifest.seed = common.seed;
  manifest.timestamp = riomark::iso8601_utc_now();
  manifest.config = {{"include_short_desc", include_short ? "true" : "false"}};
  manifest.input_digests = {{"records", riomark::file_digest(records_path)},
                            {"model", riomark::file_digest(model_path)}};

  std::vector<std::pair<std::string, riomark::RioMarker>> rows;
  rows.reserve(parsed.records.size());
  for (const auto& r : parsed.records) {
    rows.emplace_back(r.id, model.predict_text(
                                riomark::assemble_record_text(r, include_short)));
  }
  write_report(out_path, riomark::predictions_csv(rows, manifest.digest()));
  return 0;
}

struct EstimateArgs {
  std::string records, format = "csv";
  std::string model, predictions;
  std::string calibration, calibration_records, calibration_gold;
  std::string out_dir = "report";
  std::string exclude_short = "off";
  std::string lang = "off";
  std::string lang_file;
  std::size_t samples = 100000;
  std::size_t low_n = 500;
  FilterArgs filter;
};

int cmd_estimate(const EstimateArgs& args, const CommonArgs& common) {
  const riomark::RecordFormat format = parse_format(args.format);
  riomark::ParseResult parsed = load_records(args.records, format, common.strict);

  riomark::PipelineConfig config;
  config.filter = build_filter(args.filter);
  config.assembly.include_short_description = args.filter.include_short;
  config.length_source = parse_length_source(args.filter.length_source);
  config.n_samples = args.samples;
  config.seed = common.seed;
  config.low_n_threshold = args.low_n;

  riomark::RunManifest manifest;
  manifest.command = "estimate";
  manifest.seed = common.seed;
  manifest.timestamp = riomark::iso8601_utc_now();
  manifest.config = {{"samples", std::to_string(args.samples)},
                     {"exclude_short", args.exclude_short},
                     {"min_marker", std::to_string(args.filter.min_marker)},
                     {"donors", args.filter.donors},
                     {"years", args.filter.years},
                     {"length_source", args.filter.length_source},
                     {"include_short_desc", args.filter.include_short ? "true" : "false"},
                     {"low_n", std::to_string(args.low_n)},
                     {"lang", args.lang},
                     {"format", args.format}};
  manifest.input_digests["records"] = riomark::file_digest(args.records);

  // Predictions: a trained model or an externally produced file.
  riomark::EstimateInputs inputs;
  inputs.records = std::move(parsed.records);
  if (!args.model.empty() && !args.predictions.empty()) {
    throw riomark::Error("give either --model or --predictions, not both");
  }
  std::optional<riomark::LinearModel> model;
  if (!args.model.empty()) {
    std::ifstream model_in = open_input(args.model);
    model = riomark::load_model(model_in);
    manifest.input_digests["model"] = riomark::file_digest(args.model);
    inputs.predictions = riomark::predict_records(*model, inputs.records, config.assembly);
  } else if (!args.predictions.empty()) {
    std::ifstream pred_in = open_input(args.predictions);
    riomark::PredictionParseResult pred =
        riomark::load_external_predictions(pred_in, riomark::RecordFormat::csv);
    for (const auto& issue : pred.skipped) {
      std::cerr << "note: predictions line " << issue.line << ": " << issue.reason
                << "\n";
    }
    manifest.input_digests["predictions"] = riomark::file_digest(args.predictions);
    inputs.predictions = std::move(pred.set);
  } else {
    throw riomark::Error("estimate needs --model or --predictions");
  }

  // Calibration: precomputed pairs, or records+gold evaluated in-pipeline.
  if (!args.calibration.empty()) {
    std::ifstream cal_in = open_input(args.calibration);
    riomark::CalibrationParseResult cal =
        riomark::parse_calibration_pairs(cal_in, common.strict);
    if (!cal.skipped.empty()) {
      std::cerr << "note: skipped " << cal.skipped.size()
                << " malformed calibration row(s)\n";
    }
    manifest.input_digests["calibration"] = riomark::file_digest(args.calibration);
    inputs.calibration.pairs = std::move(cal.pairs);
    // Lengths for the short-text rerun come from the records file when the
    // calibration ids resolve there.
    std::unordered_map<std::string, const riomark::ActivityRecord*> by_id;
    for (const auto& r : inputs.records) by_id[r.id] = &r;
    for (const auto& p : inputs.calibration.pairs) {
      auto it = by_id.find(p.id);
      if (it != by_id.end()) {
        inputs.calibration.lengths[p.id] = static_cast<long>(riomark::filter_length(
            *it->second, config.length_source, config.assembly.include_short_description));
      }
    }
  } else if (!args.calibration_records.empty() && !args.calibration_gold.empty()) {
    riomark::ParseResult cal_records =
        load_records(args.calibration_records, format, common.strict);
    std::ifstream gold_in = open_input(args.calibration_gold);
    riomark::GoldParseResult gold = riomark::parse_gold_labels(gold_in, common.strict);
    manifest.input_digests["calibration_records"] =
        riomark::file_digest(args.calibration_records);
    manifest.input_digests["calibration_gold"] =
        riomark::file_digest(args.calibration_gold);
    riomark::PredictionSet cal_predictions;
    if (model) {
      cal_predictions =
          riomark::predict_records(*model, cal_records.records, config.assembly);
    } else {
      cal_predictions = inputs.predictions;
    }
    riomark::ComputedCalibration computed = riomark::compute_calibration(
        cal_records.records, gold.labels, cal_predictions, config);
    if (computed.skipped_marker0 > 0) {
      std::cerr << "note: " << computed.skipped_marker0
                << " calibration record(s) reported marker 0 and were skipped\n";
    }
    if (computed.unmatched_labels > 0) {
      std::cerr << "warning: " << computed.unmatched_labels
                << " calibration gold label(s) match no record\n";
    }
    inputs.calibration = std::move(computed.input);
  } else {
    throw riomark::Error(
        "estimate needs --calibration, or --calibration-records with "
        "--calibration-gold");
  }

  riomark::ExcludeShort exclude;
  if (args.exclude_short == "off") {
    exclude.mode = riomark::ExcludeShortMode::off;
  } else if (args.exclude_short == "auto") {
    exclude.mode = riomark::ExcludeShortMode::automatic;
  } else {
    exclude.mode = riomark::ExcludeShortMode::fixed;
    try {
      exclude.fixed_cutoff = std::stod(args.exclude_short);
    } catch (const std::exception&) {
      throw riomark::Error("bad --exclude-short value: " + args.exclude_short);
    }
  }

  // Optional language tagging; diagnostics only.
  json language_counts = json::object();
  if (args.lang != "off") {
    std::optional<riomark::LanguageTagFile> tag_file;
    if (args.lang == "file") {
      if (args.lang_file.empty()) throw riomark::Error("--lang file needs --lang-file");
      std::ifstream tags_in = open_input(args.lang_file);
      tag_file = riomark::LanguageTagFile::parse(tags_in);
      manifest.input_digests["lang_file"] = riomark::file_digest(args.lang_file);
    } else if (args.lang != "heuristic") {
      throw riomark::Error("unknown --lang mode: " + args.lang);
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& r : inputs.records) {
      riomark::PreparedText t = riomark::assemble_text(r, config.assembly);
      t = tag_file ? tag_file->apply(std::move(t)) : riomark::tag_language(std::move(t));
      ++counts[t.language_tag];
    }
    for (const auto& [tag, n] : counts) language_counts[tag] = n;
  }

  const riomark::EstimatePair runs =
      riomark::rerun_excluding_short(inputs, config, exclude);
  const std::string digest = manifest.digest();
  const fs::path out_dir(args.out_dir);

  emit_estimate_run(runs.base, out_dir, "", digest);
  print_estimate_summary(runs.base, "full");
  json summary;
  summary["manifest_digest"] = digest;
  summary["seed"] = common.seed;
  summary["base"] = run_to_json(runs.base);
  if (args.lang != "off") summary["language_counts"] = language_counts;
  if (runs.filtered) {
    summary["short_text_cutoff"] = runs.cutoff;
    summary["filtered"] = run_to_json(*runs.filtered);
    emit_estimate_run(*runs.filtered, out_dir, "_filtered", digest);
    std::cout << "short-text cutoff: " << runs.cutoff << " ("
              << args.filter.length_source << ")\n";
    print_estimate_summary(*runs.filtered, "excl-short");
  }
  write_report(out_dir / "summary.json", summary.dump(2) + "\n");
  write_report(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return 0;
}

struct DiagnoseArgs {
  std::string records, format = "csv";
  std::string model, predictions;
  std::string out_dir = "report";
  int bins = 20;
  FilterArgs filter;
};

int cmd_diagnose(const DiagnoseArgs& args, const CommonArgs& common) {
  const riomark::RecordFormat format = parse_format(args.format);
  riomark::ParseResult parsed = load_records(args.records, format, common.strict);
  riomark::DatasetFilter filter = build_filter(args.filter);
  const std::vector<riomark::ActivityRecord> records =
      riomark::apply_filter(parsed.records, filter);
  if (records.empty()) throw riomark::Error("diagnose: no records after filtering");
  const riomark::LengthSource length_source =
      parse_length_source(args.filter.length_source);
  const riomark::TextAssembly assembly{args.filter.include_short};

  riomark::RunManifest manifest;
  manifest.command = "diagnose";
  manifest.seed = common.seed;
  manifest.timestamp = riomark::iso8601_utc_now();
  manifest.config = {{"bins", std::to_string(args.bins)},
                     {"min_marker", std::to_string(args.filter.min_marker)},
                     {"donors", args.filter.donors},
                     {"years", args.filter.years},
                     {"length_source", args.filter.length_source},
                     {"include_short_desc", args.filter.include_short ? "true" : "false"},
                     {"format", args.format}};
  manifest.input_digests["records"] = riomark::file_digest(args.records);

  // Predictions are optional; without them, agreement bins are skipped.
  riomark::PredictionSet predictions;
  bool have_predictions = false;
  if (!args.model.empty() && !args.predictions.empty()) {
    throw riomark::Error("give either --model or --predictions, not both");
  }
  if (!args.model.empty()) {
    std::ifstream model_in = open_input(args.model);
    const riomark::LinearModel model = riomark::load_model(model_in);
    manifest.input_digests["model"] = riomark::file_digest(args.model);
    predictions = riomark::predict_records(model, records, assembly);
    have_predictions = true;
  } else if (!args.predictions.empty()) {
    std::ifstream pred_in = open_input(args.predictions);
    riomark::PredictionParseResult pred =
        riomark::load_external_predictions(pred_in, riomark::RecordFormat::csv);
    manifest.input_digests["predictions"] = riomark::file_digest(args.predictions);
    predictions = std::move(pred.set);
    have_predictions = true;
  }

  const std::string digest = manifest.digest();
  const fs::path out_dir(args.out_dir);

  const riomark::LengthReport lengths = riomark::length_report(
      records, length_source, args.filter.include_short);
  json length_json = riomark::length_report_to_json(lengths, args.filter.length_source);
  length_json["manifest_digest"] = digest;
  write_report(out_dir / "length_report.json", length_json.dump(2) + "\n");

  std::vector<riomark::PreparedText> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(riomark::assemble_text(r, assembly));
  const auto groups = riomark::find_duplicates(texts, records);
  write_report(out_dir / "duplicates.csv", riomark::duplicates_csv(groups, digest));
  const riomark::DuplicateStats dup_stats = riomark::duplicate_stats(texts);
  std::cout << "records " << dup_stats.total << ", unique descriptions "
            << dup_stats.distinct << " ("
            << riomark::fmt_percent(dup_stats.unique_ratio()) << ")\n";

  if (have_predictions) {
    std::vector<riomark::LengthAgreementPoint> points;
    points.reserve(records.size());
    for (const auto& r : records) {
      auto it = predictions.predictions.find(r.id);
      if (it == predictions.predictions.end()) {
        throw riomark::Error("missing prediction for record '" + r.id + "'");
      }
      const auto len = static_cast<double>(riomark::filter_length(
          r, length_source, args.filter.include_short));
      riomark::LengthAgreementPoint p;
      p.log_length = len >= 1.0 ? std::log(len) : 0.0;
      p.agrees = riomark::effective_marker(it->second) == r.reported_marker;
      points.push_back(p);
    }
    const auto bins = riomark::agreement_by_length(points, args.bins);
    write_report(out_dir / "agreement_bins.csv",
                 riomark::agreement_bins_csv(bins, digest));
  } else {
    std::cerr << "notice: no predictions supplied; skipping agreement bins\n";
  }
  write_report(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riomark: overreporting estimation for CRS-style climate "
               "adaptation aid records"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train the built-in classifier");
  CommonArgs train_common;
  TrainHyper train_hyper;
  std::string train_records, train_format = "csv", train_gold, train_model = "model.json";
  int train_k = 0;
  bool train_include_short = false;
  train->add_option("--records", train_records, "CRS-style records file")->required();
  train->add_option("--format", train_format, "records format: csv or jsonl");
  train->add_option("--gold", train_gold, "gold labels CSV (id,gold_marker)")->required();
  train->add_option("--out-model", train_model, "output model file");
  train->add_option("--k", train_k, "run k-fold CV before training (0 = skip)");
  train->add_flag("--include-short-desc", train_include_short,
                  "append the short description to the classifier input");
  add_hyper_options(train, train_hyper);
  add_common(train, train_common);

  // cv
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  CommonArgs cv_common;
  TrainHyper cv_hyper;
  std::string cv_records, cv_format = "csv", cv_gold, cv_out;
  int cv_k = 10;
  bool cv_include_short = false;
  cv->add_option("--records", cv_records, "CRS-style records file")->required();
  cv->add_option("--format", cv_format, "records format: csv or jsonl");
  cv->add_option("--gold", cv_gold, "gold labels CSV (id,gold_marker)")->required();
  cv->add_option("--k", cv_k, "number of folds");
  cv->add_option("--out", cv_out, "write the CV report JSON here");
  cv->add_flag("--include-short-desc", cv_include_short,
               "append the short description to the classifier input");
  add_hyper_options(cv, cv_hyper);
  add_common(cv, cv_common);

  // predict
  auto* predict = app.add_subcommand("predict", "write marker predictions");
  CommonArgs predict_common;
  std::string predict_records, predict_format = "csv", predict_model, predict_out;
  bool predict_include_short = false;
  predict->add_option("--records", predict_records, "CRS-style records file")->required();
  predict->add_option("--format", predict_format, "records format: csv or jsonl");
  predict->add_option("--model", predict_model, "model file")->required();
  predict->add_option("--out", predict_out, "output predictions CSV")->required();
  predict->add_flag("--include-short-desc", predict_include_short,
                    "append the short description to the classifier input");
  add_common(predict, predict_common);

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "flag overreporting and emit corrected rate tables");
  CommonArgs estimate_common;
  EstimateArgs est;
  estimate->add_option("--records", est.records, "CRS-style records file")->required();
  estimate->add_option("--format", est.format, "records format: csv or jsonl");
  estimate->add_option("--model", est.model, "model file for built-in predictions");
  estimate->add_option("--predictions", est.predictions,
                       "external predictions CSV (id,predicted_marker)");
  estimate->add_option("--calibration", est.calibration,
                       "calibration pairs CSV (id,w_flag,c_flag)");
  estimate->add_option("--calibration-records", est.calibration_records,
                       "calibration records file (evaluated in-pipeline)");
  estimate->add_option("--calibration-gold", est.calibration_gold,
                       "gold labels CSV for the calibration records");
  estimate->add_option("--out", est.out_dir, "output directory");
  estimate->add_option("--samples", est.samples, "Monte Carlo sample count");
  estimate->add_option("--exclude-short", est.exclude_short,
                       "short-text rerun: off, auto (IQR fence), or a number");
  estimate->add_option("--low-n", est.low_n, "low-n annotation threshold");
  estimate->add_option("--lang", est.lang,
                       "language tagging: off, heuristic, or file");
  estimate->add_option("--lang-file", est.lang_file, "language tag CSV (id,language_tag)");
  add_filter_options(estimate, est.filter);
  add_common(estimate, estimate_common);

  // diagnose
  auto* diagnose = app.add_subcommand(
      "diagnose", "length, duplicate and agreement diagnostics");
  CommonArgs diagnose_common;
  DiagnoseArgs diag;
  diagnose->add_option("--records", diag.records, "CRS-style records file")->required();
  diagnose->add_option("--format", diag.format, "records format: csv or jsonl");
  diagnose->add_option("--model", diag.model, "model file for built-in predictions");
  diagnose->add_option("--predictions", diag.predictions,
                       "external predictions CSV (id,predicted_marker)");
  diagnose->add_option("--out", diag.out_dir, "output directory");
  diagnose->add_option("--bins", diag.bins, "number of agreement-by-length bins");
  add_filter_options(diagnose, diag.filter);
  add_common(diagnose, diagnose_common);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    apply_config_file(args);
  } catch (const riomark::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());  // CLI11's vector overload wants this
  try {
    app.name("riomark");
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) {
      resolve_seed(train_common);
      return cmd_train(train_records, train_format, train_gold, train_model, train_k,
                       train_hyper, train_common, train_include_short);
    }
    if (cv->parsed()) {
      resolve_seed(cv_common);
      return cmd_cv(cv_records, cv_format, cv_gold, cv_k, cv_hyper, cv_common,
                    cv_include_short, cv_out);
    }
    if (predict->parsed()) {
      resolve_seed(predict_common);
      return cmd_predict(predict_records, predict_format, predict_model, predict_out,
                         predict_common, predict_include_short);
    }
    if (estimate->parsed()) {
      resolve_seed(estimate_common);
      return cmd_estimate(est, estimate_common);
    }
    if (diagnose->parsed()) {
      resolve_seed(diagnose_common);
      return cmd_diagnose(diag, diagnose_common);
    }
  } catch (const riomark::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
