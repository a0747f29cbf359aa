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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "riomark/csv.hpp"
#include "riomark/ingest.hpp"
#include "support/fixtures.hpp"

using namespace riomark;
using riomark::testing::TempDir;
using riomark::testing::read_file;
using riomark::testing::write_file;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(RIOMARK_CLI_PATH) + " " + args + " >" + log +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

// Training fixture: separable texts embedded in CRS-style records plus a
// gold file assigning the class-defining labels.
void write_training_fixture(const TempDir& dir) {
  auto corpus = riomark::testing::separable_corpus({0, 1, 2}, 20);
  std::vector<ActivityRecord> records;
  std::ostringstream gold;
  gold << "id,gold_marker\r\n";
  for (std::size_t i = 0; i < corpus.texts.size(); ++i) {
    records.push_back(riomark::testing::record("t" + std::to_string(i), "Germany",
                                               2015, "", corpus.texts[i], 1));
    gold << "t" << i << "," << corpus.labels[i].value << "\r\n";
  }
  write_file(dir.file("train.csv"), riomark::testing::records_csv(records));
  write_file(dir.file("gold.csv"), gold.str());
}

void write_estimate_fixture(const TempDir& dir) {
  auto records = riomark::testing::synthetic_crs(300, 42);
  write_file(dir.file("crs.csv"), riomark::testing::records_csv(records));
  std::ostringstream preds;
  preds << "id,predicted_marker\r\n";
  Rng rng(5);
  for (const auto& r : records) {
    const int markers[] = {0, 1, 2, 99};
    preds << r.id << "," << markers[rng.bounded(4)] << "\r\n";
  }
  write_file(dir.file("preds.csv"), preds.str());
  std::ostringstream cal;
  cal << "id,w_flag,c_flag\r\n";
  for (int i = 0; i < 40; ++i) {
    cal << "cal" << i << "," << (i % 3 == 0 ? 0 : 1) << "," << (i % 2) << "\r\n";
  }
  write_file(dir.file("cal.csv"), cal.str());
}

}  // namespace

TEST_CASE("train writes a model and is byte-identical across reruns") {
  TempDir dir("train");
  write_training_fixture(dir);
  const std::string base = " train --records " + dir.file("train.csv").string() +
                           " --gold " + dir.file("gold.csv").string() + " --seed 7";
  REQUIRE(run_cli(base + " --out-model " + dir.file("m1.json").string()) == 0);
  REQUIRE(run_cli(base + " --out-model " + dir.file("m2.json").string()) == 0);
  const std::string m1 = read_file(dir.file("m1.json"));
  CHECK(!m1.empty());
  CHECK(m1 == read_file(dir.file("m2.json")));
}

TEST_CASE("cv subcommand emits a report with k folds") {
  TempDir dir("cv");
  write_training_fixture(dir);
  REQUIRE(run_cli(" cv --records " + dir.file("train.csv").string() + " --gold " +
                  dir.file("gold.csv").string() + " --k 5 --epochs 10 --out " +
                  dir.file("cv.json").string()) == 0);
  nlohmann::json j = nlohmann::json::parse(read_file(dir.file("cv.json")));
  CHECK(j["folds"].size() == 5);
  CHECK(j["mean"]["accuracy"].get<double>() > 0.9);
  CHECK(j.contains("manifest_digest"));
}

TEST_CASE("predict emits one row per record and round-trips as predictions") {
  TempDir dir("predict");
  write_training_fixture(dir);
  REQUIRE(run_cli(" train --records " + dir.file("train.csv").string() + " --gold " +
                  dir.file("gold.csv").string() + " --out-model " +
                  dir.file("model.json").string() + " --seed 3") == 0);
  REQUIRE(run_cli(" predict --records " + dir.file("train.csv").string() +
                  " --model " + dir.file("model.json").string() + " --out " +
                  dir.file("preds.csv").string()) == 0);
  std::ifstream in(dir.file("preds.csv"));
  riomark::PredictionParseResult parsed =
      riomark::load_external_predictions(in, riomark::RecordFormat::csv);
  CHECK(parsed.set.predictions.size() == 60);
  CHECK(parsed.skipped.empty());
}

TEST_CASE("estimate emits the documented report files") {
  TempDir dir("estimate");
  write_estimate_fixture(dir);
  const fs::path out = dir.file("report");
  REQUIRE(run_cli(" estimate --records " + dir.file("crs.csv").string() +
                  " --predictions " + dir.file("preds.csv").string() +
                  " --calibration " + dir.file("cal.csv").string() +
                  " --seed 11 --samples 20000 --out " + out.string()) == 0);

  for (const char* name : {"per_year.csv", "donor_year.csv", "flags.csv",
                           "factor.json", "summary.json", "manifest.json"}) {
    CHECK(fs::exists(out / name));
  }

  // report CSVs parse back through the library reader
  std::ifstream per_year(out / "per_year.csv");
  csv::Reader reader(per_year);
  std::vector<std::string> row;
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<std::string>{"year", "classifier_rate", "care_lo",
                                        "care_hi", "count"});
  std::size_t years = 0;
  while (reader.next(row)) {
    REQUIRE(row.size() == 5);
    ++years;
  }
  CHECK(years == 10);

  nlohmann::json factor = nlohmann::json::parse(read_file(out / "factor.json"));
  for (const char* key : {"point", "ci95_lo", "ci95_hi", "n_samples", "seed", "counts"}) {
    CHECK(factor.contains(key));
  }
  CHECK(factor["seed"] == 11);

  nlohmann::json manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  CHECK(manifest["command"] == "estimate");
  CHECK(manifest.contains("digest"));
  // every CSV carries the digest comment
  const std::string digest = manifest["digest"].get<std::string>();
  const std::string flags = read_file(out / "flags.csv");
  CHECK(flags.rfind("# manifest_digest=" + digest, 0) == 0);
}

TEST_CASE("estimate reports are byte-identical across reruns with the same seed") {
  TempDir dir("determinism");
  write_estimate_fixture(dir);
  const std::string base = " estimate --records " + dir.file("crs.csv").string() +
                           " --predictions " + dir.file("preds.csv").string() +
                           " --calibration " + dir.file("cal.csv").string() +
                           " --seed 21 --samples 20000 --out ";
  REQUIRE(run_cli(base + dir.file("r1").string()) == 0);
  REQUIRE(run_cli(base + dir.file("r2").string()) == 0);
  for (const char* name :
       {"per_year.csv", "donor_year.csv", "flags.csv", "factor.json", "summary.json"}) {
    CHECK(read_file(dir.file("r1") / name) == read_file(dir.file("r2") / name));
  }
  // a different seed changes the factor
  REQUIRE(run_cli(" estimate --records " + dir.file("crs.csv").string() +
                  " --predictions " + dir.file("preds.csv").string() +
                  " --calibration " + dir.file("cal.csv").string() +
                  " --seed 22 --samples 20000 --out " + dir.file("r3").string()) == 0);
  CHECK(read_file(dir.file("r1") / "factor.json") !=
        read_file(dir.file("r3") / "factor.json"));
}

TEST_CASE("exclude-short auto emits the filtered run side by side") {
  TempDir dir("exclshort");
  const auto records = riomark::testing::iqr62_fixture();
  write_file(dir.file("crs.csv"), riomark::testing::records_csv(records));
  std::ostringstream preds;
  preds << "id,predicted_marker\r\n";
  for (const auto& r : records) preds << r.id << ",0\r\n";
  write_file(dir.file("preds.csv"), preds.str());
  std::ostringstream cal;
  cal << "id,w_flag,c_flag\r\n";
  for (int i = 0; i < 12; ++i) cal << "c" << i << ",1," << (i % 2) << "\r\n";
  write_file(dir.file("cal.csv"), cal.str());

  const fs::path out = dir.file("report");
  REQUIRE(run_cli(" estimate --records " + dir.file("crs.csv").string() +
                  " --predictions " + dir.file("preds.csv").string() +
                  " --calibration " + dir.file("cal.csv").string() +
                  " --seed 5 --samples 10000 --exclude-short auto --out " +
                  out.string()) == 0);
  for (const char* name : {"per_year_filtered.csv", "donor_year_filtered.csv",
                           "factor_filtered.json", "flags_filtered.csv"}) {
    CHECK(fs::exists(out / name));
  }
  nlohmann::json summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary["short_text_cutoff"].get<double>() == doctest::Approx(62.0));
  CHECK(summary["base"]["analyzed_records"] == 9);
  CHECK(summary["filtered"]["analyzed_records"] == 7);
  CHECK(summary["filtered"]["excluded_short"] == 2);
}

TEST_CASE("estimate computes calibration in-pipeline from records, gold and the model") {
  TempDir dir("inpipe");
  write_training_fixture(dir);
  REQUIRE(run_cli(" train --records " + dir.file("train.csv").string() + " --gold " +
                  dir.file("gold.csv").string() + " --out-model " +
                  dir.file("model.json").string() + " --seed 2") == 0);

  // analysis records reuse the training texts so the model knows the vocabulary
  auto corpus = riomark::testing::separable_corpus({0, 1, 2}, 20);
  std::vector<ActivityRecord> crs, cal;
  std::ostringstream cal_gold;
  cal_gold << "id,gold_marker\r\n";
  for (std::size_t i = 0; i < 40; ++i) {
    crs.push_back(riomark::testing::record("x" + std::to_string(i), "France", 2014,
                                           "", corpus.texts[i], 1 + (i % 2)));
  }
  for (std::size_t i = 0; i < 20; ++i) {
    cal.push_back(riomark::testing::record("k" + std::to_string(i), "Germany", 2016,
                                           "", corpus.texts[i + 40], 1 + (i % 2)));
    cal_gold << "k" << i << "," << corpus.labels[i + 40].value << "\r\n";
  }
  write_file(dir.file("crs.csv"), riomark::testing::records_csv(crs));
  write_file(dir.file("care.csv"), riomark::testing::records_csv(cal));
  write_file(dir.file("care_gold.csv"), cal_gold.str());

  const fs::path out = dir.file("rep");
  REQUIRE(run_cli(" estimate --records " + dir.file("crs.csv").string() + " --model " +
                  dir.file("model.json").string() + " --calibration-records " +
                  dir.file("care.csv").string() + " --calibration-gold " +
                  dir.file("care_gold.csv").string() +
                  " --seed 6 --samples 10000 --out " + out.string()) == 0);
  nlohmann::json summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary["base"]["calibration_pairs_used"] == 20);
  CHECK(summary["base"]["analyzed_records"] == 40);
  nlohmann::json factor = nlohmann::json::parse(read_file(out / "factor.json"));
  CHECK(factor["counts"].contains("c_given_w"));
}

TEST_CASE("diagnose writes length/duplicate reports and skips bins without predictions") {
  TempDir dir("diagnose");
  auto records = riomark::testing::duplicate_ceiling_fixture();
  write_file(dir.file("crs.csv"), riomark::testing::records_csv(records));
  const fs::path out = dir.file("diag");
  REQUIRE(run_cli(" diagnose --records " + dir.file("crs.csv").string() + " --out " +
                  out.string()) == 0);
  CHECK(fs::exists(out / "length_report.json"));
  CHECK(fs::exists(out / "duplicates.csv"));
  CHECK(!fs::exists(out / "agreement_bins.csv"));

  std::ifstream dup(out / "duplicates.csv");
  csv::Reader reader(dup);
  std::vector<std::string> row;
  REQUIRE(reader.next(row));  // header
  REQUIRE(reader.next(row));
  CHECK(row[1] == "36");  // group_size
  CHECK(row[3] == "18");  // marker_1
  CHECK(row[4] == "18");  // marker_2
}

TEST_CASE("diagnose with predictions adds agreement bins") {
  TempDir dir("diagbins");
  auto records = riomark::testing::synthetic_crs(120, 3);
  write_file(dir.file("crs.csv"), riomark::testing::records_csv(records));
  std::ostringstream preds;
  preds << "id,predicted_marker\r\n";
  for (const auto& r : records) preds << r.id << ",1\r\n";
  write_file(dir.file("preds.csv"), preds.str());
  const fs::path out = dir.file("diag");
  REQUIRE(run_cli(" diagnose --records " + dir.file("crs.csv").string() +
                  " --predictions " + dir.file("preds.csv").string() +
                  " --bins 8 --out " + out.string()) == 0);
  std::ifstream bins(out / "agreement_bins.csv");
  csv::Reader reader(bins);
  std::vector<std::string> row;
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<std::string>{"bin_lo", "bin_hi", "n", "agreement"});
  std::size_t n_bins = 0, total = 0;
  while (reader.next(row)) {
    ++n_bins;
    total += std::stoul(row[2]);
  }
  CHECK(n_bins == 8);
  CHECK(total == 120);
}

TEST_CASE("exit codes: usage errors give 2, data errors give 1") {
  TempDir dir("exitcodes");
  CHECK(run_cli(" estimate --no-such-flag") == 2);
  CHECK(run_cli(" bogus-subcommand") == 2);
  // more folds than examples
  write_training_fixture(dir);
  CHECK(run_cli(" cv --records " + dir.file("train.csv").string() + " --gold " +
                dir.file("gold.csv").string() + " --k 100") == 1);
  write_estimate_fixture(dir);
  // estimate without predictions or model
  CHECK(run_cli(" estimate --records " + dir.file("crs.csv").string() +
                " --calibration " + dir.file("cal.csv").string() + " --out " +
                dir.file("x").string()) == 1);
  // missing file
  CHECK(run_cli(" estimate --records /nonexistent.csv --predictions " +
                dir.file("preds.csv").string() + " --calibration " +
                dir.file("cal.csv").string() + " --out " + dir.file("y").string()) == 1);
}

TEST_CASE("config file supplies values, flags take precedence") {
  TempDir dir("config");
  write_estimate_fixture(dir);
  write_file(dir.file("run.conf"), "samples=5000\nseed=33\n");
  const fs::path out1 = dir.file("c1");
  REQUIRE(run_cli(" estimate --records " + dir.file("crs.csv").string() +
                  " --predictions " + dir.file("preds.csv").string() +
                  " --calibration " + dir.file("cal.csv").string() + " --config " +
                  dir.file("run.conf").string() + " --out " + out1.string()) == 0);
  nlohmann::json factor = nlohmann::json::parse(read_file(out1 / "factor.json"));
  CHECK(factor["seed"] == 33);
  CHECK(factor["n_samples"] == 5000);

  const fs::path out2 = dir.file("c2");
  REQUIRE(run_cli(" estimate --records " + dir.file("crs.csv").string() +
                  " --predictions " + dir.file("preds.csv").string() +
                  " --calibration " + dir.file("cal.csv").string() + " --config " +
                  dir.file("run.conf").string() + " --seed 44 --out " +
                  out2.string()) == 0);
  factor = nlohmann::json::parse(read_file(out2 / "factor.json"));
  CHECK(factor["seed"] == 44);     // flag beats config
  CHECK(factor["n_samples"] == 5000);  // config still applies
}

TEST_CASE("RIOMARK_SEED is the fallback when neither flag nor config sets a seed") {
  TempDir dir("envseed");
  write_estimate_fixture(dir);
  const std::string args = " estimate --records " + dir.file("crs.csv").string() +
                           " --predictions " + dir.file("preds.csv").string() +
                           " --calibration " + dir.file("cal.csv").string() +
                           " --samples 2000 --out ";
  const std::string cmd = std::string("RIOMARK_SEED=777 ") + RIOMARK_CLI_PATH + args +
                          dir.file("env").string() + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  nlohmann::json factor =
      nlohmann::json::parse(read_file(dir.file("env") / "factor.json"));
  CHECK(factor["seed"] == 777);

  // an explicit flag wins over the environment
  const std::string cmd2 = std::string("RIOMARK_SEED=777 ") + RIOMARK_CLI_PATH + args +
                           dir.file("env2").string() + " --seed 9 >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd2.c_str())) == 0);
  factor = nlohmann::json::parse(read_file(dir.file("env2") / "factor.json"));
  CHECK(factor["seed"] == 9);
}
