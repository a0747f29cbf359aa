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

// Deterministic synthetic fixtures. No real CRS/WK/CARE data is
// redistributable, so the suites run on generated records that mimic the
// schemas.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "riomark/classifier.hpp"
#include "riomark/ingest.hpp"
#include "riomark/rng.hpp"

namespace riomark::testing {

inline ActivityRecord record(std::string id, std::string donor, int year,
                             std::string title, std::string long_desc, int marker,
                             std::string short_desc = "") {
  ActivityRecord r;
  r.id = std::move(id);
  r.donor = std::move(donor);
  r.year = year;
  r.title = std::move(title);
  r.short_description = std::move(short_desc);
  r.long_description = std::move(long_desc);
  r.reported_marker = RioMarker{marker};
  return r;
}

// A linearly separable corpus: each class owns a disjoint vocabulary, so any
// reasonable classifier reaches perfect accuracy.
struct SeparableCorpus {
  std::vector<std::string> texts;
  std::vector<RioMarker> labels;
};

inline SeparableCorpus separable_corpus(const std::vector<int>& classes,
                                        std::size_t docs_per_class,
                                        std::uint64_t seed = 7) {
  SeparableCorpus corpus;
  Rng rng(seed);
  std::size_t doc_id = 0;
  for (std::size_t i = 0; i < docs_per_class; ++i) {
    for (int c : classes) {
      std::ostringstream text;
      const std::string stem = "class" + std::to_string(c) + "tok";
      // three class-specific tokens plus a unique filler token
      for (int t = 0; t < 3; ++t) {
        text << stem << rng.bounded(5) << " ";
      }
      text << "filler" << doc_id++;
      corpus.texts.push_back(text.str());
      corpus.labels.push_back(RioMarker{c});
    }
  }
  return corpus;
}

// Word pools for realistic-looking activity descriptions.
inline std::string synthetic_sentence(Rng& rng, std::size_t words) {
  static const std::vector<std::string> pool = {
      "climate",     "adaptation",  "resilience", "irrigation", "coastal",
      "flood",       "drought",     "farmers",    "community",  "water",
      "management",  "capacity",    "training",   "vulnerable", "households",
      "agriculture", "protection",  "disaster",   "risk",       "reduction",
      "livelihood",  "watershed",   "mangrove",   "early",      "warning",
      "system",      "crop",        "diversification",          "infrastructure",
      "rural"};
  std::ostringstream out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out << " ";
    out << pool[rng.bounded(pool.size())];
  }
  return out.str();
}

// A synthetic CRS-style dataset spread over donors and years. Description
// lengths concentrate in a band with a small very-short tail, so the IQR
// lower fence lands above zero and short-text exclusion has bite.
inline std::vector<ActivityRecord> synthetic_crs(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> donors = {"France", "Germany", "Japan",
                                                  "United Kingdom", "United States"};
  Rng rng(seed);
  std::vector<ActivityRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int marker = 1 + static_cast<int>(rng.bounded(2));
    const int year = 2010 + static_cast<int>(rng.bounded(10));
    const std::size_t words =
        rng.uniform() < 0.05 ? 1 + rng.bounded(2) : 20 + rng.bounded(25);
    records.push_back(record("crs" + std::to_string(i), donors[rng.bounded(donors.size())],
                             year, synthetic_sentence(rng, 2 + rng.bounded(4)),
                             synthetic_sentence(rng, words), marker));
  }
  return records;
}

// The duplicate-description scenario: one text repeated 36 times, reported
// half with marker 1 and half with marker 2.
inline std::vector<ActivityRecord> duplicate_ceiling_fixture() {
  std::vector<ActivityRecord> records;
  for (int i = 0; i < 36; ++i) {
    records.push_back(record("dup" + std::to_string(i), "France", 2014,
                             "Appui aux communes",
                             "Renforcement de la résilience des communes rurales",
                             i < 18 ? 1 : 2));
  }
  return records;
}

// Long descriptions engineered so the IQR lower fence lands exactly at 62
// characters: sorted lengths put Q1 at 92 and Q3 at 112.
inline std::vector<ActivityRecord> iqr62_fixture() {
  const std::vector<int> lengths = {40, 55, 92, 95, 100, 105, 112, 150, 200};
  std::vector<ActivityRecord> records;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    std::string text(static_cast<std::size_t>(lengths[i]), 'x');
    records.push_back(record("len" + std::to_string(i), "Germany", 2015, "t",
                             std::move(text), 1 + static_cast<int>(i % 2)));
  }
  return records;
}

inline std::string records_csv(const std::vector<ActivityRecord>& records) {
  std::ostringstream out;
  serialize_records(records, out, RecordFormat::csv);
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("riomark-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace riomark::testing
