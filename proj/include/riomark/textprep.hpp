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

// Classifier input assembly, language tagging, length statistics and
// duplicate-description detection.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "riomark/csv.hpp"
#include "riomark/error.hpp"
#include "riomark/ingest.hpp"
#include "riomark/stats.hpp"
#include "riomark/tokenize.hpp"
#include "riomark/unicode.hpp"

namespace riomark {

struct PreparedText {
  std::string id;
  std::string text;
  std::size_t char_length = 0;  // Unicode scalar values
  double log_length = 0.0;      // ln(char_length), 0 for empty text
  std::string language_tag;     // empty until tagged
};

struct TextAssembly {
  bool include_short_description = false;
};

inline PreparedText assemble_text(const ActivityRecord& r,
                                  const TextAssembly& assembly = {}) {
  PreparedText t;
  t.id = r.id;
  t.text = assemble_record_text(r, assembly.include_short_description);
  t.char_length = utf8_length(t.text);
  t.log_length = t.char_length >= 1
                     ? std::log(static_cast<double>(t.char_length))
                     : 0.0;
  return t;
}

namespace detail {

inline const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words = {
      "the",   "a",     "an",    "of",    "to",    "and",  "in",    "for",
      "on",    "with",  "by",    "from",  "at",    "as",   "is",    "are",
      "was",   "were",  "be",    "been",  "being", "this", "that",  "these",
      "those", "it",    "its",   "will",  "would", "shall", "should",
      "can",   "could", "has",   "have",  "had",   "not",  "or",    "but",
      "their", "which", "there", "into",  "than",  "then", "they",  "we",
      "our",   "between"};
  return words;
}

inline const std::unordered_set<std::string>& french_stopwords() {
  static const std::unordered_set<std::string> words = {
      "le",    "la",    "les",   "un",    "une",   "des",  "du",    "de",
      "d",     "l",     "et",    "en",    "dans",  "pour", "sur",   "avec",
      "par",   "au",    "aux",   "ce",    "cette", "ces",  "qui",   "que",
      "dont",  "où",    "est",   "sont",  "être",  "était", "ont",
      "à",     "il",    "elle",  "ils",   "elles", "ne",   "pas",   "plus",
      "son",   "sa",    "ses",   "leur",  "leurs", "se",   "si",    "y",
      "nous",  "vous",  "mise",  "afin"};
  return words;
}

}  // namespace detail

// Stopword-ratio heuristic: "fr" when the French stopword hit ratio exceeds
// the English one, otherwise "en"; "und" when the text has no tokens. This
// only routes diagnostics, never the estimator.
inline std::string detect_language(std::string_view text) {
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) return "und";
  std::size_t en = 0, fr = 0;
  for (const auto& tok : tokens) {
    if (detail::english_stopwords().count(tok)) ++en;
    if (detail::french_stopwords().count(tok)) ++fr;
  }
  return fr > en ? "fr" : "en";
}

inline PreparedText tag_language(PreparedText t) {
  t.language_tag = detect_language(t.text);
  return t;
}

// External language tags: CSV `id,language_tag`. Ids without a tag resolve
// to "und".
class LanguageTagFile {
 public:
  static LanguageTagFile parse(std::istream& in) {
    LanguageTagFile file;
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw Error("empty language tag file: missing header");
    if (row.size() != 2 || row[0] != "id" || row[1] != "language_tag") {
      throw Error("malformed language tag header: expected id,language_tag");
    }
    while (reader.next(row)) {
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() != 2) {
        throw Error("line " + std::to_string(reader.row_line()) +
                    ": malformed language tag row");
      }
      file.tags_[row[0]] = row[1];
    }
    return file;
  }

  std::string tag_for(const std::string& id) const {
    auto it = tags_.find(id);
    return it != tags_.end() ? it->second : "und";
  }

  PreparedText apply(PreparedText t) const {
    t.language_tag = tag_for(t.id);
    return t;
  }

 private:
  std::unordered_map<std::string, std::string> tags_;
};

inline Quartiles length_quartiles(const std::vector<PreparedText>& texts) {
  if (texts.empty()) throw Error("length_quartiles: empty sample");
  std::vector<double> lengths;
  lengths.reserve(texts.size());
  for (const auto& t : texts) lengths.push_back(static_cast<double>(t.char_length));
  return quartiles(std::move(lengths));
}

struct DuplicateGroup {
  std::string text;  // whitespace-normalized
  std::vector<std::string> member_ids;
  std::map<int, std::size_t> marker_histogram;  // reported marker -> count

  std::size_t size() const { return member_ids.size(); }
  std::size_t max_marker_count() const {
    std::size_t best = 0;
    for (const auto& [marker, n] : marker_histogram) best = std::max(best, n);
    return best;
  }
};

// Groups of identical assembled texts (after whitespace normalization) with
// at least two members, largest first.
inline std::vector<DuplicateGroup> find_duplicates(
    const std::vector<PreparedText>& texts,
    const std::vector<ActivityRecord>& records) {
  std::unordered_map<std::string, int> marker_by_id;
  for (const auto& r : records) marker_by_id[r.id] = r.reported_marker.value;

  std::map<std::string, DuplicateGroup> by_text;
  for (const auto& t : texts) {
    auto it = marker_by_id.find(t.id);
    if (it == marker_by_id.end()) {
      throw Error("find_duplicates: no record for text id '" + t.id + "'");
    }
    std::string key = normalize_whitespace(t.text);
    DuplicateGroup& g = by_text[key];
    g.text = key;
    g.member_ids.push_back(t.id);
    ++g.marker_histogram[it->second];
  }

  std::vector<DuplicateGroup> groups;
  for (auto& [text, g] : by_text) {
    if (g.size() >= 2) groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.text < b.text;
  });
  return groups;
}

struct DuplicateStats {
  std::size_t total = 0;
  std::size_t distinct = 0;
  std::size_t singletons = 0;  // texts appearing exactly once

  double unique_ratio() const {
    return total == 0 ? 0.0
                      : static_cast<double>(distinct) / static_cast<double>(total);
  }
};

inline DuplicateStats duplicate_stats(const std::vector<PreparedText>& texts) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : texts) ++counts[normalize_whitespace(t.text)];
  DuplicateStats stats;
  stats.total = texts.size();
  stats.distinct = counts.size();
  for (const auto& [text, n] : counts) {
    if (n == 1) ++stats.singletons;
  }
  return stats;
}

// Upper bound on the fraction of records where any deterministic text-to-
// marker function can match the reported marker: within a duplicate group
// only the plurality marker can be matched, single-occurrence texts can
// always be matched.
inline double max_agreement_bound(const std::vector<DuplicateGroup>& groups,
                                  std::size_t total, std::size_t singletons) {
  if (total < 1) throw Error("max_agreement_bound: total must be >= 1");
  std::size_t grouped = 0, achievable = 0;
  for (const auto& g : groups) {
    grouped += g.size();
    achievable += g.max_marker_count();
  }
  if (grouped + singletons != total) {
    throw Error("max_agreement_bound: group sizes plus singletons do not sum to total");
  }
  return static_cast<double>(achievable + singletons) / static_cast<double>(total);
}

}  // namespace riomark
