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

// Parsing, validation and filtering of CRS-style activity records plus the
// external gold-label files. Input is file-based: CSV (RFC-4180, header
// required) or JSON-Lines with the same field names.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "riomark/csv.hpp"
#include "riomark/error.hpp"
#include "riomark/unicode.hpp"

namespace riomark {

// Rio marker for climate change adaptation: 2 principal objective,
// 1 significant objective, 0 not targeted, 99 insufficient information.
// 99 appears only in re-evaluations and maps to 0 before any ordered
// comparison.
struct RioMarker {
  int value = 0;

  static bool valid(int v) { return v == 0 || v == 1 || v == 2 || v == 99; }
  static bool valid_reported(int v) { return v == 0 || v == 1 || v == 2; }

  friend bool operator==(RioMarker a, RioMarker b) { return a.value == b.value; }
  friend auto operator<=>(RioMarker a, RioMarker b) { return a.value <=> b.value; }
};

struct ActivityRecord {
  std::string id;
  std::string donor;
  std::optional<std::string> recipient;
  int year = 0;
  std::string title;
  std::string short_description;
  std::string long_description;
  RioMarker reported_marker;
  std::optional<std::string> language_tag;

  friend bool operator==(const ActivityRecord&, const ActivityRecord&) = default;
};

struct GoldLabel {
  std::string id;
  RioMarker gold_marker;  // may be 99
};

enum class RecordFormat { csv, json_lines };

enum class LengthSource { long_description, assembled };

struct DatasetFilter {
  std::optional<int> min_reported_marker;  // pipeline default is 1
  std::optional<std::set<std::string>> donors;
  std::optional<std::pair<int, int>> year_range;
  std::optional<int> min_text_length;  // Unicode scalar values
  LengthSource length_source = LengthSource::long_description;
  bool include_short_description = false;  // for LengthSource::assembled
};

struct ParseResult {
  std::vector<ActivityRecord> records;
  std::vector<RowIssue> skipped;
};

namespace detail {

inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "id",    "donor", "recipient",        "year",           "title",
      "short_description", "long_description", "reported_marker", "language_tag"};
  return cols;
}

inline bool parse_int(std::string_view s, long& out) {
  if (s.empty()) return false;
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
    if (i == s.size()) return false;
  }
  long v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
    if (v > 1000000000L) return false;
  }
  out = neg ? -v : v;
  return true;
}

// Validates fields shared by both input formats. Returns an error reason or
// empty on success.
inline std::string validate_record(const ActivityRecord& r) {
  if (r.id.empty()) return "missing id";
  if (r.donor.empty()) return "missing donor";
  if (r.year < 2000 || r.year > 2100) return "year out of range";
  if (!RioMarker::valid_reported(r.reported_marker.value)) return "marker out of range";
  return {};
}

}  // namespace detail

// Canonical donor keys: case-insensitive, trimmed, with common spelling
// variants of the top-five DAC donors folded together. Unknown donors
// canonicalize to their lowercased trimmed form.
inline std::string canonical_donor(std::string_view donor) {
  static const std::unordered_map<std::string, std::string> table = {
      {"uk", "United Kingdom"},
      {"u.k.", "United Kingdom"},
      {"united kingdom", "United Kingdom"},
      {"great britain", "United Kingdom"},
      {"us", "United States"},
      {"u.s.", "United States"},
      {"usa", "United States"},
      {"u.s.a.", "United States"},
      {"united states", "United States"},
      {"united states of america", "United States"},
      {"france", "France"},
      {"germany", "Germany"},
      {"japan", "Japan"},
  };
  std::string key = to_lower(trim(donor));
  auto it = table.find(key);
  return it != table.end() ? it->second : key;
}

inline ParseResult parse_records(std::istream& in, RecordFormat format,
                                 bool strict = false) {
  ParseResult result;
  std::unordered_set<std::string> ids;

  auto add = [&](ActivityRecord&& r, long line) {
    std::string reason = detail::validate_record(r);
    if (reason.empty() && !ids.insert(r.id).second) {
      throw Error("duplicate id '" + r.id + "' at line " + std::to_string(line));
    }
    if (!reason.empty()) {
      if (strict) {
        throw Error("line " + std::to_string(line) + ": " + reason);
      }
      result.skipped.push_back({line, std::move(reason)});
      return;
    }
    result.records.push_back(std::move(r));
  };

  if (format == RecordFormat::csv) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw Error("empty input: missing header");
    const auto& cols = detail::record_columns();
    const bool with_lang = row.size() == cols.size();
    const bool without_lang = row.size() == cols.size() - 1;
    if (!with_lang && !without_lang) {
      throw Error("malformed header: expected " + std::to_string(cols.size() - 1) +
                  " or " + std::to_string(cols.size()) + " columns, got " +
                  std::to_string(row.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] != cols[i]) {
        throw Error("malformed header: column " + std::to_string(i + 1) +
                    " is '" + row[i] + "', expected '" + cols[i] + "'");
      }
    }
    while (reader.next(row)) {
      const long line = reader.row_line();
      if (row.size() == 1 && row[0].empty()) continue;  // blank line
      if (row.size() != (with_lang ? cols.size() : cols.size() - 1)) {
        if (strict) throw Error("line " + std::to_string(line) + ": wrong field count");
        result.skipped.push_back({line, "wrong field count"});
        continue;
      }
      ActivityRecord r;
      r.id = row[0];
      r.donor = row[1];
      if (!row[2].empty()) r.recipient = row[2];
      long year = 0, marker = -1;
      if (!detail::parse_int(row[3], year)) {
        if (strict) throw Error("line " + std::to_string(line) + ": bad year");
        result.skipped.push_back({line, "bad year"});
        continue;
      }
      r.year = static_cast<int>(year);
      r.title = row[4];
      r.short_description = row[5];
      r.long_description = row[6];
      if (!detail::parse_int(row[7], marker)) {
        if (strict) throw Error("line " + std::to_string(line) + ": bad marker");
        result.skipped.push_back({line, "bad marker"});
        continue;
      }
      r.reported_marker = RioMarker{static_cast<int>(marker)};
      if (with_lang && !row[8].empty()) r.language_tag = row[8];
      add(std::move(r), line);
    }
  } else {
    std::string line_text;
    long line = 0;
    while (std::getline(in, line_text)) {
      ++line;
      if (!line_text.empty() && line_text.back() == '\r') line_text.pop_back();
      if (trim(line_text).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line_text, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        if (strict) throw Error("line " + std::to_string(line) + ": malformed JSON");
        result.skipped.push_back({line, "malformed JSON"});
        continue;
      }
      auto str = [&](const char* key) -> std::string {
        auto it = j.find(key);
        return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
      };
      ActivityRecord r;
      r.id = str("id");
      r.donor = str("donor");
      std::string recipient = str("recipient");
      if (!recipient.empty()) r.recipient = recipient;
      r.title = str("title");
      r.short_description = str("short_description");
      r.long_description = str("long_description");
      std::string tag = str("language_tag");
      if (!tag.empty()) r.language_tag = tag;
      if (j.contains("year") && j["year"].is_number_integer()) {
        r.year = j["year"].get<int>();
      } else {
        if (strict) throw Error("line " + std::to_string(line) + ": bad year");
        result.skipped.push_back({line, "bad year"});
        continue;
      }
      if (j.contains("reported_marker") && j["reported_marker"].is_number_integer()) {
        r.reported_marker = RioMarker{j["reported_marker"].get<int>()};
      } else {
        if (strict) throw Error("line " + std::to_string(line) + ": bad marker");
        result.skipped.push_back({line, "bad marker"});
        continue;
      }
      add(std::move(r), line);
    }
  }
  return result;
}

inline void serialize_records(const std::vector<ActivityRecord>& records,
                              std::ostream& out, RecordFormat format) {
  if (format == RecordFormat::csv) {
    csv::write_row(out, detail::record_columns());
    for (const auto& r : records) {
      csv::write_row(out, {r.id, r.donor, r.recipient.value_or(""),
                           std::to_string(r.year), r.title, r.short_description,
                           r.long_description, std::to_string(r.reported_marker.value),
                           r.language_tag.value_or("")});
    }
  } else {
    for (const auto& r : records) {
      nlohmann::json j;
      j["id"] = r.id;
      j["donor"] = r.donor;
      if (r.recipient) j["recipient"] = *r.recipient;
      j["year"] = r.year;
      j["title"] = r.title;
      j["short_description"] = r.short_description;
      j["long_description"] = r.long_description;
      j["reported_marker"] = r.reported_marker.value;
      if (r.language_tag) j["language_tag"] = *r.language_tag;
      out << j.dump() << "\n";
    }
  }
}

// The classifier input text: title + long description (optionally also the
// short description), joined by single spaces with empty components omitted.
inline std::string assemble_record_text(const ActivityRecord& r, bool include_short) {
  std::string out;
  auto append_part = [&](const std::string& part) {
    std::string t = trim(part);
    if (t.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += t;
  };
  append_part(r.title);
  if (include_short) append_part(r.short_description);
  append_part(r.long_description);
  return out;
}

inline std::size_t filter_length(const ActivityRecord& r, LengthSource source,
                                 bool include_short) {
  if (source == LengthSource::long_description) return utf8_length(r.long_description);
  return utf8_length(assemble_record_text(r, include_short));
}

inline std::vector<ActivityRecord> apply_filter(
    const std::vector<ActivityRecord>& records, const DatasetFilter& f) {
  if (f.min_reported_marker &&
      !RioMarker::valid_reported(*f.min_reported_marker)) {
    throw Error("filter: min_reported_marker must be 0, 1 or 2");
  }
  if (f.year_range && f.year_range->first > f.year_range->second) {
    throw Error("filter: year_range min > max");
  }
  std::optional<std::set<std::string>> canonical_donors;
  if (f.donors) {
    canonical_donors.emplace();
    for (const auto& d : *f.donors) canonical_donors->insert(canonical_donor(d));
  }
  std::vector<ActivityRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (f.min_reported_marker && r.reported_marker.value < *f.min_reported_marker)
      continue;
    if (canonical_donors && !canonical_donors->count(canonical_donor(r.donor)))
      continue;
    if (f.year_range &&
        (r.year < f.year_range->first || r.year > f.year_range->second))
      continue;
    if (f.min_text_length &&
        filter_length(r, f.length_source, f.include_short_description) <
            static_cast<std::size_t>(*f.min_text_length))
      continue;
    out.push_back(r);
  }
  return out;
}

struct GoldJoin {
  std::vector<std::pair<ActivityRecord, RioMarker>> pairs;
  std::size_t unmatched_labels = 0;
  std::size_t unmatched_records = 0;
};

inline GoldJoin join_gold(const std::vector<ActivityRecord>& records,
                          const std::vector<GoldLabel>& labels) {
  std::unordered_map<std::string, RioMarker> by_id;
  for (const auto& l : labels) {
    if (!by_id.emplace(l.id, l.gold_marker).second) {
      throw Error("duplicate gold label for id '" + l.id + "'");
    }
  }
  GoldJoin join;
  std::unordered_set<std::string> matched;
  for (const auto& r : records) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      ++join.unmatched_records;
      continue;
    }
    if (!matched.insert(r.id).second) {
      throw Error("gold label id '" + r.id + "' matches multiple records");
    }
    join.pairs.emplace_back(r, it->second);
  }
  join.unmatched_labels = by_id.size() - matched.size();
  return join;
}

struct GoldParseResult {
  std::vector<GoldLabel> labels;
  std::vector<RowIssue> skipped;
};

// Gold labels file: CSV `id,gold_marker`, markers in {0,1,2,99}.
inline GoldParseResult parse_gold_labels(std::istream& in, bool strict = false) {
  GoldParseResult result;
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error("empty gold file: missing header");
  if (row.size() != 2 || row[0] != "id" || row[1] != "gold_marker") {
    throw Error("malformed gold header: expected id,gold_marker");
  }
  std::unordered_set<std::string> ids;
  while (reader.next(row)) {
    const long line = reader.row_line();
    if (row.size() == 1 && row[0].empty()) continue;
    long marker = -1;
    if (row.size() != 2 || row[0].empty() || !detail::parse_int(row[1], marker) ||
        !RioMarker::valid(static_cast<int>(marker))) {
      if (strict) throw Error("line " + std::to_string(line) + ": malformed gold row");
      result.skipped.push_back({line, "malformed gold row"});
      continue;
    }
    if (!ids.insert(row[0]).second) {
      throw Error("duplicate gold label for id '" + row[0] + "' at line " +
                  std::to_string(line));
    }
    result.labels.push_back({row[0], RioMarker{static_cast<int>(marker)}});
  }
  return result;
}

}  // namespace riomark
