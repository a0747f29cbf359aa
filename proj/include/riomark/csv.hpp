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

// RFC-4180 CSV reader/writer. The reader accepts LF and CRLF line endings,
// quoted fields with "" escapes, and embedded newlines inside quotes. Lines
// starting with '#' before the first record are skipped so that report files
// carrying a manifest comment still round-trip.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "riomark/error.hpp"

namespace riomark::csv {

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads one record. Returns false at end of input. `row_line()` afterwards
  // gives the 1-based line number the record started on.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    skip_leading_comments();
    int c = in_.get();
    if (c == EOF) return false;
    row_line_ = line_;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (true) {
      if (c == EOF) {
        fields.push_back(std::move(field));
        return true;
      }
      if (quoted) {
        if (c == '"') {
          int d = in_.peek();
          if (d == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
      } else if (c == '"' && field.empty() && !any) {
        quoted = true;
        any = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        any = false;
      } else if (c == '\r' && in_.peek() == '\n') {
        in_.get();
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else if (c == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(static_cast<char>(c));
        any = true;
      }
      c = in_.get();
    }
  }

  long row_line() const { return row_line_; }

 private:
  void skip_leading_comments() {
    if (!at_start_) return;
    while (in_.peek() == '#') {
      std::string dummy;
      std::getline(in_, dummy);
      ++line_;
    }
    at_start_ = false;
  }

  std::istream& in_;
  long line_ = 1;
  long row_line_ = 1;
  bool at_start_ = true;
};

inline bool needs_quoting(std::string_view field) {
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void write_field(std::ostream& out, std::string_view field) {
  if (!needs_quoting(field)) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

// Records are terminated with CRLF, per RFC-4180.
inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << "\r\n";
}

}  // namespace riomark::csv
