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

#include <stdexcept>
#include <string>

namespace riomark {

// Fatal conditions (malformed headers, duplicate ids, contract violations).
// Recoverable row-level problems are reported as counts/lists instead.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A skipped input row: 1-based line number plus the reason it was dropped.
struct RowIssue {
  long line = 0;
  std::string reason;
};

}  // namespace riomark
