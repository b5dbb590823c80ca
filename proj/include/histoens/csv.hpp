// Copyright 2026 The histoens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace histoens::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number of the row in the source
  std::vector<std::string> fields;
};

// Reads one logical record. Handles RFC 4180 quoting, so a quoted field may
// span lines. Lines beginning with '#' are returned with a single field
// holding the whole line when `keep_comments` is set, skipped otherwise.
// Blank lines are skipped. Returns nullopt at end of input.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::optional<Row> next(bool keep_comments = false);
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

// Writes a field, quoting only when it contains a comma, quote, or newline.
void write_field(std::ostream& out, std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace histoens::csv
