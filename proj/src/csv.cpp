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

#include "histoens/csv.hpp"

#include "histoens/error.hpp"

namespace histoens::csv {

std::optional<Row> Reader::next(bool keep_comments) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (keep_comments) return Row{line_, {text}};
      continue;
    }

    Row row{line_, {}};
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    for (;;) {
      if (i == text.size()) {
        if (!quoted) break;
        // Quoted field continues on the next physical line.
        std::string more;
        if (!std::getline(in_, more)) {
          throw ValidationError("line " + std::to_string(row.line) +
                                ": unterminated quoted field");
        }
        ++line_;
        if (!more.empty() && more.back() == '\r') more.pop_back();
        field.push_back('\n');
        text = std::move(more);
        i = 0;
        continue;
      }
      const char c = text[i++];
      if (quoted) {
        if (c == '"') {
          if (i < text.size() && text[i] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    row.fields.push_back(std::move(field));
    return row;
  }
  return std::nullopt;
}

void write_field(std::ostream& out, std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
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

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

}  // namespace histoens::csv
