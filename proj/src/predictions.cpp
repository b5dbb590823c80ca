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

#include "histoens/predictions.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "histoens/csv.hpp"
#include "histoens/error.hpp"
#include "histoens/io.hpp"

namespace histoens {
namespace {

constexpr std::string_view kModelIdPrefix = "# model_id=";
constexpr std::string_view kScorePrefix = "score_";

double parse_score(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ValidationError("malformed score '" + text + "'");
  }
  return value;
}

std::string format_score(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void check_row(const std::string& sample_id, const std::vector<double>& scores,
               std::size_t class_count) {
  if (scores.size() != class_count) {
    throw ValidationError("sample '" + sample_id + "' has " + std::to_string(scores.size()) +
                          " scores for " + std::to_string(class_count) + " classes");
  }
  double sum = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("sample '" + sample_id + "' has a non-finite score");
    if (s < 0.0) {
      throw ValidationError("sample '" + sample_id + "' has negative score " + format_score(s));
    }
    sum += s;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw ValidationError("sample '" + sample_id + "' scores sum to " + format_score(sum) +
                          ", outside 1 +/- 1e-6");
  }
}

}  // namespace

void PredictionTable::validate() const {
  if (model_id.empty()) throw ValidationError("prediction table has no model_id");
  if (classes.size() < 2) throw ValidationError("prediction table needs at least two classes");
  for (const auto& [id, scores] : rows) check_row(id, scores, classes.size());
}

PredictionTable parse_predictions(std::istream& in) {
  PredictionTable table;
  csv::Reader reader(in);
  std::optional<csv::Row> row;
  while ((row = reader.next(/*keep_comments=*/true))) {
    const std::string& first = row->fields.front();
    if (row->fields.size() == 1 && first.starts_with('#')) {
      if (first.starts_with(kModelIdPrefix)) table.model_id = first.substr(kModelIdPrefix.size());
      continue;
    }
    break;
  }
  if (table.model_id.empty()) {
    throw ValidationError("missing '# model_id=<id>' line before the header");
  }
  if (!row || row->fields.size() < 3 || row->fields[0] != "sample_id") {
    throw ValidationError("line " + std::to_string(row ? row->line : reader.line()) +
                          ": expected header sample_id,score_<class>,...");
  }
  for (std::size_t i = 1; i < row->fields.size(); ++i) {
    const auto& col = row->fields[i];
    if (!col.starts_with(kScorePrefix) || col.size() == kScorePrefix.size()) {
      throw ValidationError("line " + std::to_string(row->line) + ": bad score column '" + col + "'");
    }
    table.classes.push_back(col.substr(kScorePrefix.size()));
  }

  while ((row = reader.next())) {
    auto& f = row->fields;
    const std::string where = "line " + std::to_string(row->line) + ": ";
    if (f.size() != table.classes.size() + 1) {
      throw ValidationError(where + "expected " + std::to_string(table.classes.size() + 1) +
                            " fields, found " + std::to_string(f.size()));
    }
    std::vector<double> scores;
    scores.reserve(table.classes.size());
    try {
      for (std::size_t i = 1; i < f.size(); ++i) scores.push_back(parse_score(f[i]));
      check_row(f[0], scores, table.classes.size());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!table.rows.emplace(f[0], std::move(scores)).second) {
      throw ValidationError(where + "duplicate sample_id '" + f[0] + "'");
    }
  }
  return table;
}

void write_predictions(std::ostream& out, const PredictionTable& table) {
  out << kModelIdPrefix << table.model_id << '\n';
  std::vector<std::string> header{"sample_id"};
  for (const auto& c : table.classes) header.push_back(std::string(kScorePrefix) + c);
  csv::write_row(out, header);
  for (const auto& [id, scores] : table.rows) {
    std::vector<std::string> fields{id};
    for (double s : scores) fields.push_back(format_score(s));
    csv::write_row(out, fields);
  }
}

std::string predictions_to_string(const PredictionTable& table) {
  std::ostringstream out;
  write_predictions(out, table);
  return out.str();
}

PredictionTable restrict_to_split(const PredictionTable& table, const Manifest& m,
                                  std::optional<Split> split) {
  table.validate();
  if (table.classes != m.classes) {
    throw ValidationError("model '" + table.model_id + "' class list does not match the manifest");
  }
  std::unordered_map<std::string_view, const SampleRecord*> by_id;
  for (const auto& r : m.records) by_id.emplace(r.sample_id, &r);

  PredictionTable out{table.model_id, table.classes, {}};
  for (const auto& [id, scores] : table.rows) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("model '" + table.model_id + "' scores unknown sample '" + id + "'");
    }
    if (!split || it->second->split == split) out.rows.emplace(id, scores);
  }
  for (const auto& r : m.records) {
    if (split && r.split != split) continue;
    if (!out.rows.contains(r.sample_id)) {
      throw ValidationError("model '" + table.model_id + "' is missing sample '" + r.sample_id + "'");
    }
  }
  return out;
}

PredictionTable load_predictions(const std::filesystem::path& path, const Manifest& m,
                                 std::optional<Split> split) {
  std::istringstream in(io::read_file(path));
  try {
    return restrict_to_split(parse_predictions(in), m, split);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

AlignedPredictions::AlignedPredictions(std::vector<std::string> model_ids,
                                       std::vector<std::string> classes,
                                       std::vector<std::string> sample_ids,
                                       std::vector<std::size_t> truth,
                                       std::vector<std::vector<double>> scores)
    : model_ids_(std::move(model_ids)),
      classes_(std::move(classes)),
      sample_ids_(std::move(sample_ids)),
      truth_(std::move(truth)),
      scores_(std::move(scores)) {
  if (model_ids_.empty()) throw ValidationError("no prediction tables to align");
  if (model_ids_.size() != scores_.size()) throw ValidationError("model/score count mismatch");
  if (truth_.size() != sample_ids_.size()) throw ValidationError("truth/sample count mismatch");
  for (const auto& s : scores_) {
    if (s.size() != sample_ids_.size() * classes_.size()) {
      throw ValidationError("score matrix has the wrong shape");
    }
  }
  for (auto t : truth_) {
    if (t >= classes_.size()) throw ValidationError("truth label out of range");
  }
}

AlignedPredictions AlignedPredictions::select_models(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> scores;
  for (auto i : indices) {
    ids.push_back(model_ids_.at(i));
    scores.push_back(scores_.at(i));
  }
  return AlignedPredictions(std::move(ids), classes_, sample_ids_, truth_, std::move(scores));
}

AlignedPredictions align(std::span<const PredictionTable> tables, const Manifest& m,
                         std::optional<Split> split) {
  if (tables.empty()) throw ValidationError("no prediction tables to align");
  const PredictionTable& first = tables.front();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const PredictionTable& t = tables[i];
    t.validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (tables[j].model_id == t.model_id) {
        throw ValidationError("model_id '" + t.model_id + "' appears twice");
      }
    }
    if (t.classes != first.classes) {
      throw ValidationError("models '" + first.model_id + "' and '" + t.model_id +
                            "' have different class lists");
    }
    if (t.rows.size() != first.rows.size() ||
        !std::equal(t.rows.begin(), t.rows.end(), first.rows.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw ValidationError("models '" + first.model_id + "' and '" + t.model_id +
                            "' cover different samples");
    }
  }
  if (first.classes != m.classes) {
    throw ValidationError("prediction class list does not match the manifest");
  }

  std::unordered_map<std::string_view, const SampleRecord*> by_id;
  for (const auto& r : m.records) by_id.emplace(r.sample_id, &r);

  // std::map iteration is already sorted by sample_id.
  std::vector<std::string> sample_ids;
  std::vector<std::size_t> truth;
  for (const auto& [id, _] : first.rows) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("unknown sample '" + id + "'");
    if (split && it->second->split != split) {
      throw ValidationError("sample '" + id + "' is not in split " + std::string(to_string(*split)));
    }
    sample_ids.push_back(id);
    truth.push_back(it->second->class_label);
  }
  if (split) {
    for (const auto& r : m.records) {
      if (r.split == split && !first.rows.contains(r.sample_id)) {
        throw ValidationError("model '" + first.model_id + "' is missing sample '" + r.sample_id + "'");
      }
    }
  }

  std::vector<std::string> model_ids;
  std::vector<std::vector<double>> scores;
  for (const auto& t : tables) {
    model_ids.push_back(t.model_id);
    std::vector<double> flat;
    flat.reserve(t.rows.size() * t.classes.size());
    for (const auto& [_, row] : t.rows) flat.insert(flat.end(), row.begin(), row.end());
    scores.push_back(std::move(flat));
  }
  return AlignedPredictions(std::move(model_ids), first.classes, std::move(sample_ids),
                            std::move(truth), std::move(scores));
}

}  // namespace histoens
