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
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "histoens/manifest.hpp"

namespace histoens {

// Row-stochastic scores are accepted when every entry is >= 0 and each row
// sums to 1 within this tolerance.
inline constexpr double kRowSumTolerance = 1e-6;

// One classifier's per-sample class scores.
struct PredictionTable {
  std::string model_id;
  std::vector<std::string> classes;
  std::map<std::string, std::vector<double>> rows;

  void validate() const;

  friend bool operator==(const PredictionTable&, const PredictionTable&) = default;
};

// File format:
//   # model_id=<id>
//   sample_id,score_<class0>,score_<class1>,...
//   <rows>
PredictionTable parse_predictions(std::istream& in);
void write_predictions(std::ostream& out, const PredictionTable& table);
std::string predictions_to_string(const PredictionTable& table);

// Keeps only the rows of `split` (all records when nullopt). Every row must
// name a manifest sample and every sample of the split must be present.
PredictionTable restrict_to_split(const PredictionTable& table, const Manifest& m,
                                  std::optional<Split> split);

PredictionTable load_predictions(const std::filesystem::path& path, const Manifest& m,
                                 std::optional<Split> split);

// Dense, canonically ordered view over several tables of the same samples.
class AlignedPredictions {
 public:
  AlignedPredictions(std::vector<std::string> model_ids, std::vector<std::string> classes,
                     std::vector<std::string> sample_ids, std::vector<std::size_t> truth,
                     std::vector<std::vector<double>> scores);

  std::size_t model_count() const noexcept { return model_ids_.size(); }
  std::size_t sample_count() const noexcept { return sample_ids_.size(); }
  std::size_t class_count() const noexcept { return classes_.size(); }

  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  const std::vector<std::size_t>& truth() const noexcept { return truth_; }

  // Scores of `model` on `sample`, one per class.
  std::span<const double> row(std::size_t model, std::size_t sample) const {
    return std::span(scores_[model]).subspan(sample * classes_.size(), classes_.size());
  }
  // All scores of `model`, sample-major.
  std::span<const double> scores(std::size_t model) const { return scores_[model]; }

  AlignedPredictions select_models(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> model_ids_;
  std::vector<std::string> classes_;
  std::vector<std::string> sample_ids_;
  std::vector<std::size_t> truth_;
  std::vector<std::vector<double>> scores_;
};

// Samples are ordered by sample_id; truth comes from the manifest.
AlignedPredictions align(std::span<const PredictionTable> tables, const Manifest& m,
                         std::optional<Split> split);

}  // namespace histoens
