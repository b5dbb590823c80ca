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

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "histoens/ensemble.hpp"
#include "histoens/metrics.hpp"
#include "histoens/predictions.hpp"

namespace histoens {

inline constexpr int kReportVersion = 1;
inline constexpr const char* kReportSchema = "histoens.report";
inline constexpr const char* kComparisonSchema = "histoens.comparison";

// Threshold metrics plus per-class AP/mAP for one set of labels and scores.
// `labels` may contain rejections (nullopt).
MetricsReport evaluate_scores(std::span<const std::optional<std::size_t>> labels,
                              std::span<const double> scores, const AlignedPredictions& ap,
                              std::size_t positive_class, double beta);

// Metrics of classifier `model` alone (argmax labels).
MetricsReport evaluate_model(const AlignedPredictions& ap, std::size_t model,
                             std::size_t positive_class, double beta);

// Four-decimal rendering used in the display fields; absent values are "n/a".
std::string display4(std::optional<double> value);

nlohmann::ordered_json metrics_to_json(const MetricsReport& report,
                                       const std::vector<std::string>& classes);
nlohmann::ordered_json weights_to_json(const std::vector<std::string>& model_ids,
                                       const WeightVector& w,
                                       const std::optional<SearchResult>& grid);
nlohmann::ordered_json search_to_json(const SearchResult& result, const SearchOptions& options);

// One row per model and ensemble, in the accuracy/precision/recall/F1/mAP
// layout, merged from several report documents.
struct ComparisonRow {
  std::string model;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> mean_ap;
};

std::vector<ComparisonRow> merge_reports(const std::vector<nlohmann::ordered_json>& reports);
nlohmann::ordered_json comparison_to_json(const std::vector<ComparisonRow>& rows);
// Fixed-width plain-text table, values in percent with two decimals.
std::string render_comparison(const std::vector<ComparisonRow>& rows);

}  // namespace histoens
