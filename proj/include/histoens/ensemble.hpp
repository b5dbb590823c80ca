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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "histoens/predictions.hpp"
#include "histoens/rational.hpp"

namespace histoens {

// Non-negative per-classifier weights summing to 1 (within 1e-9).
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);

  static WeightVector uniform(std::size_t n);
  static WeightVector basis(std::size_t n, std::size_t i);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> weights_;
};

enum class VoteMode { soft_weighted, hard_weighted, absolute_majority, relative_majority, bayes_logodds };

std::string_view to_string(VoteMode m);
// Accepts the CLI spellings soft|hard|abs|rel|bayes as well as the full names.
VoteMode parse_vote_mode(std::string_view text);

struct EnsembleConfig {
  VoteMode mode = VoteMode::soft_weighted;
  std::optional<WeightVector> weights;           // *_weighted modes
  std::optional<std::vector<double>> priors;     // bayes_logodds
  std::optional<std::vector<double>> accuracies; // bayes_logodds, each in (0, 1)

  void validate(std::size_t model_count, std::size_t class_count) const;
};

// Per-sample outcome of a combination rule. `scores` is sample-major with one
// column per class: combined weighted scores, vote fractions, or Bayes
// discriminants depending on the mode. A missing label is a rejection.
struct VoteOutput {
  std::vector<std::optional<std::size_t>> labels;
  std::vector<double> scores;

  std::size_t rejected() const;
};

// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// combined_j(x) = sum_i w_i * h_i^j(x), label = argmax_j.
VoteOutput weighted_soft_vote(const AlignedPredictions& ap, const WeightVector& w);
// Same rule with any non-negative weights (not necessarily summing to 1).
VoteOutput weighted_soft_vote_raw(const AlignedPredictions& ap, std::span<const double> weights);
// Same rule over one-hot argmax indicators instead of scores.
VoteOutput weighted_hard_vote(const AlignedPredictions& ap, const WeightVector& w);

// A class wins only with more than T/2 argmax votes; otherwise the sample is
// rejected.
VoteOutput hard_vote_absolute(const AlignedPredictions& ap);
// Plurality of argmax votes; ties go to the lowest class index.
VoteOutput hard_vote_relative(const AlignedPredictions& ap);

// w_i proportional to log(p_i / (1 - p_i)), negatives clamped to 0.
WeightVector logodds_weights(std::span<const double> accuracies);

struct BayesScore {
  std::vector<double> scores;
  std::size_t label = 0;
};

// H^j = log P(c_j) + sum_i [label_i == j] * log(p_i / (1 - p_i)).
BayesScore bayes_combined_score(std::span<const std::size_t> labels,
                                std::span<const double> priors,
                                std::span<const double> accuracies);
VoteOutput bayes_vote(const AlignedPredictions& ap, std::span<const double> priors,
                      std::span<const double> accuracies);

// values / sum(values); every value must be > 0.
WeightVector metric_weights(std::span<const double> values);

// Indices (in input order) of the keep_k models with the highest metric.
// Metric ties are broken by ascending model_id.
std::vector<std::size_t> prune(std::span<const std::string> model_ids,
                               std::span<const double> metric, std::size_t keep_k);

VoteOutput run_ensemble(const AlignedPredictions& ap, const EnsembleConfig& config);

enum class SearchObjective { accuracy, f1 };
std::string_view to_string(SearchObjective o);
SearchObjective parse_search_objective(std::string_view text);

struct SearchOptions {
  Rational step{1, 100};
  SearchObjective objective = SearchObjective::accuracy;
  std::size_t positive_class = 0;  // used by the f1 objective
  unsigned workers = 1;
};

struct SearchResult {
  WeightVector best_weights{std::vector<double>{1.0}};
  std::vector<std::int64_t> best_grid;  // best_weights[i] == best_grid[i] / grid_units
  std::int64_t grid_units = 1;          // 1 / step
  double best_objective = 0.0;
  std::uint64_t tie_count = 0;
  std::uint64_t evaluated_count = 0;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

// C(units + parts - 1, parts - 1): weight vectors on the grid with `parts`
// entries that are multiples of 1/units and sum to 1.
std::uint64_t grid_cardinality(std::int64_t units, std::size_t parts);

// Exhaustive search over the quantized simplex. Grid points are visited in
// lexicographic order of their weights; the lexicographically smallest
// maximizer wins and tie_count counts every maximizer. The result does not
// depend on `workers`.
SearchResult search_weights(const AlignedPredictions& ap, const SearchOptions& options);

}  // namespace histoens
