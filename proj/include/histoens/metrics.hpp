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
#include <vector>

namespace histoens {

// n x n counts with rows = output (predicted) class, columns = target class.
// For a binary problem with positive class p this is the usual
//   [[TP, FP],
//    [FN, TN]]
// layout when p = 0.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes);

  std::size_t size() const noexcept { return n_; }
  std::uint64_t& at(std::size_t output, std::size_t target) { return counts_[output * n_ + target]; }
  std::uint64_t at(std::size_t output, std::size_t target) const {
    return counts_[output * n_ + target];
  }
  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t n_classes);

// Absent values mark a zero denominator; they are never reported as 0.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fbeta;
  std::optional<double> average_precision;
};

struct MetricsReport {
  std::size_t samples = 0;   // scored samples, rejected ones included
  std::size_t rejected = 0;  // abstentions, excluded from the matrix
  double accuracy = 0.0;     // correct / samples
  std::size_t positive_class = 0;
  double beta = 1.0;
  std::vector<ClassMetrics> per_class;
  std::optional<double> mean_ap;
  ConfusionMatrix confusion{2};

  const ClassMetrics& positive() const { return per_class.at(positive_class); }
};

// Threshold metrics. Every class gets one-vs-rest precision/recall/F1/F-beta;
// `positive_class` picks the headline class. `rejected` abstentions count in
// the accuracy denominator but not in the matrix.
MetricsReport classification_metrics(const ConfusionMatrix& cm, std::size_t positive_class,
                                     double beta = 1.0, std::size_t rejected = 0);

// Ranked-list average precision of class `c`: samples ordered by descending
// score, ties by ascending sample_id, then
//   AP = (sum over ranks t of P(t) * rel(t)) / N
// where P(t) is the precision of the top t and N the number of class-c samples.
double average_precision(std::span<const double> scores, std::span<const std::size_t> truth,
                         std::size_t c, std::span<const std::string> sample_ids);

// Unweighted mean of per-class AP over a sample-major score matrix with
// `n_classes` columns.
double mean_ap(std::span<const double> scores, std::span<const std::size_t> truth,
               std::span<const std::string> sample_ids, std::size_t n_classes);

// Per-class AP for every class, in class order.
std::vector<double> per_class_ap(std::span<const double> scores, std::span<const std::size_t> truth,
                                 std::span<const std::string> sample_ids, std::size_t n_classes);

}  // namespace histoens
