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

#include "histoens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "histoens/error.hpp"

namespace histoens {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> f_score(std::optional<double> p, std::optional<double> r, double beta) {
  if (!p || !r) return std::nullopt;
  const double b2 = beta * beta;
  const double den = b2 * *p + *r;
  if (den == 0.0) return std::nullopt;
  return (1.0 + b2) * *p * *r / den;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : n_(n_classes), counts_(n_classes * n_classes, 0) {
  if (n_classes == 0) throw ValidationError("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < n_; ++i) t += counts_[i * n_ + i];
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t n_classes) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("predicted and truth have different lengths (" +
                          std::to_string(predicted.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
  }
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= n_classes || truth[i] >= n_classes) {
      throw ValidationError("label out of range at sample " + std::to_string(i));
    }
    ++cm.at(predicted[i], truth[i]);
  }
  return cm;
}

MetricsReport classification_metrics(const ConfusionMatrix& cm, std::size_t positive_class,
                                     double beta, std::size_t rejected) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ValidationError("beta must be a positive finite number");
  }
  if (positive_class >= cm.size()) throw ValidationError("positive class out of range");
  const std::uint64_t total = cm.total();
  if (total + rejected == 0) throw ValidationError("confusion matrix is empty");

  MetricsReport report;
  report.samples = static_cast<std::size_t>(total) + rejected;
  report.rejected = rejected;
  report.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(report.samples);
  report.positive_class = positive_class;
  report.beta = beta;
  report.confusion = cm;
  report.per_class.resize(cm.size());
  for (std::size_t c = 0; c < cm.size(); ++c) {
    std::uint64_t predicted_c = 0;
    std::uint64_t actual_c = 0;
    for (std::size_t k = 0; k < cm.size(); ++k) {
      predicted_c += cm.at(c, k);
      actual_c += cm.at(k, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    ClassMetrics& m = report.per_class[c];
    m.precision = ratio(tp, predicted_c);
    m.recall = ratio(tp, actual_c);
    m.f1 = f_score(m.precision, m.recall, 1.0);
    m.fbeta = f_score(m.precision, m.recall, beta);
  }
  return report;
}

double average_precision(std::span<const double> scores, std::span<const std::size_t> truth,
                         std::size_t c, std::span<const std::string> sample_ids) {
  if (scores.size() != truth.size() || scores.size() != sample_ids.size()) {
    throw ValidationError("average_precision: scores, truth and ids differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return sample_ids[a] < sample_ids[b];
  });

  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t t = 0; t < order.size(); ++t) {
    if (truth[order[t]] != c) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(t + 1);
  }
  if (hits == 0) throw ValidationError("average precision undefined: no samples of class " + std::to_string(c));
  return sum / static_cast<double>(hits);
}

std::vector<double> per_class_ap(std::span<const double> scores, std::span<const std::size_t> truth,
                                 std::span<const std::string> sample_ids, std::size_t n_classes) {
  if (n_classes == 0 || scores.size() != truth.size() * n_classes) {
    throw ValidationError("score matrix shape does not match the sample count");
  }
  std::vector<double> column(truth.size());
  std::vector<double> out;
  out.reserve(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < truth.size(); ++i) column[i] = scores[i * n_classes + c];
    out.push_back(average_precision(column, truth, c, sample_ids));
  }
  return out;
}

double mean_ap(std::span<const double> scores, std::span<const std::size_t> truth,
               std::span<const std::string> sample_ids, std::size_t n_classes) {
  const auto aps = per_class_ap(scores, truth, sample_ids, n_classes);
  return std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size());
}

}  // namespace histoens
