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

#include "histoens/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "histoens/error.hpp"
#include "histoens/metrics.hpp"

namespace histoens {
namespace {

constexpr double kWeightSumTolerance = 1e-9;

void check_weight_count(const AlignedPredictions& ap, std::size_t n) {
  if (n != ap.model_count()) {
    throw ValidationError("got " + std::to_string(n) + " weights for " +
                          std::to_string(ap.model_count()) + " classifiers");
  }
}

double log_odds(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("accuracy " + std::to_string(p) +
                          " must lie strictly between 0 and 1 (log-odds would be infinite)");
  }
  return std::log(p / (1.0 - p));
}

// Per-class argmax vote counts of every classifier on one sample.
std::vector<std::size_t> tally(const AlignedPredictions& ap, std::size_t sample) {
  std::vector<std::size_t> votes(ap.class_count(), 0);
  for (std::size_t i = 0; i < ap.model_count(); ++i) ++votes[argmax(ap.row(i, sample))];
  return votes;
}

VoteOutput combine(const AlignedPredictions& ap, std::span<const double> weights, bool one_hot) {
  check_weight_count(ap, weights.size());
  const std::size_t l = ap.class_count();
  VoteOutput out;
  out.labels.resize(ap.sample_count());
  out.scores.assign(ap.sample_count() * l, 0.0);
  for (std::size_t s = 0; s < ap.sample_count(); ++s) {
    std::span<double> combined(out.scores.data() + s * l, l);
    for (std::size_t i = 0; i < ap.model_count(); ++i) {
      const auto row = ap.row(i, s);
      if (one_hot) {
        combined[argmax(row)] += weights[i];
      } else {
        for (std::size_t j = 0; j < l; ++j) combined[j] += weights[i] * row[j];
      }
    }
    out.labels[s] = argmax(combined);
  }
  return out;
}

__int128 binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > static_cast<__int128>(std::numeric_limits<std::uint64_t>::max())) {
      throw ValidationError("weight grid is too large to enumerate");
    }
  }
  return c;
}

// Composition of `units` into k.size() parts at lexicographic rank `rank`.
void unrank_composition(std::uint64_t rank, std::int64_t units, std::span<std::int64_t> k) {
  std::int64_t left = units;
  const std::size_t parts = k.size();
  for (std::size_t p = 0; p + 1 < parts; ++p) {
    const std::uint64_t rest = parts - p - 1;
    for (std::int64_t a = 0; a <= left; ++a) {
      const auto count = static_cast<std::uint64_t>(
          binomial(static_cast<std::uint64_t>(left - a) + rest - 1, rest - 1));
      if (rank < count) {
        k[p] = a;
        left -= a;
        break;
      }
      rank -= count;
    }
  }
  k[parts - 1] = left;
}

// Lexicographic successor; false after the last composition.
bool next_composition(std::span<std::int64_t> k, std::int64_t units) {
  const std::size_t parts = k.size();
  if (parts < 2) return false;
  std::int64_t prefix = units - k[parts - 1];
  for (std::size_t i = parts - 1; i-- > 0;) {
    if (prefix < units) {
      ++k[i];
      for (std::size_t j = i + 1; j + 1 < parts; ++j) k[j] = 0;
      std::int64_t used = 0;
      for (std::size_t j = 0; j + 1 < parts; ++j) used += k[j];
      k[parts - 1] = units - used;
      return true;
    }
    prefix -= k[i];
  }
  return false;
}

struct ChunkBest {
  double value = -1.0;
  std::uint64_t first = 0;
  std::uint64_t ties = 0;
};

}  // namespace

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ValidationError("weight vector is empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights must be finite and >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw ValidationError("weights sum to " + std::to_string(sum) + ", not 1");
  }
}

WeightVector WeightVector::uniform(std::size_t n) {
  if (n == 0) throw ValidationError("weight vector is empty");
  return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

WeightVector WeightVector::basis(std::size_t n, std::size_t i) {
  if (i >= n) throw ValidationError("basis index out of range");
  std::vector<double> w(n, 0.0);
  w[i] = 1.0;
  return WeightVector(std::move(w));
}

std::string_view to_string(VoteMode m) {
  switch (m) {
    case VoteMode::soft_weighted: return "soft_weighted";
    case VoteMode::hard_weighted: return "hard_weighted";
    case VoteMode::absolute_majority: return "absolute_majority";
    case VoteMode::relative_majority: return "relative_majority";
    case VoteMode::bayes_logodds: return "bayes_logodds";
  }
  return "?";
}

VoteMode parse_vote_mode(std::string_view text) {
  if (text == "soft" || text == "soft_weighted") return VoteMode::soft_weighted;
  if (text == "hard" || text == "hard_weighted") return VoteMode::hard_weighted;
  if (text == "abs" || text == "absolute_majority") return VoteMode::absolute_majority;
  if (text == "rel" || text == "relative_majority") return VoteMode::relative_majority;
  if (text == "bayes" || text == "bayes_logodds") return VoteMode::bayes_logodds;
  throw ValidationError("unknown vote mode '" + std::string(text) + "'");
}

void EnsembleConfig::validate(std::size_t model_count, std::size_t class_count) const {
  switch (mode) {
    case VoteMode::soft_weighted:
    case VoteMode::hard_weighted:
      if (!weights) throw ValidationError(std::string(to_string(mode)) + " needs weights");
      if (weights->size() != model_count) {
        throw ValidationError("got " + std::to_string(weights->size()) + " weights for " +
                              std::to_string(model_count) + " classifiers");
      }
      break;
    case VoteMode::bayes_logodds: {
      if (!priors || !accuracies) throw ValidationError("bayes_logodds needs priors and accuracies");
      if (priors->size() != class_count) throw ValidationError("need one prior per class");
      if (accuracies->size() != model_count) throw ValidationError("need one accuracy per classifier");
      double sum = 0.0;
      for (double p : *priors) {
        if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("priors must be positive");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kWeightSumTolerance) throw ValidationError("priors do not sum to 1");
      for (double p : *accuracies) log_odds(p);
      break;
    }
    case VoteMode::absolute_majority:
    case VoteMode::relative_majority:
      break;
  }
}

std::size_t VoteOutput::rejected() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](const auto& l) { return !l.has_value(); }));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

VoteOutput weighted_soft_vote(const AlignedPredictions& ap, const WeightVector& w) {
  return combine(ap, w.values(), /*one_hot=*/false);
}

VoteOutput weighted_soft_vote_raw(const AlignedPredictions& ap, std::span<const double> weights) {
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights must be finite and >= 0");
  }
  return combine(ap, weights, /*one_hot=*/false);
}

VoteOutput weighted_hard_vote(const AlignedPredictions& ap, const WeightVector& w) {
  return combine(ap, w.values(), /*one_hot=*/true);
}

VoteOutput hard_vote_absolute(const AlignedPredictions& ap) {
  const std::size_t l = ap.class_count();
  const std::size_t t = ap.model_count();
  VoteOutput out;
  out.labels.resize(ap.sample_count());
  out.scores.resize(ap.sample_count() * l);
  for (std::size_t s = 0; s < ap.sample_count(); ++s) {
    const auto votes = tally(ap, s);
    for (std::size_t j = 0; j < l; ++j) {
      out.scores[s * l + j] = static_cast<double>(votes[j]) / static_cast<double>(t);
      if (2 * votes[j] > t) out.labels[s] = j;
    }
  }
  return out;
}

VoteOutput hard_vote_relative(const AlignedPredictions& ap) {
  const std::size_t l = ap.class_count();
  const std::size_t t = ap.model_count();
  VoteOutput out;
  out.labels.resize(ap.sample_count());
  out.scores.resize(ap.sample_count() * l);
  for (std::size_t s = 0; s < ap.sample_count(); ++s) {
    const auto votes = tally(ap, s);
    std::size_t best = 0;
    for (std::size_t j = 0; j < l; ++j) {
      out.scores[s * l + j] = static_cast<double>(votes[j]) / static_cast<double>(t);
      if (votes[j] > votes[best]) best = j;
    }
    out.labels[s] = best;
  }
  return out;
}

WeightVector logodds_weights(std::span<const double> accuracies) {
  if (accuracies.empty()) throw ValidationError("no accuracies given");
  std::vector<double> raw;
  raw.reserve(accuracies.size());
  for (double p : accuracies) raw.push_back(std::max(0.0, log_odds(p)));
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(sum > 0.0)) {
    throw ValidationError("every classifier is at or below chance; log-odds weights are all zero");
  }
  for (double& w : raw) w /= sum;
  return WeightVector(std::move(raw));
}

BayesScore bayes_combined_score(std::span<const std::size_t> labels,
                                std::span<const double> priors,
                                std::span<const double> accuracies) {
  if (labels.size() != accuracies.size()) {
    throw ValidationError("need one accuracy per classifier label");
  }
  double prior_sum = 0.0;
  for (double p : priors) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("priors must be positive");
    prior_sum += p;
  }
  if (priors.empty() || std::abs(prior_sum - 1.0) > kWeightSumTolerance) {
    throw ValidationError("priors do not sum to 1");
  }
  BayesScore out;
  out.scores.reserve(priors.size());
  for (double p : priors) out.scores.push_back(std::log(p));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= priors.size()) throw ValidationError("classifier label out of range");
    out.scores[labels[i]] += log_odds(accuracies[i]);
  }
  out.label = argmax(out.scores);
  return out;
}

VoteOutput bayes_vote(const AlignedPredictions& ap, std::span<const double> priors,
                      std::span<const double> accuracies) {
  check_weight_count(ap, accuracies.size());
  if (priors.size() != ap.class_count()) throw ValidationError("need one prior per class");
  const std::size_t l = ap.class_count();
  VoteOutput out;
  out.labels.resize(ap.sample_count());
  out.scores.resize(ap.sample_count() * l);
  std::vector<std::size_t> labels(ap.model_count());
  for (std::size_t s = 0; s < ap.sample_count(); ++s) {
    for (std::size_t i = 0; i < ap.model_count(); ++i) labels[i] = argmax(ap.row(i, s));
    auto score = bayes_combined_score(labels, priors, accuracies);
    std::copy(score.scores.begin(), score.scores.end(), out.scores.begin() + static_cast<std::ptrdiff_t>(s * l));
    out.labels[s] = score.label;
  }
  return out;
}

WeightVector metric_weights(std::span<const double> values) {
  if (values.empty()) throw ValidationError("no metric values given");
  double sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("metric weights need positive values");
    sum += v;
  }
  std::vector<double> w;
  w.reserve(values.size());
  for (double v : values) w.push_back(v / sum);
  return WeightVector(std::move(w));
}

std::vector<std::size_t> prune(std::span<const std::string> model_ids,
                               std::span<const double> metric, std::size_t keep_k) {
  if (model_ids.size() != metric.size()) throw ValidationError("need one metric value per model");
  if (keep_k < 1 || keep_k > model_ids.size()) {
    throw ValidationError("keep must be between 1 and " + std::to_string(model_ids.size()) +
                          ", got " + std::to_string(keep_k));
  }
  for (double v : metric) {
    if (!std::isfinite(v)) throw ValidationError("pruning metric must be finite");
  }
  std::vector<std::size_t> order(model_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (metric[a] != metric[b]) return metric[a] > metric[b];
    return model_ids[a] < model_ids[b];
  });
  order.resize(keep_k);
  std::sort(order.begin(), order.end());
  return order;
}

VoteOutput run_ensemble(const AlignedPredictions& ap, const EnsembleConfig& config) {
  config.validate(ap.model_count(), ap.class_count());
  switch (config.mode) {
    case VoteMode::soft_weighted: return weighted_soft_vote(ap, *config.weights);
    case VoteMode::hard_weighted: return weighted_hard_vote(ap, *config.weights);
    case VoteMode::absolute_majority: return hard_vote_absolute(ap);
    case VoteMode::relative_majority: return hard_vote_relative(ap);
    case VoteMode::bayes_logodds: return bayes_vote(ap, *config.priors, *config.accuracies);
  }
  throw ValidationError("unknown vote mode");
}

std::string_view to_string(SearchObjective o) {
  return o == SearchObjective::accuracy ? "accuracy" : "f1";
}

SearchObjective parse_search_objective(std::string_view text) {
  if (text == "accuracy") return SearchObjective::accuracy;
  if (text == "f1") return SearchObjective::f1;
  throw ValidationError("unknown search objective '" + std::string(text) + "'");
}

std::uint64_t grid_cardinality(std::int64_t units, std::size_t parts) {
  if (units < 1 || parts < 1) throw ValidationError("grid needs units >= 1 and parts >= 1");
  return static_cast<std::uint64_t>(
      binomial(static_cast<std::uint64_t>(units) + parts - 1, parts - 1));
}

SearchResult search_weights(const AlignedPredictions& ap, const SearchOptions& options) {
  if (options.step.num() != 1) {
    throw ValidationError("step " + options.step.to_string() + " does not divide 1");
  }
  const std::int64_t units = options.step.den();
  const std::size_t t = ap.model_count();
  const std::size_t l = ap.class_count();
  const std::size_t n = ap.sample_count();
  if (n == 0) throw ValidationError("validation set is empty");
  if (options.objective == SearchObjective::f1 && options.positive_class >= l) {
    throw ValidationError("positive class out of range");
  }
  const std::uint64_t total = grid_cardinality(units, t);

  // Sample-major copy: scores[(s * t + i) * l + j].
  std::vector<double> scores(n * t * l);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < t; ++i) {
      const auto row = ap.row(i, s);
      std::copy(row.begin(), row.end(), scores.begin() + static_cast<std::ptrdiff_t>((s * t + i) * l));
    }
  }
  const auto& truth = ap.truth();

  // Must agree bit for bit with weighted_soft_vote under WeightVector(k / units).
  auto evaluate = [&](std::span<const std::int64_t> k, std::span<double> weights,
                      std::span<double> combined, ConfusionMatrix& cm) -> double {
    for (std::size_t i = 0; i < t; ++i) {
      weights[i] = static_cast<double>(k[i]) / static_cast<double>(units);
    }
    std::size_t correct = 0;
    if (options.objective == SearchObjective::f1) cm = ConfusionMatrix(l);
    for (std::size_t s = 0; s < n; ++s) {
      std::fill(combined.begin(), combined.end(), 0.0);
      const double* base = scores.data() + s * t * l;
      for (std::size_t i = 0; i < t; ++i) {
        const double w = weights[i];
        const double* row = base + i * l;
        for (std::size_t j = 0; j < l; ++j) combined[j] += w * row[j];
      }
      const std::size_t label = argmax(combined);
      if (options.objective == SearchObjective::f1) {
        ++cm.at(label, truth[s]);
      } else if (label == truth[s]) {
        ++correct;
      }
    }
    if (options.objective == SearchObjective::accuracy) {
      return static_cast<double>(correct) / static_cast<double>(n);
    }
    const auto f1 = classification_metrics(cm, options.positive_class).positive().f1;
    return f1 ? *f1 : -1.0;
  };

  constexpr std::uint64_t kChunk = 2048;
  const std::uint64_t chunk_count = (total + kChunk - 1) / kChunk;
  std::vector<ChunkBest> chunks(chunk_count);
  std::atomic<std::uint64_t> next{0};

  auto work = [&] {
    std::vector<std::int64_t> k(t);
    std::vector<double> weights(t);
    std::vector<double> combined(l);
    ConfusionMatrix cm(l);
    for (std::uint64_t c = next++; c < chunk_count; c = next++) {
      const std::uint64_t begin = c * kChunk;
      const std::uint64_t end = std::min(total, begin + kChunk);
      unrank_composition(begin, units, k);
      ChunkBest best;
      for (std::uint64_t r = begin; r < end; ++r) {
        if (r != begin) next_composition(k, units);
        const double value = evaluate(k, weights, combined, cm);
        if (value > best.value) {
          best = {value, r, 1};
        } else if (value == best.value) {
          ++best.ties;
        }
      }
      chunks[c] = best;
    }
  };

  const unsigned workers = std::max(1u, options.workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }

  // Chunk order equals grid order, so a strict-greater scan keeps the
  // lexicographically first maximizer regardless of which thread ran what.
  ChunkBest best;
  for (const auto& c : chunks) {
    if (c.value > best.value) {
      best = c;
    } else if (c.value == best.value) {
      best.ties += c.ties;
    }
  }
  if (best.value < 0.0) {
    throw ValidationError("search objective is undefined at every grid point");
  }

  SearchResult result;
  result.best_grid.assign(t, 0);
  unrank_composition(best.first, units, result.best_grid);
  std::vector<double> w(t);
  for (std::size_t i = 0; i < t; ++i) {
    w[i] = static_cast<double>(result.best_grid[i]) / static_cast<double>(units);
  }
  result.best_weights = WeightVector(std::move(w));
  result.grid_units = units;
  result.best_objective = best.value;
  result.tie_count = best.ties;
  result.evaluated_count = total;
  return result;
}

}  // namespace histoens
