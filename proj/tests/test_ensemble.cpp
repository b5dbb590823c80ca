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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "histoens/error.hpp"
#include "histoens/ensemble.hpp"

using namespace histoens;
using namespace histoens::testing;

namespace {

using Rows = std::vector<std::vector<double>>;  // one row per sample

AlignedPredictions make_ap(const std::vector<Rows>& models, std::vector<std::size_t> truth) {
  const std::size_t l = models.at(0).at(0).size();
  std::vector<std::string> ids, names, classes;
  for (std::size_t s = 0; s < truth.size(); ++s) ids.push_back("x" + std::to_string(10000 + s));
  for (std::size_t c = 0; c < l; ++c) classes.push_back("c" + std::to_string(c));
  std::vector<std::vector<double>> scores;
  for (std::size_t i = 0; i < models.size(); ++i) {
    names.push_back("m" + std::to_string(i));
    std::vector<double> flat;
    for (const auto& row : models[i]) flat.insert(flat.end(), row.begin(), row.end());
    scores.push_back(std::move(flat));
  }
  return AlignedPredictions(names, classes, ids, std::move(truth), std::move(scores));
}

std::vector<std::size_t> labels_of(const VoteOutput& v) {
  std::vector<std::size_t> out;
  for (const auto& l : v.labels) out.push_back(l.value());
  return out;
}

double accuracy_of(const VoteOutput& v, const std::vector<std::size_t>& truth) {
  std::size_t ok = 0;
  for (std::size_t s = 0; s < truth.size(); ++s) ok += v.labels[s] == truth[s];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

// Scores quantized to a coarse lattice so that ties are common.
AlignedPredictions coarse_aligned(std::mt19937_64& rng, std::size_t models, std::size_t samples,
                                  std::size_t classes) {
  std::vector<Rows> rows(models);
  std::vector<std::size_t> truth(samples);
  for (auto& t : truth) t = rng() % classes;
  for (auto& m : rows) {
    for (std::size_t s = 0; s < samples; ++s) {
      std::vector<double> r(classes, 0.0);
      for (int q = 0; q < 4; ++q) r[rng() % classes] += 0.25;
      m.push_back(r);
    }
  }
  return make_ap(rows, truth);
}

// Lexicographic enumeration of compositions, the order the search promises.
void each_composition(std::int64_t units, std::size_t parts,
                      const std::function<void(const std::vector<std::int64_t>&)>& f) {
  std::vector<std::int64_t> k(parts);
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t p, std::int64_t left) {
    if (p + 1 == parts) {
      k[p] = left;
      f(k);
      return;
    }
    for (std::int64_t a = 0; a <= left; ++a) {
      k[p] = a;
      rec(p + 1, left - a);
    }
  };
  rec(0, units);
}

SearchResult oracle_search(const AlignedPredictions& ap, std::int64_t units) {
  SearchResult best;
  best.best_objective = -1;
  best.grid_units = units;
  each_composition(units, ap.model_count(), [&](const std::vector<std::int64_t>& k) {
    std::vector<double> w;
    for (auto x : k) w.push_back(static_cast<double>(x) / static_cast<double>(units));
    const double acc = accuracy_of(weighted_soft_vote(ap, WeightVector(w)), ap.truth());
    ++best.evaluated_count;
    if (acc > best.best_objective) {
      best.best_objective = acc;
      best.best_grid = k;
      best.best_weights = WeightVector(w);
      best.tie_count = 1;
    } else if (acc == best.best_objective) {
      ++best.tie_count;
    }
  });
  return best;
}

}  // namespace

TEST_CASE("weight vectors") {
  CHECK_NOTHROW(WeightVector({0.25, 0.75}));
  CHECK_THROWS_AS(WeightVector({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(WeightVector({-0.5, 1.5}), ValidationError);
  CHECK_THROWS_AS(WeightVector(std::vector<double>{}), ValidationError);
  CHECK(WeightVector::uniform(4)[2] == 0.25);
  CHECK(WeightVector::basis(3, 1).values()[1] == 1.0);
}

TEST_CASE("weighted soft vote") {
  SUBCASE("worked example") {
    const auto ap = make_ap({{{0.6, 0.4}}, {{0.3, 0.7}}}, {1});
    const auto v = weighted_soft_vote(ap, WeightVector({0.5, 0.5}));
    CHECK(v.scores[0] == doctest::Approx(0.45));
    CHECK(v.scores[1] == doctest::Approx(0.55));
    CHECK(v.labels[0] == 1u);
  }
  SUBCASE("exact tie goes to the lowest class") {
    const auto ap = make_ap({{{0.5, 0.5}}}, {1});
    CHECK(weighted_soft_vote(ap, WeightVector({1.0})).labels[0] == 0u);
  }
  SUBCASE("weight count must match") {
    const auto ap = make_ap({{{0.5, 0.5}}}, {1});
    CHECK_THROWS_AS(weighted_soft_vote(ap, WeightVector({0.5, 0.5})), ValidationError);
  }

  std::mt19937_64 rng(11);
  SUBCASE("a basis vector reproduces that classifier") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t t = 1 + rng() % 5;
      const auto ap = random_aligned(rng, t, 20, 2 + rng() % 3);
      const std::size_t i = rng() % t;
      const auto v = weighted_soft_vote(ap, WeightVector::basis(t, i));
      for (std::size_t s = 0; s < ap.sample_count(); ++s) {
        CHECK(v.labels[s] == argmax(ap.row(i, s)));
      }
    }
  }
  SUBCASE("raw weights are scale invariant") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t t = 1 + rng() % 5;
      const auto ap = random_aligned(rng, t, 20, 2 + rng() % 3);
      std::vector<double> raw(t);
      for (auto& w : raw) w = 1.0 + static_cast<double>(rng() % 8);  // exactly representable
      std::vector<double> scaled = raw;
      for (auto& w : scaled) w *= 4.0;
      CHECK(labels_of(weighted_soft_vote_raw(ap, raw)) == labels_of(weighted_soft_vote_raw(ap, scaled)));
    }
  }
  SUBCASE("permuting classifiers with their weights changes nothing") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t t = 2 + rng() % 4;
      const auto ap = coarse_aligned(rng, t, 20, 2 + rng() % 3);
      std::vector<std::size_t> perm(t);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      // Dyadic weights keep every partial sum exact, so order cannot matter.
      std::vector<double> w(t, 0.0);
      for (int q = 0; q < 8; ++q) w[rng() % t] += 0.125;
      std::vector<double> pw;
      for (auto p : perm) pw.push_back(w[p]);
      const auto a = weighted_soft_vote(ap, WeightVector(w));
      const auto b = weighted_soft_vote(ap.select_models(perm), WeightVector(pw));
      CHECK(labels_of(a) == labels_of(b));
    }
  }
}

TEST_CASE("unanimity holds for every mode") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 1 + rng() % 5, l = 2 + rng() % 3, n = 10;
    std::vector<Rows> rows(t);
    std::vector<std::size_t> winner(n);
    for (auto& w : winner) w = rng() % l;
    for (auto& m : rows) {
      for (std::size_t s = 0; s < n; ++s) {
        auto r = random_distribution(rng, l);
        // Move the largest score onto the agreed class and make it strict.
        std::swap(r[winner[s]], *std::max_element(r.begin(), r.end()));
        r[winner[s]] += 1.0;
        for (auto& x : r) x /= 2.0;
        m.push_back(r);
      }
    }
    const auto ap = make_ap(rows, winner);
    std::vector<double> acc(t, 0.8);
    std::vector<double> priors(l, 1.0 / static_cast<double>(l));
    CHECK(labels_of(weighted_soft_vote(ap, WeightVector::uniform(t))) == winner);
    CHECK(labels_of(weighted_hard_vote(ap, WeightVector::uniform(t))) == winner);
    CHECK(labels_of(hard_vote_absolute(ap)) == winner);
    CHECK(labels_of(hard_vote_relative(ap)) == winner);
    CHECK(labels_of(bayes_vote(ap, priors, acc)) == winner);
  }
}

TEST_CASE("majority votes") {
  SUBCASE("absolute: two of three wins") {
    const auto ap = make_ap({{{0.9, 0.1}}, {{0.2, 0.8}}, {{0.3, 0.7}}}, {1});
    const auto v = hard_vote_absolute(ap);
    CHECK(v.labels[0] == 1u);
    CHECK(v.rejected() == 0);
  }
  SUBCASE("absolute: a two-two split is rejected") {
    const auto ap = make_ap({{{0.9, 0.1}}, {{0.8, 0.2}}, {{0.2, 0.8}}, {{0.3, 0.7}}}, {1});
    const auto v = hard_vote_absolute(ap);
    CHECK_FALSE(v.labels[0].has_value());
    CHECK(v.rejected() == 1);
  }
  SUBCASE("absolute: plurality without majority is rejected") {
    const auto ap = make_ap({{{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}}}, {0});
    CHECK_FALSE(hard_vote_absolute(ap).labels[0].has_value());
  }
  SUBCASE("relative: ties go to the lowest class") {
    const auto ap = make_ap({{{0.2, 0.8}}, {{0.9, 0.1}}}, {1});
    CHECK(hard_vote_relative(ap).labels[0] == 0u);
  }
  SUBCASE("relative and absolute against a tally oracle") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t t = 1 + rng() % 7, l = 2 + rng() % 4;
      const auto ap = random_aligned(rng, t, 5, l);
      const auto rel = hard_vote_relative(ap);
      const auto abs = hard_vote_absolute(ap);
      for (std::size_t s = 0; s < ap.sample_count(); ++s) {
        std::vector<int> votes(l, 0);
        for (std::size_t i = 0; i < t; ++i) {
          const auto row = ap.row(i, s);
          std::size_t best = 0;
          for (std::size_t j = 1; j < l; ++j)
            if (row[j] > row[best]) best = j;
          ++votes[best];
        }
        const int top = *std::max_element(votes.begin(), votes.end());
        std::size_t first = 0;
        while (votes[first] != top) ++first;
        CHECK(rel.labels[s] == first);
        if (2 * top > static_cast<int>(t)) {
          CHECK(abs.labels[s] == first);
        } else {
          CHECK_FALSE(abs.labels[s].has_value());
        }
        CHECK(rel.scores[s * l + first] == doctest::Approx(static_cast<double>(top) / t));
      }
    }
  }
  SUBCASE("relative agrees with uniform hard weighting") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t t = 1 + rng() % 6;
      const auto ap = random_aligned(rng, t, 10, 2 + rng() % 3);
      CHECK(labels_of(hard_vote_relative(ap)) == labels_of(weighted_hard_vote(ap, WeightVector::uniform(t))));
    }
  }
}

TEST_CASE("log-odds weights") {
  CHECK(logodds_weights(std::vector{0.9})[0] == 1.0);
  const auto w = logodds_weights(std::vector{0.9, 0.8});
  CHECK(w[0] == doctest::Approx(0.6131).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(0.3869).epsilon(1e-4));
  CHECK(w[0] == doctest::Approx(std::log(9.0) / (std::log(9.0) + std::log(4.0))));
  SUBCASE("below-chance classifiers get zero weight") {
    const auto z = logodds_weights(std::vector{0.9, 0.4});
    CHECK(z[0] == 1.0);
    CHECK(z[1] == 0.0);
  }
  CHECK_THROWS_AS(logodds_weights(std::vector{1.0}), ValidationError);
  CHECK_THROWS_AS(logodds_weights(std::vector{0.0, 0.9}), ValidationError);
  CHECK_THROWS_AS(logodds_weights(std::vector{0.5, 0.4}), ValidationError);
  CHECK_THROWS_AS(logodds_weights(std::vector<double>{}), ValidationError);
}

TEST_CASE("Bayes combination") {
  SUBCASE("one confident classifier outweighs two weak ones") {
    const auto s = bayes_combined_score(std::vector<std::size_t>{0, 1, 1}, std::vector{0.5, 0.5},
                                        std::vector{0.9, 0.6, 0.6});
    CHECK(s.scores[0] == doctest::Approx(std::log(0.5) + std::log(9.0)));
    CHECK(s.scores[1] == doctest::Approx(std::log(0.5) + 2 * std::log(1.5)));
    CHECK(s.label == 0);
  }
  SUBCASE("a strong prior dominates weak agreement") {
    const auto s = bayes_combined_score(std::vector<std::size_t>{1, 1}, std::vector{0.99, 0.01},
                                        std::vector{0.7, 0.7});
    CHECK(s.label == 0);
    const auto flat = bayes_combined_score(std::vector<std::size_t>{1, 1}, std::vector{0.5, 0.5},
                                           std::vector{0.7, 0.7});
    CHECK(flat.label == 1);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(bayes_combined_score(std::vector<std::size_t>{0}, std::vector{0.5, 0.6},
                                         std::vector{0.7}),
                    ValidationError);
    CHECK_THROWS_AS(bayes_combined_score(std::vector<std::size_t>{0}, std::vector{0.5, 0.5},
                                         std::vector{1.0}),
                    ValidationError);
    CHECK_THROWS_AS(bayes_combined_score(std::vector<std::size_t>{2}, std::vector{0.5, 0.5},
                                         std::vector{0.7}),
                    ValidationError);
  }
  SUBCASE("uniform priors agree with log-odds weighted hard voting") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> acc_dist(0.55, 0.99);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t t = 1 + rng() % 5, l = 2 + rng() % 3;
      const auto ap = random_aligned(rng, t, 20, l);
      std::vector<double> acc(t);
      for (auto& a : acc) a = acc_dist(rng);
      const std::vector<double> priors(l, 1.0 / static_cast<double>(l));
      const auto bayes = bayes_vote(ap, priors, acc);
      const auto hard = weighted_hard_vote(ap, logodds_weights(acc));
      for (std::size_t s = 0; s < ap.sample_count(); ++s) {
        std::vector<double> h(bayes.scores.begin() + static_cast<std::ptrdiff_t>(s * l),
                              bayes.scores.begin() + static_cast<std::ptrdiff_t>((s + 1) * l));
        std::sort(h.rbegin(), h.rend());
        if (h[0] - h[1] < 1e-9) continue;  // near ties may round either way
        CHECK(bayes.labels[s] == hard.labels[s]);
      }
    }
  }
}

TEST_CASE("metric weights and pruning") {
  const std::vector<std::string> ids = {"VGG16", "VGG19", "InceptionV3", "Xception", "ResNet50", "DenseNet201"};
  const std::vector<double> acc = {95.49, 95.03, 93.83, 96.59, 98.90, 98.25};

  SUBCASE("accuracy weights") {
    const std::vector<double> kept = {95.49, 96.59, 98.90, 98.25};
    const auto w = metric_weights(kept);
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(w[i] == doctest::Approx(kept[i] / 389.23));
    CHECK_THROWS_AS(metric_weights(std::vector{1.0, 0.0}), ValidationError);
  }
  SUBCASE("keep the four best transfer models") {
    const auto kept = prune(ids, acc, 4);
    std::vector<std::string> names;
    for (auto i : kept) names.push_back(ids[i]);
    CHECK(names == std::vector<std::string>{"VGG16", "Xception", "ResNet50", "DenseNet201"});
  }
  SUBCASE("ties resolve by model id") {
    const std::vector<std::string> tied = {"b", "a", "c"};
    CHECK(prune(tied, std::vector{0.9, 0.9, 0.9}, 1) == std::vector<std::size_t>{1});
    CHECK(prune(tied, std::vector{0.9, 0.9, 0.9}, 2) == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("keep bounds") {
    CHECK_THROWS_AS(prune(ids, acc, 0), ValidationError);
    CHECK_THROWS_AS(prune(ids, acc, 7), ValidationError);
    CHECK(prune(ids, acc, 6).size() == 6);
  }
}

TEST_CASE("ensemble configuration") {
  const auto ap = make_ap({{{0.9, 0.1}}, {{0.2, 0.8}}}, {0});
  EnsembleConfig c;
  CHECK_THROWS_AS(run_ensemble(ap, c), ValidationError);
  c.weights = WeightVector({0.7, 0.3});
  CHECK(run_ensemble(ap, c).labels[0] == 0u);
  c.mode = VoteMode::bayes_logodds;
  CHECK_THROWS_AS(run_ensemble(ap, c), ValidationError);
  c.priors = std::vector{0.5, 0.5};
  c.accuracies = std::vector{0.9, 0.6};
  CHECK(run_ensemble(ap, c).labels[0] == 0u);
  CHECK(parse_vote_mode("abs") == VoteMode::absolute_majority);
  CHECK(parse_vote_mode("relative_majority") == VoteMode::relative_majority);
  CHECK_THROWS_AS(parse_vote_mode("median"), ValidationError);
}

TEST_CASE("grid cardinality") {
  for (std::size_t t = 1; t <= 4; ++t) {
    for (std::int64_t units : {1, 2, 4, 10}) {
      std::uint64_t count = 0;
      each_composition(units, t, [&](const auto&) { ++count; });
      CHECK(grid_cardinality(units, t) == count);
    }
  }
  CHECK(grid_cardinality(100, 4) == 176851);
  CHECK(grid_cardinality(4, 3) == 15);
}

TEST_CASE("weight search") {
  std::mt19937_64 rng(16);
  SUBCASE("single classifier") {
    const auto ap = random_aligned(rng, 1, 30, 2);
    const auto r = search_weights(ap, {});
    CHECK(r.evaluated_count == 1);
    CHECK(r.best_grid == std::vector<std::int64_t>{100});
    CHECK(r.best_objective == accuracy_of(weighted_soft_vote(ap, WeightVector({1.0})), ap.truth()));
  }
  SUBCASE("a perfect classifier is found") {
    std::vector<Rows> rows(2);
    std::vector<std::size_t> truth;
    for (std::size_t s = 0; s < 10; ++s) {
      const std::size_t y = s % 2;
      truth.push_back(y);
      rows[0].push_back(y == 0 ? std::vector{0.6, 0.4} : std::vector{0.4, 0.6});
      rows[1].push_back(y == 0 ? std::vector{0.1, 0.9} : std::vector{0.9, 0.1});
    }
    const auto r = search_weights(make_ap(rows, truth), {.step = Rational(1, 10)});
    CHECK(r.best_objective == 1.0);
    CHECK(r.evaluated_count == 11);
    // Only weights above 0.8 on the first model are correct everywhere.
    CHECK(r.best_grid == std::vector<std::int64_t>{9, 1});
    CHECK(r.tie_count == 2);
  }
  SUBCASE("matches an exhaustive oracle") {
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t t = 1 + rng() % 3;
      const auto ap = coarse_aligned(rng, t, 15, 2 + rng() % 2);
      const auto r = search_weights(ap, {.step = Rational(1, 4)});
      const auto o = oracle_search(ap, 4);
      if (t == 3) CHECK(r.evaluated_count == 15);
      CHECK(r == o);
    }
  }
  SUBCASE("the best ensemble is never worse than the best single model") {
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t t = 1 + rng() % 4;
      const auto ap = random_aligned(rng, t, 25, 2);
      const auto r = search_weights(ap, {.step = Rational(1, 10)});
      for (std::size_t i = 0; i < t; ++i) {
        CHECK(r.best_objective >= accuracy_of(weighted_soft_vote(ap, WeightVector::basis(t, i)), ap.truth()));
      }
      CHECK(r.best_objective == accuracy_of(weighted_soft_vote(ap, r.best_weights), ap.truth()));
    }
  }
  SUBCASE("worker count does not change the result") {
    const auto ap = coarse_aligned(rng, 3, 60, 2);
    const SearchOptions one{.step = Rational(1, 100), .workers = 1};
    const auto base = search_weights(ap, one);
    CHECK(base.evaluated_count == 5151);
    CHECK(base.tie_count > 1);
    for (unsigned w : {2u, 3u, 8u}) {
      auto o = one;
      o.workers = w;
      CHECK(search_weights(ap, o) == base);
    }
  }
  SUBCASE("F1 objective") {
    const auto ap = coarse_aligned(rng, 2, 40, 2);
    const auto r = search_weights(ap, {.step = Rational(1, 10), .objective = SearchObjective::f1,
                                       .positive_class = 1});
    CHECK(r.evaluated_count == 11);
    CHECK(r.best_objective >= 0.0);
    CHECK(r.best_objective <= 1.0);
  }
  SUBCASE("invalid settings") {
    const auto ap = random_aligned(rng, 2, 5, 2);
    CHECK_THROWS_WITH_AS(search_weights(ap, {.step = Rational::parse("0.3")}),
                         doctest::Contains("does not divide 1"), ValidationError);
    const auto empty = random_aligned(rng, 2, 0, 2);
    CHECK_THROWS_AS(search_weights(empty, {}), ValidationError);
    CHECK_THROWS_AS(parse_search_objective("auc"), ValidationError);
  }
}
