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

#include "histoens/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "histoens/error.hpp"

namespace histoens {
namespace {

using nlohmann::ordered_json;

ordered_json opt(std::optional<double> v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> read_opt(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ValidationError(std::string("report field '") + key + "' is not a number");
  return it->get<double>();
}

ComparisonRow row_from_metrics(std::string name, const ordered_json& m) {
  if (!m.is_object()) throw ValidationError("metrics entry for '" + name + "' is not an object");
  return {std::move(name), read_opt(m, "accuracy"), read_opt(m, "precision"),
          read_opt(m, "recall"), read_opt(m, "f1"), read_opt(m, "mAP")};
}

bool same_row(const ComparisonRow& a, const ComparisonRow& b) {
  return a.accuracy == b.accuracy && a.precision == b.precision && a.recall == b.recall &&
         a.f1 == b.f1 && a.mean_ap == b.mean_ap;
}

std::string percent(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

}  // namespace

MetricsReport evaluate_scores(std::span<const std::optional<std::size_t>> labels,
                              std::span<const double> scores, const AlignedPredictions& ap,
                              std::size_t positive_class, double beta) {
  const std::size_t l = ap.class_count();
  if (labels.size() != ap.sample_count() || scores.size() != ap.sample_count() * l) {
    throw ValidationError("vote output does not match the aligned sample set");
  }
  std::vector<std::size_t> predicted;
  std::vector<std::size_t> truth;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (!labels[s]) continue;
    predicted.push_back(*labels[s]);
    truth.push_back(ap.truth()[s]);
  }
  const std::size_t rejected = labels.size() - predicted.size();
  MetricsReport report = classification_metrics(confusion_matrix(predicted, truth, l),
                                                positive_class, beta, rejected);

  std::vector<std::size_t> present(l, 0);
  for (auto t : ap.truth()) ++present[t];
  std::vector<double> column(ap.sample_count());
  double ap_sum = 0.0;
  bool all_defined = true;
  for (std::size_t c = 0; c < l; ++c) {
    if (present[c] == 0) {
      all_defined = false;
      continue;
    }
    for (std::size_t s = 0; s < ap.sample_count(); ++s) column[s] = scores[s * l + c];
    const double value = average_precision(column, ap.truth(), c, ap.sample_ids());
    report.per_class[c].average_precision = value;
    ap_sum += value;
  }
  if (all_defined) report.mean_ap = ap_sum / static_cast<double>(l);
  return report;
}

MetricsReport evaluate_model(const AlignedPredictions& ap, std::size_t model,
                             std::size_t positive_class, double beta) {
  std::vector<std::optional<std::size_t>> labels(ap.sample_count());
  for (std::size_t s = 0; s < ap.sample_count(); ++s) labels[s] = argmax(ap.row(model, s));
  return evaluate_scores(labels, ap.scores(model), ap, positive_class, beta);
}

std::string display4(std::optional<double> value) {
  if (!value) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *value);
  return buf;
}

ordered_json metrics_to_json(const MetricsReport& report, const std::vector<std::string>& classes) {
  const ClassMetrics& pos = report.positive();
  ordered_json j;
  j["samples"] = report.samples;
  j["rejected"] = report.rejected;
  j["accuracy"] = report.accuracy;
  j["precision"] = opt(pos.precision);
  j["recall"] = opt(pos.recall);
  j["f1"] = opt(pos.f1);
  j["fbeta"] = opt(pos.fbeta);
  j["mAP"] = opt(report.mean_ap);

  ordered_json per_class = ordered_json::object();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    per_class[classes[c]] = {{"precision", opt(m.precision)},
                             {"recall", opt(m.recall)},
                             {"f1", opt(m.f1)},
                             {"fbeta", opt(m.fbeta)},
                             {"ap", opt(m.average_precision)}};
  }
  j["per_class"] = std::move(per_class);

  ordered_json cm = ordered_json::array();
  for (std::size_t o = 0; o < report.confusion.size(); ++o) {
    ordered_json row = ordered_json::array();
    for (std::size_t t = 0; t < report.confusion.size(); ++t) row.push_back(report.confusion.at(o, t));
    cm.push_back(std::move(row));
  }
  j["confusion_matrix"] = {{"rows", "output"}, {"columns", "target"}, {"counts", std::move(cm)}};

  j["display"] = {{"accuracy", display4(report.accuracy)},
                  {"precision", display4(pos.precision)},
                  {"recall", display4(pos.recall)},
                  {"f1", display4(pos.f1)},
                  {"fbeta", display4(pos.fbeta)},
                  {"mAP", display4(report.mean_ap)}};
  return j;
}

ordered_json weights_to_json(const std::vector<std::string>& model_ids, const WeightVector& w,
                             const std::optional<SearchResult>& grid) {
  ordered_json j;
  j["models"] = model_ids;
  j["values"] = w.values();
  if (grid) {
    ordered_json fractions = ordered_json::array();
    for (auto k : grid->best_grid) {
      fractions.push_back(std::to_string(k) + "/" + std::to_string(grid->grid_units));
    }
    j["grid_fractions"] = std::move(fractions);
  } else {
    j["grid_fractions"] = nullptr;
  }
  return j;
}

ordered_json search_to_json(const SearchResult& result, const SearchOptions& options) {
  return {{"step", options.step.to_string()},
          {"objective", std::string(to_string(options.objective))},
          {"evaluated_count", result.evaluated_count},
          {"tie_count", result.tie_count},
          {"best_objective", result.best_objective},
          {"best_grid", result.best_grid},
          {"grid_units", result.grid_units}};
}

std::vector<ComparisonRow> merge_reports(const std::vector<ordered_json>& reports) {
  if (reports.empty()) throw ValidationError("no reports to merge");
  std::vector<ComparisonRow> models;
  std::vector<ComparisonRow> ensembles;
  const ordered_json* first = nullptr;
  for (const auto& r : reports) {
    if (!r.is_object() || r.value("schema", "") != kReportSchema) {
      throw ValidationError("not a histoens report document");
    }
    if (r.value("version", 0) != kReportVersion) {
      throw ValidationError("unsupported report version " + r.value("version", ordered_json()).dump());
    }
    if (!first) {
      first = &r;
    } else if (r.value("split", "") != first->value("split", "") ||
               r.value("positive_class", "") != first->value("positive_class", "")) {
      throw ValidationError("reports disagree on split or positive class; they are not comparable");
    }

    if (auto it = r.find("per_model_metrics"); it != r.end() && it->is_object()) {
      for (const auto& [name, m] : it->items()) {
        ComparisonRow row = row_from_metrics(name, m);
        auto existing = std::find_if(models.begin(), models.end(),
                                     [&](const auto& x) { return x.model == name; });
        if (existing == models.end()) {
          models.push_back(std::move(row));
        } else if (!same_row(*existing, row)) {
          throw ValidationError("reports carry conflicting metrics for model '" + name + "'");
        }
      }
    }
    if (auto it = r.find("ensemble_metrics"); it != r.end() && !it->is_null()) {
      std::string label = "Ensemble";
      if (auto e = r.find("ensemble"); e != r.end() && e->is_object()) label = e->value("label", label);
      std::string unique = label;
      for (int n = 2; std::any_of(ensembles.begin(), ensembles.end(),
                                  [&](const auto& x) { return x.model == unique; });
           ++n) {
        unique = label + " #" + std::to_string(n);
      }
      ensembles.push_back(row_from_metrics(unique, *it));
    }
  }
  models.insert(models.end(), ensembles.begin(), ensembles.end());
  return models;
}

ordered_json comparison_to_json(const std::vector<ComparisonRow>& rows) {
  ordered_json out;
  out["schema"] = kComparisonSchema;
  out["version"] = kReportVersion;
  out["columns"] = {"accuracy", "precision", "recall", "f1", "mAP"};
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"model", r.model},
                   {"accuracy", opt(r.accuracy)},
                   {"precision", opt(r.precision)},
                   {"recall", opt(r.recall)},
                   {"f1", opt(r.f1)},
                   {"mAP", opt(r.mean_ap)}});
  }
  out["rows"] = std::move(arr);
  return out;
}

std::string render_comparison(const std::vector<ComparisonRow>& rows) {
  std::size_t name_width = 5;
  for (const auto& r : rows) name_width = std::max(name_width, r.model.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %9s  %9s  %9s  %9s  %9s\n", static_cast<int>(name_width),
                "Model", "Accuracy", "Precision", "Recall", "F1-score", "mAP");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s  %9s  %9s  %9s  %9s  %9s\n",
                  static_cast<int>(name_width), r.model.c_str(), percent(r.accuracy).c_str(),
                  percent(r.precision).c_str(), percent(r.recall).c_str(), percent(r.f1).c_str(),
                  percent(r.mean_ap).c_str());
    out << buf;
  }
  out << "(values in %)\n";
  return out.str();
}

}  // namespace histoens
