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

#include "histoens/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <numeric>
#include <filesystem>
#include <sstream>

#include "histoens/augment.hpp"
#include "histoens/ensemble.hpp"
#include "histoens/error.hpp"
#include "histoens/io.hpp"
#include "histoens/manifest.hpp"
#include "histoens/metrics.hpp"
#include "histoens/predictions.hpp"
#include "histoens/report.hpp"

namespace histoens::cli {
namespace {

using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool present, std::string_view flag, std::string_view subcommand) {
  if (!present) {
    throw UsageError(std::string(subcommand) + " requires " + std::string(flag));
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_list(const std::string& text, std::string_view what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError("malformed " + std::string(what) + " list '" + text + "'");
    }
    values.push_back(v);
    start = comma + 1;
  }
  return values;
}

// Digest of every input file, in the order the command read them.
class Inputs {
 public:
  void add(std::string role, const std::string& path) {
    digests_.push_back({{"role", std::move(role)},
                        {"path", path},
                        {"sha256", io::sha256_hex(io::read_file(path))}});
  }
  const ordered_json& json() const { return digests_; }

 private:
  ordered_json digests_ = ordered_json::array();
};

std::size_t resolve_positive(const Manifest& m, const std::string& name) {
  return name.empty() ? 0 : m.class_index(name);
}

ordered_json report_skeleton(const RunConfig& cfg, const Manifest& m, Split split,
                             std::size_t positive) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["version"] = kReportVersion;
  j["command"] = cfg.subcommand;
  j["split"] = std::string(to_string(split));
  j["classes"] = m.classes;
  j["positive_class"] = m.classes[positive];
  j["beta"] = cfg.beta;
  j["models"] = ordered_json::array();
  j["per_model_metrics"] = ordered_json::object();
  j["ensemble_metrics"] = nullptr;
  j["ensemble"] = nullptr;
  j["weights"] = nullptr;
  j["search"] = nullptr;
  j["pruning"] = nullptr;
  j["seeds"] = ordered_json::object();
  j["inputs"] = ordered_json::array();
  return j;
}

std::vector<PredictionTable> read_tables(const std::vector<std::string>& paths, Inputs& inputs) {
  std::vector<PredictionTable> tables;
  for (const auto& p : paths) {
    inputs.add("predictions", p);
    std::istringstream in(io::read_file(p));
    try {
      tables.push_back(parse_predictions(in));
    } catch (const ValidationError& e) {
      throw ValidationError(p + ": " + e.what());
    }
  }
  return tables;
}

AlignedPredictions aligned_for(const std::vector<PredictionTable>& raw, const Manifest& m,
                               Split split) {
  std::vector<PredictionTable> restricted;
  restricted.reserve(raw.size());
  for (const auto& t : raw) restricted.push_back(restrict_to_split(t, m, split));
  return align(restricted, m, split);
}

ordered_json per_model_metrics(const AlignedPredictions& ap, std::size_t positive, double beta) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < ap.model_count(); ++i) {
    j[ap.model_ids()[i]] = metrics_to_json(evaluate_model(ap, i, positive, beta), ap.classes());
  }
  return j;
}

std::vector<double> model_accuracies(const AlignedPredictions& ap) {
  std::vector<double> acc;
  for (std::size_t i = 0; i < ap.model_count(); ++i) {
    std::vector<std::size_t> labels(ap.sample_count());
    for (std::size_t s = 0; s < ap.sample_count(); ++s) labels[s] = argmax(ap.row(i, s));
    acc.push_back(classification_metrics(confusion_matrix(labels, ap.truth(), ap.class_count()), 0)
                      .accuracy);
  }
  return acc;
}

// Applies --keep using validation accuracy; returns the kept indices.
std::vector<std::size_t> apply_pruning(const RunConfig& cfg, const AlignedPredictions& val,
                                       ordered_json& report) {
  std::vector<std::size_t> all(val.model_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!cfg.keep) return all;
  const auto acc = model_accuracies(val);
  auto kept = prune(val.model_ids(), acc, *cfg.keep);
  ordered_json values = ordered_json::object();
  for (std::size_t i = 0; i < acc.size(); ++i) values[val.model_ids()[i]] = acc[i];
  ordered_json kept_ids = ordered_json::array();
  for (auto i : kept) kept_ids.push_back(val.model_ids()[i]);
  report["pruning"] = {{"keep", *cfg.keep},
                       {"metric", "accuracy"},
                       {"split", cfg.val_split},
                       {"values", std::move(values)},
                       {"kept", std::move(kept_ids)}};
  return kept;
}

void write_vote_output(std::ostream& out, const AlignedPredictions& ap, const VoteOutput& v) {
  out << "sample_id,predicted";
  for (const auto& c : ap.classes()) out << ",score_" << c;
  out << '\n';
  const std::size_t l = ap.class_count();
  char buf[32];
  for (std::size_t s = 0; s < ap.sample_count(); ++s) {
    out << ap.sample_ids()[s] << ',' << (v.labels[s] ? ap.classes()[*v.labels[s]] : "REJECT");
    for (std::size_t j = 0; j < l; ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v.scores[s * l + j]);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

std::string counts_table(const Manifest& m) {
  std::ostringstream out;
  const auto counts = count_by_split(m);
  out << "split";
  for (const auto& c : m.classes) out << ',' << c;
  out << ",total\n";
  for (Split s : kAllSplits) {
    out << to_string(s);
    std::size_t total = 0;
    for (auto n : counts[index_of(s)]) {
      out << ',' << n;
      total += n;
    }
    out << ',' << total << '\n';
  }
  return out.str();
}

int cmd_split(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "split");
  require(!cfg.ratios.empty(), "--ratios", "split");
  require(cfg.seed.has_value(), "--seed", "split");
  require(!cfg.out.empty(), "--out", "split");
  const Manifest m = load_manifest(cfg.manifest);
  const Manifest split = stratified_split(m, SplitRatios::parse(cfg.ratios), *cfg.seed);
  io::write_file_atomic(cfg.out, manifest_to_string(split));
  out << counts_table(split);
  return kOk;
}

int cmd_plan_augment(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "plan-augment");
  require(cfg.seed.has_value(), "--seed", "plan-augment");
  require(!cfg.out.empty(), "--out", "plan-augment");
  const Manifest m = load_manifest(cfg.manifest);
  const AugmentationPlan plan = plan_balance(m, *cfg.seed);
  io::write_file_atomic(cfg.out, plan_to_string(plan));
  std::array<std::array<std::size_t, 2>, 3> counts{};
  for (const auto& e : plan.entries) ++counts[index_of(e.split)][e.transform == Transform::hflip ? 0 : 1];
  out << "split,hflip,vflip\n";
  for (Split s : kAllSplits) {
    out << to_string(s) << ',' << counts[index_of(s)][0] << ',' << counts[index_of(s)][1] << '\n';
  }
  return kOk;
}

int cmd_apply_augment(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "apply-augment");
  require(!cfg.plan.empty(), "--plan", "apply-augment");
  require(!cfg.src_dir.empty(), "--src-dir", "apply-augment");
  require(!cfg.dst_dir.empty(), "--dst-dir", "apply-augment");
  require(!cfg.out.empty(), "--out", "apply-augment");
  const Manifest m = load_manifest(cfg.manifest);
  const AugmentationPlan plan = load_plan(cfg.plan);
  apply_plan_records(plan, m);  // validates before any image is written
  const Manifest result = execute_plan(plan, m, cfg.src_dir, cfg.dst_dir, cfg.workers);
  io::write_file_atomic(cfg.out, manifest_to_string(result));
  out << counts_table(result);
  return kOk;
}

int cmd_validate_preds(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "validate-preds");
  require(!cfg.preds.empty(), "--preds", "validate-preds");
  const Manifest m = load_manifest(cfg.manifest);
  const std::optional<Split> split =
      cfg.split ? std::optional(parse_split(*cfg.split)) : std::nullopt;
  for (const auto& p : cfg.preds) {
    const PredictionTable t = load_predictions(p, m, split);
    out << "ok " << p << " model_id=" << t.model_id << " rows=" << t.rows.size() << '\n';
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "evaluate");
  require(cfg.preds.size() == 1, "exactly one --preds", "evaluate");
  require(!cfg.out.empty(), "--out", "evaluate");
  Inputs inputs;
  inputs.add("manifest", cfg.manifest);
  const Manifest m = load_manifest(cfg.manifest);
  const std::size_t positive = resolve_positive(m, cfg.positive_class);
  const Split split = parse_split(cfg.split.value_or("test"));
  const auto raw = read_tables(cfg.preds, inputs);
  const AlignedPredictions ap = aligned_for(raw, m, split);

  ordered_json report = report_skeleton(cfg, m, split, positive);
  report["models"] = ap.model_ids();
  report["per_model_metrics"] = per_model_metrics(ap, positive, cfg.beta);
  report["inputs"] = inputs.json();
  io::write_file_atomic(cfg.out, dump(report));
  const auto& metrics = report["per_model_metrics"][ap.model_ids()[0]];
  out << ap.model_ids()[0] << " accuracy=" << metrics["display"]["accuracy"].get<std::string>()
      << " f1=" << metrics["display"]["f1"].get<std::string>()
      << " mAP=" << metrics["display"]["mAP"].get<std::string>() << '\n';
  return kOk;
}

int cmd_vote(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "vote");
  require(!cfg.preds.empty(), "--preds", "vote");
  require(!cfg.out.empty(), "--out", "vote");
  Inputs inputs;
  inputs.add("manifest", cfg.manifest);
  const Manifest m = load_manifest(cfg.manifest);
  const std::size_t positive = resolve_positive(m, cfg.positive_class);
  const Split split = parse_split(cfg.split.value_or(cfg.test_split));
  const VoteMode mode = parse_vote_mode(cfg.mode);
  const bool weighted = mode == VoteMode::soft_weighted || mode == VoteMode::hard_weighted;
  const auto raw = read_tables(cfg.preds, inputs);
  const AlignedPredictions test = aligned_for(raw, m, split);

  const bool needs_val = cfg.keep.has_value() ||
                         (weighted && cfg.weights.empty() && cfg.weight_source != "uniform") ||
                         (mode == VoteMode::bayes_logodds && (cfg.accuracies.empty() || cfg.priors.empty()));
  std::optional<AlignedPredictions> val;
  if (needs_val) val = aligned_for(raw, m, parse_split(cfg.val_split));

  ordered_json report = report_skeleton(cfg, m, split, positive);
  const auto kept = val ? apply_pruning(cfg, *val, report)
                        : [&] {
                            std::vector<std::size_t> all(test.model_count());
                            std::iota(all.begin(), all.end(), std::size_t{0});
                            return all;
                          }();
  const AlignedPredictions test_sel = test.select_models(kept);
  std::optional<AlignedPredictions> val_sel;
  if (val) val_sel = val->select_models(kept);

  EnsembleConfig config;
  config.mode = mode;
  ordered_json ensemble = {{"label", "Ensemble"}, {"mode", std::string(to_string(mode))}};
  if (weighted) {
    if (!cfg.weights.empty()) {
      config.weights = WeightVector(parse_list(cfg.weights, "weight"));
      ensemble["weight_source"] = "explicit";
    } else if (cfg.weight_source == "accuracy") {
      config.weights = metric_weights(model_accuracies(*val_sel));
      ensemble["weight_source"] = "accuracy";
    } else if (cfg.weight_source == "logodds") {
      config.weights = logodds_weights(model_accuracies(*val_sel));
      ensemble["weight_source"] = "logodds";
    } else if (cfg.weight_source == "uniform") {
      config.weights = WeightVector::uniform(test_sel.model_count());
      ensemble["weight_source"] = "uniform";
    } else {
      throw UsageError("unknown --weight-source '" + cfg.weight_source + "'");
    }
  } else if (mode == VoteMode::bayes_logodds) {
    config.accuracies = cfg.accuracies.empty() ? model_accuracies(*val_sel)
                                               : parse_list(cfg.accuracies, "accuracy");
    if (!cfg.priors.empty()) {
      config.priors = parse_list(cfg.priors, "prior");
    } else {
      std::vector<double> priors(m.classes.size(), 0.0);
      for (auto t : val_sel->truth()) priors[t] += 1.0;
      for (auto& p : priors) p /= static_cast<double>(val_sel->sample_count());
      config.priors = priors;
    }
    ensemble["priors"] = *config.priors;
    ensemble["accuracies"] = *config.accuracies;
  }

  const VoteOutput vote = run_ensemble(test_sel, config);
  const MetricsReport metrics = evaluate_scores(vote.labels, vote.scores, test_sel, positive, cfg.beta);

  report["models"] = test_sel.model_ids();
  report["per_model_metrics"] = per_model_metrics(test, positive, cfg.beta);
  report["ensemble_metrics"] = metrics_to_json(metrics, m.classes);
  report["ensemble"] = std::move(ensemble);
  if (config.weights) report["weights"] = weights_to_json(test_sel.model_ids(), *config.weights, std::nullopt);
  report["inputs"] = inputs.json();

  std::string vote_csv;
  if (!cfg.pred_out.empty()) {
    std::ostringstream csv_out;
    write_vote_output(csv_out, test_sel, vote);
    vote_csv = csv_out.str();
  }
  io::write_file_atomic(cfg.out, dump(report));
  if (!cfg.pred_out.empty()) io::write_file_atomic(cfg.pred_out, vote_csv);
  out << "ensemble accuracy=" << display4(metrics.accuracy) << " rejected=" << metrics.rejected
      << " mAP=" << display4(metrics.mean_ap) << '\n';
  return kOk;
}

int cmd_search(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.manifest.empty(), "--manifest", "search");
  require(!cfg.preds.empty(), "--preds", "search");
  require(cfg.seed.has_value(), "--seed", "search");
  require(!cfg.out.empty(), "--out", "search");
  Inputs inputs;
  inputs.add("manifest", cfg.manifest);
  const Manifest m = load_manifest(cfg.manifest);
  const std::size_t positive = resolve_positive(m, cfg.positive_class);
  const Split val_split = parse_split(cfg.val_split);
  const Split test_split = parse_split(cfg.test_split);
  const auto raw = read_tables(cfg.preds, inputs);
  const AlignedPredictions val = aligned_for(raw, m, val_split);
  const AlignedPredictions test = aligned_for(raw, m, test_split);

  ordered_json report = report_skeleton(cfg, m, test_split, positive);
  const auto kept = apply_pruning(cfg, val, report);
  const AlignedPredictions val_sel = val.select_models(kept);
  const AlignedPredictions test_sel = test.select_models(kept);

  SearchOptions options;
  options.step = Rational::parse(cfg.step);
  options.objective = parse_search_objective(cfg.objective);
  options.positive_class = positive;
  options.workers = cfg.workers;
  const SearchResult result = search_weights(val_sel, options);

  const VoteOutput vote = weighted_soft_vote(test_sel, result.best_weights);
  const MetricsReport metrics = evaluate_scores(vote.labels, vote.scores, test_sel, positive, cfg.beta);

  ordered_json search = search_to_json(result, options);
  search["split"] = cfg.val_split;
  report["models"] = test_sel.model_ids();
  report["per_model_metrics"] = per_model_metrics(test, positive, cfg.beta);
  report["ensemble_metrics"] = metrics_to_json(metrics, m.classes);
  report["ensemble"] = {{"label", "Ensemble"},
                        {"mode", std::string(to_string(VoteMode::soft_weighted))},
                        {"weight_source", "search"}};
  report["weights"] = weights_to_json(test_sel.model_ids(), result.best_weights, result);
  report["search"] = std::move(search);
  report["seeds"] = {{"search", *cfg.seed}};
  report["inputs"] = inputs.json();
  io::write_file_atomic(cfg.out, dump(report));

  out << "evaluated=" << result.evaluated_count << " ties=" << result.tie_count
      << " val_" << to_string(options.objective) << '=' << display4(result.best_objective)
      << " test_accuracy=" << display4(metrics.accuracy) << '\n';
  return kOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.inputs.empty(), "--in", "report");
  std::vector<ordered_json> docs;
  ordered_json sources = ordered_json::array();
  for (const auto& p : cfg.inputs) {
    const std::string bytes = io::read_file(p);
    try {
      docs.push_back(ordered_json::parse(bytes));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(p + ": " + e.what());
    }
    sources.push_back({{"path", p}, {"sha256", io::sha256_hex(bytes)}});
  }
  const auto rows = merge_reports(docs);
  const std::string table = render_comparison(rows);
  ordered_json merged = comparison_to_json(rows);
  merged["split"] = docs.front().value("split", "");
  merged["positive_class"] = docs.front().value("positive_class", "");
  merged["inputs"] = std::move(sources);
  if (!cfg.out.empty()) io::write_file_atomic(cfg.out, dump(merged));
  if (!cfg.text_out.empty()) io::write_file_atomic(cfg.text_out, table);
  out << table;
  return kOk;
}

void error_line(std::ostream& err, std::string_view kind, int code, std::string_view message) {
  err << ordered_json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"histoens: weighted-vote ensembling and evaluation over prediction tables"};
  app.name(args.empty() ? "histoens" : args.front());
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--manifest", cfg.manifest, "Manifest CSV");
    sub->add_option("--out", cfg.out, "Output path");
  };
  auto add_seed = [&](CLI::App* sub) { return sub->add_option("--seed", seed, "Random seed"); };
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--positive-class", cfg.positive_class, "Positive class name (default: class 0)");
    sub->add_option("--beta", cfg.beta, "F-beta parameter")->check(CLI::PositiveNumber);
  };

  std::vector<CLI::Option*> seed_opts;

  auto* split = app.add_subcommand("split", "Stratified train/val/test split");
  add_common(split);
  split->add_option("--ratios", cfg.ratios, "Ratios a:b:c");
  seed_opts.push_back(add_seed(split));

  auto* plan = app.add_subcommand("plan-augment", "Plan flip-based class balancing");
  add_common(plan);
  seed_opts.push_back(add_seed(plan));

  auto* apply = app.add_subcommand("apply-augment", "Execute a flip plan on image files");
  add_common(apply);
  apply->add_option("--plan", cfg.plan, "Plan CSV");
  apply->add_option("--src-dir", cfg.src_dir, "Directory the manifest paths are relative to");
  apply->add_option("--dst-dir", cfg.dst_dir, "Directory for flipped images");
  apply->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate-preds", "Validate prediction files");
  add_common(validate);
  validate->add_option("--preds", cfg.preds, "Prediction CSV files")->expected(1, -1);
  validate->add_option("--split", cfg.split, "Restrict to one split");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics of one prediction table");
  add_common(evaluate);
  add_eval(evaluate);
  evaluate->add_option("--preds", cfg.preds, "Prediction CSV file")->expected(1, -1);
  evaluate->add_option("--split", cfg.split, "Split to evaluate (default test)");

  auto* vote = app.add_subcommand("vote", "Combine prediction tables");
  add_common(vote);
  add_eval(vote);
  vote->add_option("--preds", cfg.preds, "Prediction CSV files")->expected(1, -1);
  vote->add_option("--split", cfg.split, "Split to report on (default test)");
  vote->add_option("--mode", cfg.mode, "soft|hard|abs|rel|bayes");
  vote->add_option("--weights", cfg.weights, "Comma-separated weights summing to 1");
  vote->add_option("--weight-source", cfg.weight_source, "accuracy|logodds|uniform");
  vote->add_option("--accuracies", cfg.accuracies, "Comma-separated accuracies for bayes mode");
  vote->add_option("--priors", cfg.priors, "Comma-separated class priors for bayes mode");
  vote->add_option("--val-split", cfg.val_split, "Split used for weights and pruning");
  vote->add_option("--keep", cfg.keep, "Keep the N most accurate models")->check(CLI::PositiveNumber);
  vote->add_option("--pred-out", cfg.pred_out, "Per-sample vote output CSV");

  auto* search = app.add_subcommand("search", "Grid search of soft-vote weights");
  add_common(search);
  add_eval(search);
  search->add_option("--preds", cfg.preds, "Prediction CSV files")->expected(1, -1);
  search->add_option("--step", cfg.step, "Grid step, must divide 1");
  search->add_option("--objective", cfg.objective, "accuracy|f1");
  search->add_option("--keep", cfg.keep, "Keep the N most accurate models")->check(CLI::PositiveNumber);
  search->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  search->add_option("--val-split", cfg.val_split, "Split searched on");
  search->add_option("--test-split", cfg.test_split, "Split reported on");
  seed_opts.push_back(add_seed(search));

  auto* report = app.add_subcommand("report", "Merge reports into one comparison table");
  report->add_option("--in", cfg.inputs, "Report documents")->expected(1, -1);
  report->add_option("--out", cfg.out, "Merged comparison document");
  report->add_option("--text", cfg.text_out, "Plain-text table");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    error_line(err, "usage", kUsage, e.what());
    return kUsage;
  }
  for (auto* o : seed_opts) {
    if (o->count() > 0) cfg.seed = seed;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (cfg.subcommand == "split") return cmd_split(cfg, out);
    if (cfg.subcommand == "plan-augment") return cmd_plan_augment(cfg, out);
    if (cfg.subcommand == "apply-augment") return cmd_apply_augment(cfg, out);
    if (cfg.subcommand == "validate-preds") return cmd_validate_preds(cfg, out);
    if (cfg.subcommand == "evaluate") return cmd_evaluate(cfg, out);
    if (cfg.subcommand == "vote") return cmd_vote(cfg, out);
    if (cfg.subcommand == "search") return cmd_search(cfg, out);
    return cmd_report(cfg, out);
  } catch (const UsageError& e) {
    error_line(err, "usage", kUsage, e.what());
    return kUsage;
  } catch (const ValidationError& e) {
    error_line(err, "validation", kValidation, e.what());
    return kValidation;
  } catch (const IoError& e) {
    error_line(err, "io", kIo, e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    error_line(err, "io", kIo, e.what());
    return kIo;
  }
}

}  // namespace histoens::cli
