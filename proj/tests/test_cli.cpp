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

#include <nlohmann/json.hpp>

#include <filesystem>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "histoens/cli.hpp"
#include "histoens/image.hpp"
#include "histoens/io.hpp"
#include "histoens/manifest.hpp"
#include "histoens/predictions.hpp"

using namespace histoens;
using namespace histoens::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "histoens");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json load_json(const fs::path& p) { return json::parse(io::read_file(p)); }

// A split manifest with three models of graded quality and one perfect model.
struct Workspace {
  fs::path dir;
  fs::path manifest;
  std::vector<fs::path> preds;
  fs::path perfect;
};

Workspace make_workspace(const std::string& name) {
  Workspace w;
  w.dir = scratch_dir(name);
  const Manifest m = stratified_split(simple_manifest({30, 50}), SplitRatios::parse("6:2:2"), 3);
  w.manifest = w.dir / "manifest.csv";
  io::write_file_atomic(w.manifest, manifest_to_string(m));

  std::mt19937_64 rng(8);
  const std::array<double, 3> skill = {0.9, 0.75, 0.6};
  for (std::size_t i = 0; i < skill.size(); ++i) {
    PredictionTable t{"model" + std::to_string(i), m.classes, {}};
    for (const auto& r : m.records) {
      const bool right = std::uniform_real_distribution<double>(0, 1)(rng) < skill[i];
      const double p = 0.55 + 0.05 * static_cast<double>(rng() % 8);
      const std::size_t label = right ? r.class_label : 1 - r.class_label;
      std::vector<double> row(2);
      row[label] = p;
      row[1 - label] = 1 - p;
      t.rows[r.sample_id] = row;
    }
    w.preds.push_back(w.dir / ("preds_" + t.model_id + ".csv"));
    io::write_file_atomic(w.preds.back(), predictions_to_string(t));
  }
  PredictionTable oracle{"oracle", m.classes, {}};
  for (const auto& r : m.records) {
    oracle.rows[r.sample_id] = r.class_label == 0 ? std::vector{1.0, 0.0} : std::vector{0.0, 1.0};
  }
  w.perfect = w.dir / "preds_oracle.csv";
  io::write_file_atomic(w.perfect, predictions_to_string(oracle));
  return w;
}

std::vector<std::string> pred_args(const Workspace& w) {
  std::vector<std::string> a = {"--preds"};
  for (const auto& p : w.preds) a.push_back(p.string());
  return a;
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli({}).code == cli::kUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
  CHECK(run_cli({"split", "--manifest", "x.csv"}).code == cli::kUsage);
  CHECK(run_cli({"split", "--bogus"}).code == cli::kUsage);
  const auto r = run_cli({"search", "--manifest", "m.csv", "--preds", "p.csv", "--out", "o.json"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("--seed") != std::string::npos);
}

TEST_CASE("split reproduces the published partition") {
  const auto dir = scratch_dir("cli_split");
  io::write_file_atomic(dir / "all.csv", manifest_to_string(breakhis_shaped_manifest()));
  const auto r = run_cli({"split", "--manifest", (dir / "all.csv").string(), "--ratios", "7:1:2",
                          "--seed", "42", "--out", (dir / "split.csv").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out == "split,benign,malignant,total\ntrain,1736,3800,5536\nval,248,543,791\ntest,496,1086,1582\n");
  const auto counts = count_by_split(load_manifest(dir / "split.csv"));
  CHECK(counts[index_of(Split::test)] == std::vector<std::size_t>{496, 1086});

  SUBCASE("repeat runs are byte-identical") {
    REQUIRE(run_cli({"split", "--manifest", (dir / "all.csv").string(), "--ratios", "7:1:2", "--seed",
                     "42", "--out", (dir / "again.csv").string()})
                .code == cli::kOk);
    CHECK(io::read_file(dir / "split.csv") == io::read_file(dir / "again.csv"));
  }
  SUBCASE("plan-augment balances every split") {
    const auto p = run_cli({"plan-augment", "--manifest", (dir / "split.csv").string(), "--seed", "7",
                            "--out", (dir / "plan.csv").string()});
    REQUIRE(p.code == cli::kOk);
    CHECK(p.out == "split,hflip,vflip\ntrain,1736,328\nval,248,47\ntest,496,94\n");
  }
  SUBCASE("bad ratios and missing files") {
    const auto bad = run_cli({"split", "--manifest", (dir / "all.csv").string(), "--ratios", "7:1",
                              "--seed", "42", "--out", (dir / "x.csv").string()});
    CHECK(bad.code == cli::kValidation);
    CHECK(json::parse(bad.err)["exit_code"] == 2);
    CHECK_FALSE(fs::exists(dir / "x.csv"));
    const auto missing = run_cli({"split", "--manifest", (dir / "nope.csv").string(), "--ratios",
                                  "7:1:2", "--seed", "42", "--out", (dir / "x.csv").string()});
    CHECK(missing.code == cli::kIo);
    CHECK(json::parse(missing.err)["error"] == "io");
  }
}

TEST_CASE("apply-augment writes flipped images") {
  const auto dir = scratch_dir("cli_apply");
  Manifest m = stratified_split(simple_manifest({4, 6}), SplitRatios::parse("1:0:0"), 1);
  for (auto& r : m.records) {
    Image img{2, 1, 1, 8, {static_cast<std::uint8_t>(r.class_label), 200}};
    write_png(dir / "src" / r.path, img);
  }
  io::write_file_atomic(dir / "m.csv", manifest_to_string(m));
  REQUIRE(run_cli({"plan-augment", "--manifest", (dir / "m.csv").string(), "--seed", "1", "--out",
                   (dir / "plan.csv").string()})
              .code == cli::kOk);
  const std::vector<std::string> base = {"apply-augment", "--manifest", (dir / "m.csv").string(),
                                         "--plan", (dir / "plan.csv").string(), "--dst-dir",
                                         (dir / "dst").string(), "--out", (dir / "aug.csv").string()};
  const auto r = run_cli(cat(base, {"--src-dir", (dir / "src").string(), "--workers", "2"}));
  REQUIRE(r.code == cli::kOk);
  const Manifest aug = load_manifest(dir / "aug.csv");
  CHECK(count_by_class(aug) == std::vector<std::size_t>{6, 6});
  for (const auto& rec : aug.records) {
    if (rec.provenance == Provenance::original) continue;
    const Image img = read_png(dir / "dst" / rec.path);
    CHECK(img.pixels == std::vector<std::uint8_t>{200, 0});
  }
  fs::remove_all(dir / "dst");
  fs::remove(dir / "aug.csv");
  const auto missing = run_cli(cat(base, {"--src-dir", (dir / "elsewhere").string()}));
  CHECK(missing.code == cli::kIo);
  CHECK_FALSE(fs::exists(dir / "aug.csv"));
}

TEST_CASE("validate-preds accepts the trainer's prediction format") {
  const auto w = make_workspace("cli_validate");
  // As a trainer would emit it: float32-rounded scores, rows in arbitrary order.
  const std::string text =
      "# model_id=resnet50\n"
      "sample_id,score_benign,score_malignant\n";
  std::string body;
  for (const auto& r : load_manifest(w.manifest).records) {
    body += r.sample_id + (r.class_label ? ",0.0999999,0.9000001\n" : ",0.8999999,0.1000001\n");
  }
  io::write_file_atomic(w.dir / "trainer.csv", text + body);
  const auto ok = run_cli({"validate-preds", "--manifest", w.manifest.string(), "--preds",
                           (w.dir / "trainer.csv").string(), w.preds[0].string(), "--split", "test"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.find("model_id=resnet50 rows=16") != std::string::npos);
  CHECK(ok.out.find("model_id=model0") != std::string::npos);

  io::write_file_atomic(w.dir / "bad.csv", text + "s000000,0.5,0.4\n");
  const auto bad = run_cli({"validate-preds", "--manifest", w.manifest.string(), "--preds",
                            (w.dir / "bad.csv").string()});
  CHECK(bad.code == cli::kValidation);
  const auto e = json::parse(bad.err);
  CHECK(e["error"] == "validation");
  CHECK(e["message"].get<std::string>().find("bad.csv") != std::string::npos);
  CHECK(run_cli({"validate-preds", "--manifest", w.manifest.string(), "--preds",
                 (w.dir / "absent.csv").string()})
            .code == cli::kIo);
}

TEST_CASE("evaluate") {
  const auto w = make_workspace("cli_evaluate");
  const auto out = w.dir / "eval.json";
  const auto r = run_cli({"evaluate", "--manifest", w.manifest.string(), "--preds", w.perfect.string(),
                          "--positive-class", "malignant", "--out", out.string()});
  REQUIRE(r.code == cli::kOk);
  const auto j = load_json(out);
  CHECK(j["schema"] == "histoens.report");
  CHECK(j["split"] == "test");
  const auto& m = j["per_model_metrics"]["oracle"];
  CHECK(m["accuracy"] == 1.0);
  CHECK(m["precision"] == 1.0);
  CHECK(m["recall"] == 1.0);
  CHECK(m["f1"] == 1.0);
  CHECK(m["mAP"] == 1.0);
  CHECK(m["confusion_matrix"]["counts"] == json::array({json::array({6, 0}), json::array({0, 10})}));
  CHECK(j["inputs"].size() == 2);
  CHECK(j["inputs"][1]["sha256"] == io::sha256_hex(io::read_file(w.perfect)));
  CHECK(run_cli({"evaluate", "--manifest", w.manifest.string(), "--preds", w.perfect.string(),
                 "--positive-class", "unknown", "--out", out.string()})
            .code == cli::kValidation);
  CHECK(run_cli(cat({"evaluate", "--manifest", w.manifest.string(), "--out", out.string()}, pred_args(w)))
            .code == cli::kUsage);
}

TEST_CASE("vote") {
  const auto w = make_workspace("cli_vote");
  const std::vector<std::string> base = cat({"vote", "--manifest", w.manifest.string()}, pred_args(w));
  SUBCASE("soft vote with accuracy weights") {
    const auto r = run_cli(cat(base, {"--out", (w.dir / "v.json").string()}));
    REQUIRE(r.code == cli::kOk);
    const auto j = load_json(w.dir / "v.json");
    CHECK(j["ensemble"]["weight_source"] == "accuracy");
    CHECK(j["weights"]["values"].size() == 3);
    CHECK(j["per_model_metrics"].size() == 3);
    CHECK(j["ensemble_metrics"]["samples"] == 16);
  }
  SUBCASE("absolute majority writes REJECT rows") {
    const auto r = run_cli(cat(base, {"--mode", "abs", "--keep", "2", "--out", (w.dir / "a.json").string(),
                                      "--pred-out", (w.dir / "a.csv").string()}));
    REQUIRE(r.code == cli::kOk);
    const auto j = load_json(w.dir / "a.json");
    CHECK(j["models"].size() == 2);
    CHECK(j["pruning"]["kept"].size() == 2);
    const auto csv = io::read_file(w.dir / "a.csv");
    CHECK(csv.rfind("sample_id,predicted,score_benign,score_malignant\n", 0) == 0);
    const auto rejected = j["ensemble_metrics"]["rejected"].get<std::size_t>();
    std::size_t rows = 0, pos = 0;
    while ((pos = csv.find(",REJECT,", pos)) != std::string::npos) ++rows, ++pos;
    CHECK(rows == rejected);
  }
  SUBCASE("bayes with explicit priors and accuracies") {
    const auto r = run_cli(cat(base, {"--mode", "bayes", "--priors", "0.4,0.6", "--accuracies",
                                      "0.9,0.75,0.6", "--out", (w.dir / "b.json").string()}));
    REQUIRE(r.code == cli::kOk);
    CHECK(load_json(w.dir / "b.json")["ensemble"]["priors"] == json::array({0.4, 0.6}));
  }
  SUBCASE("explicit weights must sum to one") {
    CHECK(run_cli(cat(base, {"--weights", "0.5,0.5,0.5", "--out", (w.dir / "x.json").string()})).code ==
          cli::kValidation);
    CHECK(run_cli(cat(base, {"--weights", "0.5,abc", "--out", (w.dir / "x.json").string()})).code ==
          cli::kUsage);
    CHECK_FALSE(fs::exists(w.dir / "x.json"));
  }
  SUBCASE("a bad input leaves no partial outputs") {
    io::write_file_atomic(w.dir / "short.csv", "# model_id=short\nsample_id,score_benign,score_malignant\n");
    const auto r = run_cli(cat(base, {"--preds", (w.dir / "short.csv").string(), "--out",
                                      (w.dir / "p.json").string(), "--pred-out", (w.dir / "p.csv").string()}));
    CHECK(r.code == cli::kValidation);
    CHECK_FALSE(fs::exists(w.dir / "p.json"));
    CHECK_FALSE(fs::exists(w.dir / "p.csv"));
  }
}

TEST_CASE("search and report") {
  const auto w = make_workspace("cli_search");
  const std::vector<std::string> common =
      cat({"search", "--manifest", w.manifest.string(), "--seed", "5"}, pred_args(w));
  const auto base = cat(common, {"--step", "0.25"});
  const auto r = run_cli(cat(base, {"--out", (w.dir / "s1.json").string()}));
  REQUIRE(r.code == cli::kOk);
  const auto j = load_json(w.dir / "s1.json");
  CHECK(j["search"]["evaluated_count"] == 15);
  CHECK(j["search"]["split"] == "val");
  CHECK(j["split"] == "test");
  CHECK(j["seeds"]["search"] == 5);
  CHECK(j["weights"]["grid_fractions"].size() == 3);

  REQUIRE(run_cli(cat(base, {"--workers", "3", "--out", (w.dir / "s2.json").string()})).code == cli::kOk);
  CHECK(io::read_file(w.dir / "s1.json") == io::read_file(w.dir / "s2.json"));

  CHECK(run_cli(cat(common, {"--step", "0.3", "--out", (w.dir / "s3.json").string()})).code ==
        cli::kValidation);
  CHECK_FALSE(fs::exists(w.dir / "s3.json"));

  SUBCASE("report merges into one table") {
    REQUIRE(run_cli({"evaluate", "--manifest", w.manifest.string(), "--preds", w.perfect.string(), "--out",
                     (w.dir / "e.json").string()})
                .code == cli::kOk);
    const auto rep = run_cli({"report", "--in", (w.dir / "s1.json").string(), (w.dir / "e.json").string(),
                              "--out", (w.dir / "cmp.json").string(), "--text", (w.dir / "cmp.txt").string()});
    REQUIRE(rep.code == cli::kOk);
    for (const char* name : {"model0", "model1", "model2", "oracle", "Ensemble", "(values in %)"}) {
      CHECK(rep.out.find(name) != std::string::npos);
    }
    CHECK(rep.out.find("100.00") != std::string::npos);
    CHECK(io::read_file(w.dir / "cmp.txt") == rep.out);
    CHECK(load_json(w.dir / "cmp.json")["schema"] == "histoens.comparison");
  }
  SUBCASE("incomparable reports are rejected") {
    REQUIRE(run_cli({"evaluate", "--manifest", w.manifest.string(), "--preds", w.perfect.string(), "--split",
                     "val", "--out", (w.dir / "ev.json").string()})
                .code == cli::kOk);
    CHECK(run_cli({"report", "--in", (w.dir / "s1.json").string(), (w.dir / "ev.json").string()}).code ==
          cli::kValidation);
    io::write_file_atomic(w.dir / "junk.json", "{not json");
    CHECK(run_cli({"report", "--in", (w.dir / "junk.json").string()}).code == cli::kValidation);
  }
}
