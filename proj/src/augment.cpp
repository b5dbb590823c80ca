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

#include "histoens/augment.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <utility>

#include "histoens/csv.hpp"
#include "histoens/error.hpp"
#include "histoens/io.hpp"
#include "histoens/random.hpp"

namespace histoens {
namespace {

constexpr std::array<std::string_view, 4> kPlanHeader = {"parent_id", "transform",
                                                         "new_sample_id", "split"};

std::string flipped_path(const std::string& parent_path, Transform t) {
  const std::filesystem::path p(parent_path);
  std::string name = p.stem().string();
  name += "__";
  name += to_string(t);
  name += p.extension().string();
  return (p.parent_path() / name).generic_string();
}

std::unordered_map<std::string_view, const SampleRecord*> index_records(const Manifest& m) {
  std::unordered_map<std::string_view, const SampleRecord*> by_id;
  by_id.reserve(m.records.size());
  for (const auto& r : m.records) by_id.emplace(r.sample_id, &r);
  return by_id;
}

}  // namespace

std::string_view to_string(Transform t) {
  return t == Transform::hflip ? "hflip" : "vflip";
}

Transform parse_transform(std::string_view text) {
  if (text == "hflip") return Transform::hflip;
  if (text == "vflip") return Transform::vflip;
  throw ValidationError("unknown transform '" + std::string(text) + "'");
}

FlipAxis axis_of(Transform t) {
  return t == Transform::hflip ? FlipAxis::horizontal : FlipAxis::vertical;
}

std::string augmented_sample_id(std::string_view parent_id, Transform t) {
  std::string id(parent_id);
  id += "__";
  id += to_string(t);
  return id;
}

void AugmentationPlan::validate(const Manifest& m) const {
  const auto by_id = index_records(m);
  std::set<std::pair<std::string_view, Transform>> seen;
  for (const auto& e : entries) {
    auto it = by_id.find(e.parent_id);
    if (it == by_id.end()) {
      throw ValidationError("plan references unknown parent '" + e.parent_id + "'");
    }
    const SampleRecord& parent = *it->second;
    if (parent.provenance != Provenance::original) {
      throw ValidationError("plan parent '" + e.parent_id + "' is not an original record");
    }
    if (parent.split != e.split) {
      throw ValidationError("plan entry '" + e.new_sample_id + "' is not in its parent's split");
    }
    if (!seen.emplace(e.parent_id, e.transform).second) {
      throw ValidationError("plan repeats (" + e.parent_id + ", " +
                            std::string(to_string(e.transform)) + ")");
    }
  }
}

AugmentationPlan plan_balance(const Manifest& m, std::uint64_t seed) {
  m.validate();
  if (m.classes.size() != 2) {
    throw ValidationError("flip balancing needs exactly two classes, manifest has " +
                          std::to_string(m.classes.size()));
  }
  if (!m.is_split()) throw ValidationError("flip balancing needs a fully split manifest");
  for (const auto& r : m.records) {
    if (r.provenance != Provenance::original) {
      throw ValidationError("flip balancing needs original records only; found '" +
                            r.sample_id + "'");
    }
  }

  AugmentationPlan plan;
  for (Split s : kAllSplits) {
    std::array<std::vector<std::string_view>, 2> members;
    for (const auto& r : m.records) {
      if (r.split == s) members[r.class_label].push_back(r.sample_id);
    }
    const std::size_t minority = members[0].size() <= members[1].size() ? 0 : 1;
    auto& pool = members[minority];
    const std::size_t n = pool.size();
    const std::size_t big = members[1 - minority].size();
    if (n == big) continue;
    if (big > 3 * n) {
      throw ValidationError("split " + std::string(to_string(s)) + ": " +
                            std::to_string(big) + " " + m.classes[1 - minority] +
                            " vs " + std::to_string(n) + " " + m.classes[minority] +
                            "; flips can at most triple a class");
    }
    std::sort(pool.begin(), pool.end());
    const std::size_t deficit = big - n;

    std::vector<std::string_view> hflips = pool;
    std::vector<std::string_view> vflips;
    if (deficit < n) {
      Rng rng(mix_seed(seed, 2 * index_of(s)));
      rng.shuffle(std::span(hflips));
      hflips.resize(deficit);
    } else {
      vflips = pool;
      Rng rng(mix_seed(seed, 2 * index_of(s) + 1));
      rng.shuffle(std::span(vflips));
      vflips.resize(deficit - n);
    }

    std::vector<PlanEntry> split_entries;
    for (auto id : hflips) {
      split_entries.push_back({std::string(id), Transform::hflip,
                               augmented_sample_id(id, Transform::hflip), s});
    }
    for (auto id : vflips) {
      split_entries.push_back({std::string(id), Transform::vflip,
                               augmented_sample_id(id, Transform::vflip), s});
    }
    std::sort(split_entries.begin(), split_entries.end(),
              [](const auto& a, const auto& b) { return a.new_sample_id < b.new_sample_id; });
    std::move(split_entries.begin(), split_entries.end(), std::back_inserter(plan.entries));
  }
  return plan;
}

AugmentationPlan parse_plan(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || !std::equal(header->fields.begin(), header->fields.end(),
                             kPlanHeader.begin(), kPlanHeader.end())) {
    throw ValidationError("line 1: expected plan header parent_id,transform,new_sample_id,split");
  }
  AugmentationPlan plan;
  while (auto row = reader.next()) {
    auto& f = row->fields;
    if (f.size() != kPlanHeader.size()) {
      throw ValidationError("line " + std::to_string(row->line) + ": expected 4 fields");
    }
    try {
      plan.entries.push_back({std::move(f[0]), parse_transform(f[1]), std::move(f[2]),
                              parse_split(f[3])});
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(row->line) + ": " + e.what());
    }
  }
  return plan;
}

AugmentationPlan load_plan(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  try {
    return parse_plan(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_plan(std::ostream& out, const AugmentationPlan& plan) {
  csv::write_row(out, std::vector<std::string>(kPlanHeader.begin(), kPlanHeader.end()));
  for (const auto& e : plan.entries) {
    csv::write_row(out, {e.parent_id, std::string(to_string(e.transform)), e.new_sample_id,
                         std::string(to_string(e.split))});
  }
}

std::string plan_to_string(const AugmentationPlan& plan) {
  std::ostringstream out;
  write_plan(out, plan);
  return out.str();
}

Manifest apply_plan_records(const AugmentationPlan& plan, const Manifest& m) {
  m.validate();
  plan.validate(m);
  const auto by_id = index_records(m);

  std::vector<SampleRecord> added;
  added.reserve(plan.entries.size());
  for (const auto& e : plan.entries) {
    const SampleRecord& parent = *by_id.at(e.parent_id);
    SampleRecord r = parent;
    r.sample_id = e.new_sample_id;
    r.path = flipped_path(parent.path, e.transform);
    r.provenance = e.transform == Transform::hflip ? Provenance::hflip : Provenance::vflip;
    r.parent_id = parent.sample_id;
    added.push_back(std::move(r));
  }
  std::sort(added.begin(), added.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });

  Manifest out = m;
  out.records.insert(out.records.end(), std::make_move_iterator(added.begin()),
                     std::make_move_iterator(added.end()));
  out.validate();
  return out;
}

Manifest execute_plan(const AugmentationPlan& plan, const Manifest& m,
                      const std::filesystem::path& src_dir,
                      const std::filesystem::path& dst_dir, unsigned workers) {
  Manifest out = apply_plan_records(plan, m);
  if (plan.entries.empty()) return out;

  const auto by_id = index_records(out);
  struct Job {
    std::filesystem::path src;
    std::filesystem::path dst;
    FlipAxis axis;
  };
  std::vector<Job> jobs;
  jobs.reserve(plan.entries.size());
  for (const auto& e : plan.entries) {
    jobs.push_back({src_dir / by_id.at(e.parent_id)->path, dst_dir / by_id.at(e.new_sample_id)->path,
                    axis_of(e.transform)});
  }
  for (const auto& j : jobs) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(j.src, ec)) {
      throw IoError("missing source image", j.src.string());
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex failures_mu;
  struct Failure {
    std::size_t job;
    std::string message;
    bool undecodable;
  };
  std::vector<Failure> failures;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        write_png(jobs[i].dst, apply_flip(read_png(jobs[i].src), jobs[i].axis));
      } catch (const ValidationError& e) {
        std::lock_guard lock(failures_mu);
        failures.push_back({i, e.what(), true});
      } catch (const std::exception& e) {
        std::lock_guard lock(failures_mu);
        failures.push_back({i, e.what(), false});
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end(),
              [](const auto& a, const auto& b) { return a.job < b.job; });
    const Failure& first = failures.front();
    const std::string summary = std::to_string(failures.size()) + " of " +
                                std::to_string(jobs.size()) + " flips failed (" +
                                std::to_string(jobs.size() - failures.size()) +
                                " written); first failure: " + first.message;
    if (first.undecodable) throw ValidationError(summary);
    throw IoError(summary, jobs[first.job].src.string());
  }
  return out;
}

}  // namespace histoens
