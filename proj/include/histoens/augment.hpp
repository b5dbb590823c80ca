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

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "histoens/image.hpp"
#include "histoens/manifest.hpp"

namespace histoens {

enum class Transform { hflip, vflip };

std::string_view to_string(Transform t);
Transform parse_transform(std::string_view text);
FlipAxis axis_of(Transform t);

struct PlanEntry {
  std::string parent_id;
  Transform transform = Transform::hflip;
  std::string new_sample_id;
  Split split = Split::train;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

// Flip operations that bring each split of a two-class manifest to equal
// class counts.
struct AugmentationPlan {
  std::vector<PlanEntry> entries;

  // Each (parent, transform) at most once; each parent is an original record
  // of `m` and each entry's split is its parent's split.
  void validate(const Manifest& m) const;

  friend bool operator==(const AugmentationPlan&, const AugmentationPlan&) = default;
};

std::string augmented_sample_id(std::string_view parent_id, Transform t);

// Per split with minority count n and majority count N, the deficit N - n is
// filled with horizontal flips of the minority originals first and vertical
// flips after that. When the deficit is below n the hflip parents are a
// seeded selection; otherwise every minority original is hflipped and
// N - 2n vflip parents are drawn at random. Requires N <= 3n.
AugmentationPlan plan_balance(const Manifest& m, std::uint64_t seed);

// Plan file: CSV with header `parent_id,transform,new_sample_id,split`.
AugmentationPlan parse_plan(std::istream& in);
AugmentationPlan load_plan(const std::filesystem::path& path);
void write_plan(std::ostream& out, const AugmentationPlan& plan);
std::string plan_to_string(const AugmentationPlan& plan);

// Manifest after the plan, without touching files: the input records in
// their original order followed by one record per entry, sorted by
// sample_id. New paths are the parent path with "__hflip"/"__vflip" before
// the extension.
Manifest apply_plan_records(const AugmentationPlan& plan, const Manifest& m);

// Reads each parent image from src_dir, writes the flipped copy under
// dst_dir, and returns apply_plan_records(plan, m). Missing sources are
// reported before anything is written. `workers` threads share the file work.
Manifest execute_plan(const AugmentationPlan& plan, const Manifest& m,
                      const std::filesystem::path& src_dir,
                      const std::filesystem::path& dst_dir,
                      unsigned workers = 1);

}  // namespace histoens
