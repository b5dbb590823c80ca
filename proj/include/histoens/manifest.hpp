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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "histoens/rational.hpp"

namespace histoens {

enum class Split { train, val, test };
inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::val,
                                                    Split::test};

enum class Provenance { original, hflip, vflip };
enum class Magnification { x40, x100, x200, x400 };

std::string_view to_string(Split s);
std::string_view to_string(Provenance p);
std::string_view to_string(Magnification m);
Split parse_split(std::string_view text);
Provenance parse_provenance(std::string_view text);
Magnification parse_magnification(std::string_view text);

inline std::size_t index_of(Split s) { return static_cast<std::size_t>(s); }

struct SampleRecord {
  std::string sample_id;
  std::string path;
  std::size_t class_label = 0;
  std::optional<Magnification> magnification;
  std::optional<std::string> patient_id;
  std::optional<std::string> subtype;
  std::optional<Split> split;
  Provenance provenance = Provenance::original;
  // Set iff provenance != original.
  std::optional<std::string> parent_id;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

inline const std::vector<std::string>& default_binary_classes() {
  static const std::vector<std::string> kClasses = {"benign", "malignant"};
  return kClasses;
}

// Dataset inventory. Class order defines label indices.
struct Manifest {
  std::vector<std::string> classes = default_binary_classes();
  std::vector<SampleRecord> records;

  // Throws ValidationError naming the first violated invariant.
  void validate() const;

  bool is_split() const;
  std::size_t class_index(std::string_view name) const;  // throws if unknown
  const SampleRecord* find(std::string_view sample_id) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

// counts[split][class]; only meaningful for a fully split manifest.
using SplitClassCounts = std::array<std::vector<std::size_t>, 3>;
SplitClassCounts count_by_split(const Manifest& m);
std::vector<std::size_t> count_by_class(const Manifest& m);

struct SplitRatios {
  Rational train;
  Rational val;
  Rational test;

  // "7:1:2" (normalized by the total) or "0.7:0.1:0.2" (must already sum to 1).
  static SplitRatios parse(std::string_view text);
  void validate() const;
  std::string to_string() const;
};

// Largest-remainder apportionment of `class_size` items under `ratios`.
// Remainder ties go to train, then val.
std::array<std::size_t, 3> split_quota(std::size_t class_size,
                                       const SplitRatios& ratios);

// Manifest file I/O. The file is CSV with the fixed header
//   sample_id,path,class,magnification,patient_id,subtype,split,provenance,parent_id
// optionally preceded by a `# classes=a,b,...` line that fixes the class
// vocabulary; without it the binary benign/malignant vocabulary is used.
Manifest parse_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Manifest& m);
std::string manifest_to_string(const Manifest& m);

// Assigns every record to train/val/test. Within each class the split sizes
// are split_quota(class size); membership comes from a seeded shuffle of the
// class's records taken in sample_id order, so input row order does not
// matter.
Manifest stratified_split(const Manifest& m, const SplitRatios& ratios,
                          std::uint64_t seed);

}  // namespace histoens
