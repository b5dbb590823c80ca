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

#include "histoens/manifest.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "histoens/csv.hpp"
#include "histoens/error.hpp"
#include "histoens/io.hpp"
#include "histoens/random.hpp"

namespace histoens {
namespace {

constexpr std::array<std::string_view, 9> kHeader = {
    "sample_id", "path",   "class",      "magnification", "patient_id",
    "subtype",   "split", "provenance", "parent_id"};

constexpr std::string_view kClassesPrefix = "# classes=";

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::optional<std::string> optional_field(std::string field) {
  if (field.empty()) return std::nullopt;
  return field;
}

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.emplace_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Rational divide(const Rational& a, const Rational& b) {
  const __int128 num = static_cast<__int128>(a.num()) * b.den();
  const __int128 den = static_cast<__int128>(a.den()) * b.num();
  if (num > INT64_MAX || den > INT64_MAX) {
    throw ValidationError("split ratio arithmetic overflow");
  }
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::original: return "original";
    case Provenance::hflip: return "hflip";
    case Provenance::vflip: return "vflip";
  }
  return "?";
}

std::string_view to_string(Magnification m) {
  switch (m) {
    case Magnification::x40: return "40X";
    case Magnification::x100: return "100X";
    case Magnification::x200: return "200X";
    case Magnification::x400: return "400X";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(text) +
                        "' (expected train, val or test)");
}

Provenance parse_provenance(std::string_view text) {
  if (text == "original") return Provenance::original;
  if (text == "hflip") return Provenance::hflip;
  if (text == "vflip") return Provenance::vflip;
  throw ValidationError("unknown provenance '" + std::string(text) + "'");
}

Magnification parse_magnification(std::string_view text) {
  std::string_view digits = text;
  if (digits.ends_with("\xC3\x97")) {  // multiplication sign
    digits.remove_suffix(2);
  } else if (digits.ends_with('X') || digits.ends_with('x')) {
    digits.remove_suffix(1);
  }
  if (digits == "40") return Magnification::x40;
  if (digits == "100") return Magnification::x100;
  if (digits == "200") return Magnification::x200;
  if (digits == "400") return Magnification::x400;
  throw ValidationError("unknown magnification '" + std::string(text) + "'");
}

void Manifest::validate() const {
  if (classes.size() < 2) throw ValidationError("manifest needs at least two classes");
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& c : classes) {
      if (c.empty()) throw ValidationError("empty class name");
      if (!seen.insert(c).second) throw ValidationError("duplicate class name '" + c + "'");
    }
  }

  std::unordered_map<std::string_view, const SampleRecord*> by_id;
  by_id.reserve(records.size());
  for (const auto& r : records) {
    if (r.sample_id.empty()) throw ValidationError("empty sample_id");
    if (!by_id.emplace(r.sample_id, &r).second) {
      throw ValidationError("duplicate sample_id '" + r.sample_id + "'");
    }
    if (r.class_label >= classes.size()) {
      throw ValidationError("sample '" + r.sample_id + "' has class label " +
                            std::to_string(r.class_label) + " outside the vocabulary");
    }
  }

  std::size_t with_split = 0;
  for (const auto& r : records) {
    if (r.split) ++with_split;
    if (r.provenance == Provenance::original) {
      if (r.parent_id) {
        throw ValidationError("original sample '" + r.sample_id + "' must not have a parent_id");
      }
      continue;
    }
    if (!r.parent_id) {
      throw ValidationError("augmented sample '" + r.sample_id + "' has no parent_id");
    }
    auto it = by_id.find(*r.parent_id);
    if (it == by_id.end()) {
      throw ValidationError("sample '" + r.sample_id + "' has dangling parent_id '" +
                            *r.parent_id + "'");
    }
    const SampleRecord& parent = *it->second;
    if (parent.provenance != Provenance::original) {
      throw ValidationError("parent '" + parent.sample_id + "' of '" + r.sample_id +
                            "' is not an original record");
    }
    if (parent.split != r.split) {
      throw ValidationError("augmented sample '" + r.sample_id +
                            "' is not in its parent's split");
    }
  }
  if (with_split != 0 && with_split != records.size()) {
    throw ValidationError("manifest is partially split: " + std::to_string(with_split) +
                          " of " + std::to_string(records.size()) + " records have a split");
  }
}

bool Manifest::is_split() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const auto& r) { return r.split.has_value(); });
}

std::size_t Manifest::class_index(std::string_view name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) throw ValidationError("unknown class name '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - classes.begin());
}

const SampleRecord* Manifest::find(std::string_view sample_id) const {
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const auto& r) { return r.sample_id == sample_id; });
  return it == records.end() ? nullptr : &*it;
}

SplitClassCounts count_by_split(const Manifest& m) {
  SplitClassCounts counts;
  for (auto& row : counts) row.assign(m.classes.size(), 0);
  for (const auto& r : m.records) {
    if (r.split) ++counts[index_of(*r.split)][r.class_label];
  }
  return counts;
}

std::vector<std::size_t> count_by_class(const Manifest& m) {
  std::vector<std::size_t> counts(m.classes.size(), 0);
  for (const auto& r : m.records) ++counts[r.class_label];
  return counts;
}

SplitRatios SplitRatios::parse(std::string_view text) {
  std::string joined(text);
  std::replace(joined.begin(), joined.end(), ':', ',');
  const auto parts = split_commas(joined);
  if (parts.size() != 3) {
    throw ValidationError("ratios must have three parts a:b:c, got '" + std::string(text) + "'");
  }
  const Rational a = Rational::parse(parts[0]);
  const Rational b = Rational::parse(parts[1]);
  const Rational c = Rational::parse(parts[2]);
  const Rational total = a + b + c;
  if (total.num() == 0) throw ValidationError("split ratios are all zero");
  const bool decimal = text.find('.') != std::string_view::npos ||
                       text.find('/') != std::string_view::npos;
  if (decimal) {
    SplitRatios r{a, b, c};
    r.validate();
    return r;
  }
  return SplitRatios{divide(a, total), divide(b, total), divide(c, total)};
}

void SplitRatios::validate() const {
  if (train + val + test != Rational(1, 1)) {
    throw ValidationError("split ratios " + to_string() + " do not sum to 1");
  }
}

std::string SplitRatios::to_string() const {
  return train.to_string() + ":" + val.to_string() + ":" + test.to_string();
}

std::array<std::size_t, 3> split_quota(std::size_t class_size, const SplitRatios& ratios) {
  ratios.validate();
  const std::array<Rational, 3> parts = {ratios.train, ratios.val, ratios.test};
  std::int64_t den = 1;
  for (const auto& p : parts) den = std::lcm(den, p.den());

  std::array<std::size_t, 3> quota{};
  std::array<__int128, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const __int128 scaled = static_cast<__int128>(class_size) * parts[s].num() * (den / parts[s].den());
    quota[s] = static_cast<std::size_t>(scaled / den);
    remainder[s] = scaled % den;
    assigned += quota[s];
  }
  // At most two leftover seats; stable sort keeps train before val before test on ties.
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
  for (std::size_t k = 0; assigned < class_size; ++k, ++assigned) ++quota[order[k]];
  return quota;
}

Manifest parse_manifest(std::istream& in) {
  Manifest m;
  csv::Reader reader(in);
  std::optional<csv::Row> row;
  while ((row = reader.next(/*keep_comments=*/true))) {
    const std::string& first = row->fields.front();
    if (row->fields.size() == 1 && first.starts_with('#')) {
      if (first.starts_with(kClassesPrefix)) {
        m.classes = split_commas(std::string_view(first).substr(kClassesPrefix.size()));
      }
      continue;
    }
    break;
  }
  if (!row) throw ValidationError("line 1: missing header row");
  if (!std::equal(row->fields.begin(), row->fields.end(), kHeader.begin(), kHeader.end())) {
    throw ValidationError(at_line(row->line) + "unexpected header (expected " +
                          "sample_id,path,class,magnification,patient_id,subtype,split,provenance,parent_id)");
  }

  while ((row = reader.next())) {
    auto& f = row->fields;
    if (f.size() != kHeader.size()) {
      throw ValidationError(at_line(row->line) + "expected " + std::to_string(kHeader.size()) +
                            " fields, found " + std::to_string(f.size()));
    }
    try {
      SampleRecord r;
      r.sample_id = std::move(f[0]);
      r.path = std::move(f[1]);
      r.class_label = m.class_index(f[2]);
      if (!f[3].empty()) r.magnification = parse_magnification(f[3]);
      r.patient_id = optional_field(std::move(f[4]));
      r.subtype = optional_field(std::move(f[5]));
      if (!f[6].empty()) r.split = parse_split(f[6]);
      r.provenance = f[7].empty() ? Provenance::original : parse_provenance(f[7]);
      r.parent_id = optional_field(std::move(f[8]));
      m.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(row->line) + e.what());
    }
  }
  m.validate();
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  try {
    return parse_manifest(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_manifest(std::ostream& out, const Manifest& m) {
  out << kClassesPrefix;
  for (std::size_t i = 0; i < m.classes.size(); ++i) out << (i ? "," : "") << m.classes[i];
  out << '\n';
  csv::write_row(out, std::vector<std::string>(kHeader.begin(), kHeader.end()));
  for (const auto& r : m.records) {
    csv::write_row(out, {r.sample_id, r.path, m.classes[r.class_label],
                         r.magnification ? std::string(to_string(*r.magnification)) : "",
                         r.patient_id.value_or(""), r.subtype.value_or(""),
                         r.split ? std::string(to_string(*r.split)) : "",
                         std::string(to_string(r.provenance)), r.parent_id.value_or("")});
  }
}

std::string manifest_to_string(const Manifest& m) {
  std::ostringstream out;
  write_manifest(out, m);
  return out.str();
}

Manifest stratified_split(const Manifest& m, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  m.validate();
  for (const auto& r : m.records) {
    if (r.provenance != Provenance::original) {
      throw ValidationError("cannot split: '" + r.sample_id + "' is an augmented record");
    }
    if (r.split) throw ValidationError("cannot split: manifest already has split assignments");
  }

  std::vector<std::vector<std::size_t>> by_class(m.classes.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    by_class[m.records[i].class_label].push_back(i);
  }

  Manifest out = m;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) throw ValidationError("cannot split: class '" + m.classes[c] + "' is empty");
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return m.records[a].sample_id < m.records[b].sample_id;
    });
    Rng rng(mix_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(members));

    const auto quota = split_quota(members.size(), ratios);
    std::size_t pos = 0;
    for (Split s : kAllSplits) {
      for (std::size_t k = 0; k < quota[index_of(s)]; ++k) out.records[members[pos++]].split = s;
    }
  }
  return out;
}

}  // namespace histoens
