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

// Shared fixtures for the unit and acceptance suites.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "histoens/manifest.hpp"
#include "histoens/predictions.hpp"

namespace histoens::testing {

// Image counts per magnification (40X, 100X, 200X, 400X) and class of the
// public BreaKHis release; 24 benign and 58 malignant patients.
inline constexpr std::array<std::size_t, 4> kBenignByMagnification = {625, 644, 623, 588};
inline constexpr std::array<std::size_t, 4> kMalignantByMagnification = {1370, 1437, 1390, 1232};
inline constexpr std::array<std::size_t, 2> kPatients = {24, 58};

inline Manifest breakhis_shaped_manifest() {
  Manifest m;
  const std::array<Magnification, 4> mags = {Magnification::x40, Magnification::x100,
                                             Magnification::x200, Magnification::x400};
  const std::array<const std::array<std::size_t, 4>*, 2> counts = {&kBenignByMagnification,
                                                                   &kMalignantByMagnification};
  for (std::size_t c = 0; c < 2; ++c) {
    const char tag = c == 0 ? 'B' : 'M';
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < (*counts[c])[k]; ++i) {
        char id[64];
        const std::size_t patient = i % kPatients[c];
        std::snprintf(id, sizeof(id), "SOB_%c_%02zu-%s-%04zu", tag, patient,
                      std::string(to_string(mags[k])).c_str(), i);
        SampleRecord r;
        r.sample_id = id;
        r.path = m.classes[c] + "/" + std::string(to_string(mags[k])) + "/" + id + ".png";
        r.class_label = c;
        r.magnification = mags[k];
        r.patient_id = std::string(1, tag) + std::to_string(patient);
        m.records.push_back(std::move(r));
      }
    }
  }
  return m;
}

// Unsplit manifest with `per_class[c]` originals of class c.
inline Manifest simple_manifest(const std::vector<std::size_t>& per_class,
                                std::vector<std::string> classes = {"benign", "malignant"}) {
  Manifest m;
  m.classes = std::move(classes);
  std::size_t serial = 0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      SampleRecord r;
      char id[32];
      std::snprintf(id, sizeof(id), "s%06zu", serial++);
      r.sample_id = id;
      r.path = std::string(id) + ".png";
      r.class_label = c;
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

// A row-stochastic score vector of length n.
inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& x : v) {
    x = u(rng) + 1e-9;
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

// Aligned predictions with T models, n samples, l classes of random scores.
inline AlignedPredictions random_aligned(std::mt19937_64& rng, std::size_t models,
                                         std::size_t samples, std::size_t classes) {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<std::string> class_names;
  std::vector<std::size_t> truth;
  std::uniform_int_distribution<std::size_t> label(0, classes - 1);
  for (std::size_t c = 0; c < classes; ++c) class_names.push_back("c" + std::to_string(c));
  for (std::size_t s = 0; s < samples; ++s) {
    char id[32];
    std::snprintf(id, sizeof(id), "x%05zu", s);
    ids.push_back(id);
    truth.push_back(label(rng));
  }
  std::vector<std::vector<double>> scores(models);
  for (std::size_t i = 0; i < models; ++i) {
    names.push_back("m" + std::to_string(i));
    for (std::size_t s = 0; s < samples; ++s) {
      auto row = random_distribution(rng, classes);
      scores[i].insert(scores[i].end(), row.begin(), row.end());
    }
  }
  return AlignedPredictions(std::move(names), std::move(class_names), std::move(ids),
                            std::move(truth), std::move(scores));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("histoens_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace histoens::testing
