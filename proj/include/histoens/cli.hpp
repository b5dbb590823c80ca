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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace histoens::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kIo = 3,
};

// Every flag any subcommand accepts; each subcommand checks its own subset.
struct RunConfig {
  std::string subcommand;
  std::string manifest;
  std::string ratios;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> preds;
  std::vector<std::string> inputs;  // report documents for `report`
  std::string plan;
  std::string src_dir;
  std::string dst_dir;
  std::string step = "0.01";
  std::string objective = "accuracy";
  std::optional<std::size_t> keep;
  std::string mode = "soft";
  std::string weights;
  std::string weight_source = "accuracy";
  std::string accuracies;
  std::string priors;
  std::optional<std::string> split;
  std::string val_split = "val";
  std::string test_split = "test";
  std::string positive_class;
  double beta = 1.0;
  unsigned workers = 1;
  std::string out;
  std::string pred_out;
  std::string text_out;
};

// Runs one command line. args[0] is the program name. Errors are reported as
// a single JSON line on `err`:
//   {"error":"validation","exit_code":2,"message":"..."}
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace histoens::cli
