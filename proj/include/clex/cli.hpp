/* Copyright 2026 The clexkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clex/harness.hpp"

namespace clex::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kCompatibilityError = 3,
  kNumericalAbort = 4,
};

// Environment variable naming the directory that receives timestamped run
// directories when no --out is given. Defaults to ./runs.
inline constexpr const char* kOutputRootEnv = "CLEX_OUTPUT_ROOT";

// Flat key/value run description. Every key has a default; unknown keys are
// rejected.
class RunConfig {
 public:
  static const nlohmann::ordered_json& defaults();

  // Parses a JSON object, then applies "key=value" overrides (value parsed as
  // JSON when possible, else taken as a string). Throws InputError.
  static RunConfig from_json(const nlohmann::json& doc,
                             const std::vector<std::string>& overrides = {});
  static RunConfig load(const std::filesystem::path& path,
                        const std::vector<std::string>& overrides = {});

  const nlohmann::ordered_json& values() const { return values_; }

  TrainOptions train_options() const;
  // One TrainOptions per entry of "methods" (or just "method" when empty).
  std::vector<TrainOptions> compare_options() const;
  EvalOptions eval_options() const;
  bool double_precision() const;

  // Subset of keys that fixes the parameter layout and basis computation.
  nlohmann::ordered_json model_fields() const;
  std::string model_hash() const;
  std::string config_hash() const;

 private:
  nlohmann::ordered_json values_;
};

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clex::cli
