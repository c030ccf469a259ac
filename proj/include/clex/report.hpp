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

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "clex/harness.hpp"

namespace clex {

inline constexpr std::string_view kReportCsvHeader =
    "method,train_len,eval_len,eval_t,attn_scale_mult,ppl,acc";

// Header plus one row per EvalRow, reals in 6-decimal fixed notation.
void write_report_csv(const EvalReport& report, std::ostream& os);

// Rows with every field, wrapped with the given run metadata under "run".
nlohmann::ordered_json report_json(const EvalReport& report,
                                   const nlohmann::ordered_json& run_meta);

// Aligned text table using the same number formatting as the CSV.
std::string format_report_table(const EvalReport& report);

// Smallest eval_len per method whose ppl exceeds twice the ppl at the
// method's train_len; nullopt when it never does (or no train_len row).
std::map<std::string, std::optional<std::size_t>> extrapolation_breakpoints(
    const EvalReport& report);

// Fixed 6-decimal formatting shared by CSV and table output.
std::string fixed6(double v);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

// Commit the library was built from.
std::string_view build_commit();

}  // namespace clex
