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

#include "clex/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace clex {

#ifndef CLEX_GIT_COMMIT
#define CLEX_GIT_COMMIT "unknown"
#endif

std::string_view build_commit() { return CLEX_GIT_COMMIT; }

std::string fixed6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_report_csv(const EvalReport& report, std::ostream& os) {
  os << kReportCsvHeader << '\n';
  for (const auto& r : report.rows) {
    os << r.method << ',' << r.train_len << ',' << r.eval_len << ','
       << fixed6(r.eval_t) << ',' << fixed6(r.attn_scale_mult) << ','
       << fixed6(r.ppl) << ',' << fixed6(r.acc) << '\n';
  }
}

nlohmann::ordered_json report_json(const EvalReport& report,
                                   const nlohmann::ordered_json& run_meta) {
  nlohmann::ordered_json j;
  j["run"] = run_meta;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  for (const auto& r : report.rows) {
    rows.push_back({{"method", r.method},
                    {"train_len", r.train_len},
                    {"eval_len", r.eval_len},
                    {"eval_t", num(r.eval_t)},
                    {"attn_scale_mult", num(r.attn_scale_mult)},
                    {"ppl", num(r.ppl)},
                    {"acc", num(r.acc)},
                    {"nll_sum", num(r.nll_sum)},
                    {"tokens", r.tokens},
                    {"windows", r.windows},
                    {"status", r.status}});
  }
  return j;
}

std::string format_report_table(const EvalReport& report) {
  const std::vector<std::string> header = {"method", "train_len", "eval_len", "eval_t",
                                           "attn_scale_mult", "ppl", "acc"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : report.rows) {
    cells.push_back({r.method, std::to_string(r.train_len), std::to_string(r.eval_len),
                     fixed6(r.eval_t), fixed6(r.attn_scale_mult), fixed6(r.ppl),
                     fixed6(r.acc)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      // Left-align the method name, right-align numbers.
      const std::string pad(width[c] - row[c].size(), ' ');
      os << (c == 0 ? row[c] + pad : pad + row[c]);
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : cells) line(row);
  return os.str();
}

std::map<std::string, std::optional<std::size_t>> extrapolation_breakpoints(
    const EvalReport& report) {
  std::map<std::string, std::optional<std::size_t>> out;
  std::map<std::string, double> ref;
  for (const auto& r : report.rows) {
    out.emplace(r.method, std::nullopt);
    if (r.eval_len == r.train_len && std::isfinite(r.ppl)) ref[r.method] = r.ppl;
  }
  for (const auto& r : report.rows) {
    auto it = ref.find(r.method);
    if (it == ref.end() || r.eval_len <= r.train_len) continue;
    const bool broke = std::isnan(r.ppl) ? false : r.ppl > 2.0 * it->second;
    auto& slot = out[r.method];
    if (broke && (!slot || r.eval_len < *slot)) slot = r.eval_len;
  }
  return out;
}

}  // namespace clex
