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

#include "clex/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "clex/errors.hpp"

namespace clex {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'L', 'E', 'X', 'C', 'K', 'P', 'T'};

template <typename U>
void put(std::ostream& os, U v) {
  std::array<char, sizeof(U)> b;
  std::memcpy(b.data(), &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(b.data(), b.size());
}

template <typename U>
U get(std::istream& is) {
  std::array<char, sizeof(U)> b;
  if (!is.read(b.data(), b.size())) throw InputError("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  U v;
  std::memcpy(&v, b.data(), sizeof(U));
  return v;
}

}  // namespace

const char* precision_name(Precision p) {
  return p == Precision::F32 ? "f32" : "f64";
}

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".json");
  return p;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Tensor<T>>>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write checkpoint " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, std::uint32_t(params.size()));
  nlohmann::ordered_json manifest;
  manifest["format"] = "clex-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["precision"] = precision_name(precision_of<T>());
  auto& arr = manifest["params"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : params) {
    put<std::uint32_t>(os, std::uint32_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    put<std::uint8_t>(os, std::uint8_t(precision_of<T>()));
    put<std::uint32_t>(os, std::uint32_t(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(os, d);
    for (T v : t.data()) put<T>(os, v);
    arr.push_back({{"name", name}, {"shape", t.shape()}});
  }
  if (!os) throw InputError("failed writing checkpoint " + path.string());
  std::ofstream ms(manifest_path(path), std::ios::trunc);
  ms << manifest.dump(2) << '\n';
}

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("checkpoint not found: " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw InputError("not a clex checkpoint: " + path.string());
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw CompatibilityError("unsupported checkpoint version " +
                             std::to_string(version));
  }
  const auto count = get<std::uint32_t>(is);
  std::vector<CheckpointEntry> out;
  out.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    CheckpointEntry entry;
    entry.name.resize(get<std::uint32_t>(is));
    if (!is.read(entry.name.data(), std::streamsize(entry.name.size()))) {
      throw InputError("checkpoint truncated");
    }
    const auto bytes = get<std::uint8_t>(is);
    if (bytes != 4 && bytes != 8) throw InputError("bad precision tag in checkpoint");
    entry.precision = Precision(bytes);
    const auto rank = get<std::uint32_t>(is);
    for (std::uint32_t r = 0; r < rank; ++r) {
      entry.shape.push_back(std::size_t(get<std::uint64_t>(is)));
    }
    const std::size_t n = shape_numel(entry.shape);
    entry.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      entry.values[i] = bytes == 4 ? double(get<float>(is)) : get<double>(is);
    }
    out.push_back(std::move(entry));
  }
  return out;
}

template <typename T>
void assign_entry(const CheckpointEntry& entry, Tensor<T>& target) {
  if (entry.shape != target.shape()) {
    throw CompatibilityError("parameter " + entry.name + " has shape " +
                             shape_str(entry.shape) + ", expected " +
                             shape_str(target.shape()));
  }
  auto dst = target.mutable_data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = T(entry.values[i]);
}

template void save_checkpoint<float>(
    const std::filesystem::path&,
    const std::vector<std::pair<std::string, Tensor<float>>>&);
template void save_checkpoint<double>(
    const std::filesystem::path&,
    const std::vector<std::pair<std::string, Tensor<double>>>&);
template void assign_entry<float>(const CheckpointEntry&, Tensor<float>&);
template void assign_entry<double>(const CheckpointEntry&, Tensor<double>&);

}  // namespace clex
