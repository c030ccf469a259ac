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
#include <filesystem>
#include <string>
#include <vector>

#include "clex/tensor.hpp"

namespace clex {

enum class Precision : std::uint8_t { F32 = 4, F64 = 8 };

const char* precision_name(Precision p);

template <typename T>
constexpr Precision precision_of() {
  return sizeof(T) == 4 ? Precision::F32 : Precision::F64;
}

// One named parameter array as stored on disk. Values are widened to double
// in memory regardless of the stored precision.
struct CheckpointEntry {
  std::string name;
  Shape shape;
  Precision precision = Precision::F32;
  std::vector<double> values;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout (all integers little-endian):
//   "CLEXCKPT" u32 version u32 count
//   per entry: u32 name_len, name bytes, u8 bytes_per_value, u32 rank,
//              u64 dims[rank], raw little-endian values
// A JSON manifest with names, shapes and precisions is written next to the
// binary with the extension replaced by ".json".
template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Tensor<T>>>& params);

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

// Copies a loaded entry into an existing tensor of the same shape.
template <typename T>
void assign_entry(const CheckpointEntry& entry, Tensor<T>& target);

}  // namespace clex
