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

#include <cstddef>
#include <span>
#include <vector>

#include "clex/tensor.hpp"

namespace clex {

// Rotation frequencies theta_i (radians per position unit) for the d/2
// adjacent pairs of a head of dimension d. Immutable once built.
class FrequencyBasis {
 public:
  // Throws DomainError if theta is empty or holds a nonpositive entry.
  explicit FrequencyBasis(std::vector<double> theta, double base = 10000.0);

  std::span<const double> theta() const { return theta_; }
  double operator[](std::size_t i) const { return theta_[i]; }
  std::size_t size() const { return theta_.size(); }
  std::size_t head_dim() const { return 2 * theta_.size(); }
  // RoPE base the basis was derived from (informational once scaled).
  double base() const { return base_; }

  template <typename T>
  Tensor<T> as_tensor(bool requires_grad = false) const {
    return Tensor<T>(Shape{theta_.size()},
                     std::vector<T>(theta_.begin(), theta_.end()), requires_grad);
  }

  bool operator==(const FrequencyBasis&) const = default;

 private:
  std::vector<double> theta_;
  double base_;
};

// Natural log of a frequency basis, z = log(theta).
struct LogBasis {
  std::vector<double> z;

  static LogBasis of(const FrequencyBasis& basis);
  FrequencyBasis exp() const;
};

// theta_i = base^(-2i/d) for 0-based i in [0, d/2).
FrequencyBasis default_basis(std::size_t d, double base = 10000.0);

// Rotates each adjacent pair (x[2i], x[2i+1]) by angle m * theta_i.
std::vector<double> apply_rotary(std::span<const double> x, double m,
                                 const FrequencyBasis& basis);

// <R(m) q, R(n) k>; depends on m and n only through n - m.
double pair_score(std::span<const double> q, std::span<const double> k, double m,
                  double n, const FrequencyBasis& basis);

}  // namespace clex
