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

#include "clex/rope.hpp"

#include <cmath>
#include <string>

#include "clex/errors.hpp"

namespace clex {

FrequencyBasis::FrequencyBasis(std::vector<double> theta, double base)
    : theta_(std::move(theta)), base_(base) {
  if (theta_.empty()) throw DomainError("frequency basis must not be empty");
  for (double t : theta_) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw DomainError("frequency basis entries must be positive and finite");
    }
  }
}

LogBasis LogBasis::of(const FrequencyBasis& basis) {
  LogBasis out;
  out.z.reserve(basis.size());
  for (double t : basis.theta()) out.z.push_back(std::log(t));
  return out;
}

FrequencyBasis LogBasis::exp() const {
  std::vector<double> theta;
  theta.reserve(z.size());
  for (double v : z) theta.push_back(std::exp(v));
  return FrequencyBasis(std::move(theta));
}

FrequencyBasis default_basis(std::size_t d, double base) {
  if (d < 2 || d % 2 != 0) {
    throw DomainError("head dimension must be even and >= 2, got " +
                      std::to_string(d));
  }
  if (!(base > 1.0)) throw DomainError("RoPE base must exceed 1");
  std::vector<double> theta(d / 2);
  for (std::size_t i = 0; i < d / 2; ++i) {
    theta[i] = std::pow(base, -2.0 * double(i) / double(d));
  }
  return FrequencyBasis(std::move(theta), base);
}

std::vector<double> apply_rotary(std::span<const double> x, double m,
                                 const FrequencyBasis& basis) {
  if (x.size() != basis.head_dim()) {
    throw ShapeError("apply_rotary: vector of length " + std::to_string(x.size()) +
                     " for head dim " + std::to_string(basis.head_dim()));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double a = m * basis[i];
    const double c = std::cos(a), s = std::sin(a);
    out[2 * i] = x[2 * i] * c - x[2 * i + 1] * s;
    out[2 * i + 1] = x[2 * i] * s + x[2 * i + 1] * c;
  }
  return out;
}

double pair_score(std::span<const double> q, std::span<const double> k, double m,
                  double n, const FrequencyBasis& basis) {
  if (q.size() != k.size()) throw ShapeError("pair_score: q and k lengths differ");
  const auto rq = apply_rotary(q, m, basis);
  const auto rk = apply_rotary(k, n, basis);
  double dot = 0.0;
  for (std::size_t i = 0; i < rq.size(); ++i) dot += rq[i] * rk[i];
  return dot;
}

}  // namespace clex
