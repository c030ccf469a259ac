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

#include "clex/pe_scaling.hpp"

#include <cmath>
#include <string>

#include "clex/errors.hpp"

namespace clex {

namespace {

void require_even(std::size_t d) {
  if (d < 2 || d % 2 != 0) {
    throw DomainError("head dimension must be even and >= 2, got " +
                      std::to_string(d));
  }
}

void require_positive(std::span<const double> alpha, const char* what) {
  for (double a : alpha) {
    if (!(a > 0.0)) throw DomainError(std::string(what) + ": nonpositive alpha entry");
  }
}

}  // namespace

ScaleFactor::ScaleFactor(double t) : t_(t) {
  if (!std::isfinite(t) || t < 1.0) {
    throw DomainError("scale factor must be >= 1, got " + std::to_string(t));
  }
}

std::vector<double> alpha_pi(ScaleFactor t, std::size_t d) {
  require_even(d);
  return std::vector<double>(d / 2, 1.0 / t.value());
}

std::vector<double> alpha_yarn(ScaleFactor t, std::size_t d) {
  require_even(d);
  if (d < 4) throw DomainError("Yarn scaling needs head dimension >= 4");
  std::vector<double> a(d / 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::pow(t.value(), -2.0 * double(i) / double(d - 2));
  }
  return a;
}

std::vector<double> alpha_codellama(std::size_t d) {
  require_even(d);
  std::vector<double> a(d / 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::pow(100.0, -2.0 * double(i) / double(d));
  }
  return a;
}

std::string_view profile_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Identity: return "identity";
    case ProfileKind::PI: return "pi";
    case ProfileKind::Yarn: return "yarn";
    case ProfileKind::CodeLlama: return "codellama";
  }
  return "?";
}

std::vector<double> AlphaProfile::operator()(ScaleFactor t) const {
  switch (kind) {
    case ProfileKind::Identity:
      require_even(d);
      return std::vector<double>(d / 2, 1.0);
    case ProfileKind::PI: return alpha_pi(t, d);
    case ProfileKind::Yarn: return alpha_yarn(t, d);
    case ProfileKind::CodeLlama: return alpha_codellama(d);
  }
  throw DomainError("unknown alpha profile");
}

FrequencyBasis scale_basis(const FrequencyBasis& basis, std::span<const double> alpha) {
  if (alpha.size() != basis.size()) {
    throw ShapeError("scale_basis: alpha has " + std::to_string(alpha.size()) +
                     " entries for a basis of " + std::to_string(basis.size()));
  }
  require_positive(alpha, "scale_basis");
  std::vector<double> theta(basis.size());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = alpha[i] * basis[i];
  return FrequencyBasis(std::move(theta), basis.base());
}

std::vector<double> scale_positions(std::span<const double> positions, ScaleFactor t) {
  std::vector<double> out(positions.begin(), positions.end());
  for (auto& p : out) p /= t.value();
  return out;
}

LogBasis chain_step(const LogBasis& z_prev, std::span<const double> alpha_prev,
                    std::span<const double> alpha_next) {
  if (alpha_prev.size() != z_prev.z.size() || alpha_next.size() != z_prev.z.size()) {
    throw ShapeError("chain_step: alpha length differs from basis length");
  }
  require_positive(alpha_prev, "chain_step");
  require_positive(alpha_next, "chain_step");
  LogBasis out = z_prev;
  for (std::size_t i = 0; i < out.z.size(); ++i) {
    out.z[i] += std::log(alpha_next[i] / alpha_prev[i]);
  }
  return out;
}

}  // namespace clex
