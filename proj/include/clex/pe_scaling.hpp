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
#include <string_view>
#include <vector>

#include "clex/rope.hpp"

namespace clex {

// Ratio t = L'/L of an extended context length to the native one.
class ScaleFactor {
 public:
  // Throws DomainError for t < 1 or non-finite t.
  explicit ScaleFactor(double t);
  double value() const { return t_; }

 private:
  double t_;
};

// Per-pair multipliers alpha(t) such that theta_t = alpha(t) * theta.
std::vector<double> alpha_pi(ScaleFactor t, std::size_t d);
// Entry i is t^(-2i/(d-2)); requires d >= 4.
std::vector<double> alpha_yarn(ScaleFactor t, std::size_t d);
// Entry i is 100^(-2i/d). Independent of t.
std::vector<double> alpha_codellama(std::size_t d);

enum class ProfileKind { Identity, PI, Yarn, CodeLlama };

std::string_view profile_name(ProfileKind kind);

struct AlphaProfile {
  ProfileKind kind = ProfileKind::Identity;
  std::size_t d = 0;

  std::vector<double> operator()(ScaleFactor t) const;
};

// theta_t = alpha (.) theta.
FrequencyBasis scale_basis(const FrequencyBasis& basis, std::span<const double> alpha);

// Index scaling used by position interpolation: m -> m / t.
std::vector<double> scale_positions(std::span<const double> positions, ScaleFactor t);

// One link of the log-basis chain: z_next = z_prev + log(alpha_next / alpha_prev).
LogBasis chain_step(const LogBasis& z_prev, std::span<const double> alpha_prev,
                    std::span<const double> alpha_next);

}  // namespace clex
