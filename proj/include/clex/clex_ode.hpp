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
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clex/rope.hpp"
#include "clex/tensor.hpp"

namespace clex {

// Which closed form to use for the fixed Yarn drift term added to the learned
// dynamics. LogDerivative is d/dt log alpha_yarn(t) = -2i / ((d-2) t);
// PaperPrinted is -2i / ((d-2) t^(2i/(d-2)+1)).
enum class XiForm { LogDerivative, PaperPrinted };

std::string_view xi_form_name(XiForm form);
XiForm parse_xi_form(std::string_view name);

std::vector<double> xi(double t, std::size_t d, XiForm form);

// Up-and-down projection g(z) = W_down silu(W_up z) over the log basis.
// W_up maps d/2 -> lambda*d, W_down maps lambda*d -> d/2.
template <typename T>
struct OdeNet {
  Tensor<T> w_up;    // [lambda*d, d/2]
  Tensor<T> w_down;  // [d/2, lambda*d]
  std::size_t lambda_amp = 1;
  std::size_t head_dim = 0;

  // W_up ~ U(-1/sqrt(d/2), 1/sqrt(d/2)), W_down = 0, so a fresh net follows
  // the Yarn dynamics exactly.
  static OdeNet init(std::size_t head_dim, std::size_t lambda_amp,
                     std::mt19937_64& rng);
  // Both matrices zero.
  static OdeNet zeros(std::size_t head_dim, std::size_t lambda_amp);
};

// dz/dt = W_down silu(W_up z) + xi_t. z is a rank-1 tensor of d/2 entries.
template <typename T>
Tensor<T> dynamics(const Tensor<T>& z, double t, const OdeNet<T>& net, XiForm form);

// Number of RK4 steps used to integrate from 1 to t_target:
// max(8, ceil(steps_per_unit * (t_target - 1))), or 0 when t_target == 1.
std::size_t solver_steps(double t_target, int steps_per_unit);

// Differentiable fixed-step RK4 integration of z from t=1 to t_target.
template <typename T>
Tensor<T> solve_log(const Tensor<T>& z1, double t_target, const OdeNet<T>& net,
                    XiForm form, int steps_per_unit = 8);
// Same, with an explicit step count (for convergence studies).
template <typename T>
Tensor<T> solve_log_steps(const Tensor<T>& z1, double t_target,
                          const OdeNet<T>& net, XiForm form, std::size_t steps);

// Non-differentiable convenience wrapper returning the solved log basis.
template <typename T>
LogBasis solve(const LogBasis& z1, double t_target, const OdeNet<T>& net,
               XiForm form, int steps_per_unit = 8);

// t' ~ U[1, t_train], one draw per training step.
double sample_train_factor(double t_train, std::mt19937_64& rng);

enum class PositionMode { Natural, UniformScaled, RandomSampled };

std::string_view position_mode_name(PositionMode mode);
PositionMode parse_position_mode(std::string_view name);

struct PositionPlan {
  std::vector<double> positions;
  PositionMode mode = PositionMode::Natural;
  double t_prime = 1.0;
  std::uint64_t rng_seed = 0;
};

// Position indices for one training sequence of L_train tokens spread over
// [1, t' * L_native]. Throws DomainError when L_train > floor(t' * L_native).
PositionPlan position_plan(std::size_t train_len, double t_prime,
                           std::size_t native_len, PositionMode mode,
                           std::uint64_t rng_seed);

// Solved bases at discrete scale factors t_k, keyed by t_k.
class BasisCache {
 public:
  // Throws DomainError for an empty map, keys below 1, or native_len == 0.
  BasisCache(std::map<double, FrequencyBasis> entries, std::size_t native_len);

  const std::map<double, FrequencyBasis>& entries() const { return entries_; }
  std::size_t native_len() const { return native_len_; }

  // JSON manifest: {"native_len": L, "entries": [{"t": t_k, "theta": [...]}]}
  std::string to_json() const;
  static BasisCache from_json(std::string_view text);

 private:
  std::map<double, FrequencyBasis> entries_;
  std::size_t native_len_;
};

template <typename T>
BasisCache build_cache(const OdeNet<T>& net, XiForm form,
                       std::span<const double> t_ks, const FrequencyBasis& base,
                       std::size_t native_len, int steps_per_unit = 8);

struct LookupResult {
  double t = 1.0;
  FrequencyBasis basis;
  bool on_demand = false;
};

// Read-only view over a cache plus a private overlay of on-demand solves for
// lengths beyond the largest cached t_k * L.
template <typename T>
class CacheSession {
 public:
  // base is the unscaled basis the on-demand solves start from.
  CacheSession(const BasisCache& cache, const OdeNet<T>& net, XiForm form,
               FrequencyBasis base, int steps_per_unit = 8);

  // Basis for the smallest t_k with t_k * L >= seq_len, or an on-demand solve
  // at t = seq_len / L.
  LookupResult lookup(std::size_t seq_len);

  const std::map<double, FrequencyBasis>& overlay() const { return overlay_; }

 private:
  const BasisCache* cache_;
  const OdeNet<T>* net_;
  XiForm form_;
  FrequencyBasis base_;
  int steps_per_unit_;
  std::map<double, FrequencyBasis> overlay_;
};

}  // namespace clex
