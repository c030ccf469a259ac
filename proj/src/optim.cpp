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

#include "clex/optim.hpp"

#include <cmath>

#include "clex/errors.hpp"

namespace clex {

template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T(0));
      state.v.emplace_back(p.numel(), T(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state holds " + std::to_string(state.m.size()) +
                     " buffers for " + std::to_string(params.size()) + " params");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.numel()) throw ShapeError("adam_step: moment size mismatch");
    auto w = p.mutable_data();
    auto g = p.grad();
    const bool has = p.has_grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has ? double(g[i]) : 0.0;
      m[i] = T(cfg.beta1 * double(m[i]) + (1.0 - cfg.beta1) * gi);
      v[i] = T(cfg.beta2 * double(v[i]) + (1.0 - cfg.beta2) * gi * gi);
      const double mhat = double(m[i]) / bc1;
      const double vhat = double(v[i]) / bc2;
      w[i] = T(double(w[i]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

template <typename T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (T g : p.grad()) sq += double(g) * double(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T f = T(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (auto& g : p.mutable_grad()) g *= f;
    }
  }
  return norm;
}

template <typename T>
void zero_grads(std::span<Tensor<T>> params) {
  for (auto& p : params) p.zero_grad();
}

template void adam_step<float>(std::span<Tensor<float>>, AdamState<float>&,
                               const AdamConfig&);
template void adam_step<double>(std::span<Tensor<double>>, AdamState<double>&,
                                const AdamConfig&);
template double clip_grad_norm<float>(std::span<Tensor<float>>, double);
template double clip_grad_norm<double>(std::span<Tensor<double>>, double);
template void zero_grads<float>(std::span<Tensor<float>>);
template void zero_grads<double>(std::span<Tensor<double>>);

}  // namespace clex
