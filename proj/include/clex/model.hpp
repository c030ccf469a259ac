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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clex/rope.hpp"
#include "clex/tensor.hpp"

namespace clex {

// Positional strategy plugged in at the query/key rotation point.
enum class Method { Rope, PI, Yarn, CodeLlama, RandomPos, Clex };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct ModelConfig {
  std::size_t vocab = 256;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_model = 64;
  std::size_t train_len = 128;
  Method method = Method::Rope;
  double t_train = 8.0;   // CLEX / RandomPos: largest scale factor seen in training
  double t_fixed = 4.0;   // PI / Yarn: the trained scale factor
  double rope_base = 10000.0;
  std::size_t ode_lambda = 1;
  std::uint64_t seed = 0;

  std::size_t d_head() const { return n_heads ? d_model / n_heads : 0; }
  // Throws DomainError on inconsistent dimensions.
  void validate() const;
};

template <typename T>
struct LayerParams {
  Tensor<T> attn_norm;  // [D]
  Tensor<T> wq, wk, wv, wo;  // [D, D]
  Tensor<T> mlp_norm;   // [D]
  Tensor<T> w1;         // [D, 4D]
  Tensor<T> w2;         // [4D, D]
};

// Pre-norm decoder. The output head is tied to the token embedding.
template <typename T>
struct TransformerParams {
  ModelConfig config;
  Tensor<T> embed;  // [V, D]
  std::vector<LayerParams<T>> layers;
  Tensor<T> final_norm;  // [D]

  static TransformerParams init(const ModelConfig& config);

  std::vector<std::pair<std::string, Tensor<T>>> named() const;
  std::vector<Tensor<T>> parameters() const;
};

// Logits [B*S, V] for tokens laid out [B, S]. positions has S strictly
// increasing entries; theta is the d_head/2 frequency basis (may carry a
// graph). Pre-softmax scores are q.k / sqrt(d_head) * attn_scale_mult.
template <typename T>
Tensor<T> forward(const TransformerParams<T>& params,
                  std::span<const std::int32_t> tokens, std::size_t batch,
                  std::span<const double> positions, const Tensor<T>& theta,
                  double attn_scale_mult = 1.0);

template <typename T>
Tensor<T> forward(const TransformerParams<T>& params,
                  std::span<const std::int32_t> tokens, std::size_t batch,
                  std::span<const double> positions, const FrequencyBasis& basis,
                  double attn_scale_mult = 1.0) {
  return forward(params, tokens, batch, positions, basis.as_tensor<T>(),
                 attn_scale_mult);
}

// max(1, ln(L_test) / ln(L_train)).
double log_scale_mult(std::size_t train_len, std::size_t test_len);

}  // namespace clex
