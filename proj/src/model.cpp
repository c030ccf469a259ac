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

#include "clex/model.hpp"

#include <cmath>
#include <random>

#include "clex/errors.hpp"

namespace clex {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Rope: return "rope";
    case Method::PI: return "pi";
    case Method::Yarn: return "yarn";
    case Method::CodeLlama: return "codellama";
    case Method::RandomPos: return "randompos";
    case Method::Clex: return "clex";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Rope, Method::PI, Method::Yarn, Method::CodeLlama,
                   Method::RandomPos, Method::Clex}) {
    if (method_name(m) == name) return m;
  }
  throw InputError("unknown method '" + std::string(name) +
                   "' (expected rope, pi, yarn, codellama, randompos or clex)");
}

void ModelConfig::validate() const {
  if (vocab == 0 || n_layers == 0 || n_heads == 0 || d_model == 0 || train_len < 2) {
    throw DomainError("model dimensions must be positive and train_len >= 2");
  }
  if (d_model % n_heads != 0) {
    throw DomainError("d_model must be a multiple of n_heads");
  }
  if (d_head() % 2 != 0) throw DomainError("d_head must be even");
  if ((method == Method::Yarn || method == Method::Clex) && d_head() < 4) {
    throw DomainError("Yarn and CLEX need d_head >= 4");
  }
  if (!(t_train >= 1.0) || !(t_fixed >= 1.0)) {
    throw DomainError("scale factors must be >= 1");
  }
  if (!(rope_base > 1.0)) throw DomainError("rope_base must exceed 1");
  if (ode_lambda == 0) throw DomainError("ode_lambda must be >= 1");
}

template <typename T>
TransformerParams<T> TransformerParams<T>::init(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const std::size_t d = config.d_model;
  const double std_in = 0.02;
  const double std_out = 0.02 / std::sqrt(2.0 * double(config.n_layers));
  auto normal = [&rng](Shape shape, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<T> v(shape_numel(shape));
    for (auto& x : v) x = T(dist(rng));
    return Tensor<T>(std::move(shape), std::move(v), true);
  };
  TransformerParams p;
  p.config = config;
  p.embed = normal({config.vocab, d}, std_in);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    LayerParams<T> layer;
    layer.attn_norm = Tensor<T>::full({d}, T(1), true);
    layer.wq = normal({d, d}, std_in);
    layer.wk = normal({d, d}, std_in);
    layer.wv = normal({d, d}, std_in);
    layer.wo = normal({d, d}, std_out);
    layer.mlp_norm = Tensor<T>::full({d}, T(1), true);
    layer.w1 = normal({d, 4 * d}, std_in);
    layer.w2 = normal({4 * d, d}, std_out);
    p.layers.push_back(std::move(layer));
  }
  p.final_norm = Tensor<T>::full({d}, T(1), true);
  return p;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> TransformerParams<T>::named() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  out.emplace_back("embed", embed);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string pre = "layers." + std::to_string(l) + ".";
    const auto& L = layers[l];
    out.emplace_back(pre + "attn_norm", L.attn_norm);
    out.emplace_back(pre + "wq", L.wq);
    out.emplace_back(pre + "wk", L.wk);
    out.emplace_back(pre + "wv", L.wv);
    out.emplace_back(pre + "wo", L.wo);
    out.emplace_back(pre + "mlp_norm", L.mlp_norm);
    out.emplace_back(pre + "w1", L.w1);
    out.emplace_back(pre + "w2", L.w2);
  }
  out.emplace_back("final_norm", final_norm);
  return out;
}

template <typename T>
std::vector<Tensor<T>> TransformerParams<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

template <typename T>
Tensor<T> forward(const TransformerParams<T>& params,
                  std::span<const std::int32_t> tokens, std::size_t batch,
                  std::span<const double> positions, const Tensor<T>& theta,
                  double attn_scale_mult) {
  const auto& cfg = params.config;
  const std::size_t seq = positions.size();
  if (batch == 0 || seq == 0 || tokens.size() != batch * seq) {
    throw ShapeError("forward: " + std::to_string(tokens.size()) +
                     " tokens do not form a batch of " + std::to_string(batch) +
                     " sequences with " + std::to_string(seq) + " positions");
  }
  if (theta.numel() != cfg.d_head() / 2) {
    throw ShapeError("forward: basis has " + std::to_string(theta.numel()) +
                     " frequencies, model needs " + std::to_string(cfg.d_head() / 2));
  }
  for (std::size_t s = 1; s < seq; ++s) {
    if (!(positions[s] > positions[s - 1])) {
      throw DomainError("forward: positions must be strictly increasing");
    }
  }
  const T score_scale =
      T(attn_scale_mult / std::sqrt(double(cfg.d_head())));
  Tensor<T> x = embedding(params.embed, tokens);
  for (const auto& layer : params.layers) {
    auto h = rms_norm(x, layer.attn_norm);
    auto q = rotary(matmul(h, layer.wq), positions, theta, cfg.n_heads);
    auto k = rotary(matmul(h, layer.wk), positions, theta, cfg.n_heads);
    auto v = matmul(h, layer.wv);
    auto a = causal_attention(q, k, v, batch, cfg.n_heads, score_scale);
    x = add(x, matmul(a, layer.wo));
    auto h2 = rms_norm(x, layer.mlp_norm);
    x = add(x, matmul(silu(matmul(h2, layer.w1)), layer.w2));
  }
  return matmul_nt(rms_norm(x, params.final_norm), params.embed);
}

double log_scale_mult(std::size_t train_len, std::size_t test_len) {
  if (train_len < 2 || test_len < 2) {
    throw DomainError("log_scale_mult: lengths must be >= 2");
  }
  return std::max(1.0, std::log(double(test_len)) / std::log(double(train_len)));
}

template struct TransformerParams<float>;
template struct TransformerParams<double>;
template Tensor<float> forward<float>(const TransformerParams<float>&,
                                      std::span<const std::int32_t>, std::size_t,
                                      std::span<const double>,
                                      const Tensor<float>&, double);
template Tensor<double> forward<double>(const TransformerParams<double>&,
                                        std::span<const std::int32_t>, std::size_t,
                                        std::span<const double>,
                                        const Tensor<double>&, double);

}  // namespace clex
