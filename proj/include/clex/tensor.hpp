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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace clex {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Thread-local switch for graph recording. While disabled, ops produce plain
// values with no parents even when inputs require grad.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// NaN/Inf scanning of every op output. On by default in debug builds.
void set_finite_checks(bool on);
bool finite_checks();

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

std::uint64_t next_seq();

}  // namespace detail

// Dense row-major array with reverse-mode autodiff. Copies share the same
// underlying node, like a reference-counted handle.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor();
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T fill, bool requires_grad = false);
  static Tensor scalar(T v, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  // Mutable access for leaves (parameter updates, initialization).
  std::span<T> mutable_data() { return node_->value; }
  T item() const;
  T at(std::size_t flat) const { return node_->value.at(flat); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return !node_->backward_fn; }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad();
  void zero_grad();

  // Fresh leaf holding a copy of the values, no graph history.
  Tensor detach() const;

  const NodePtr& node() const { return node_; }
  static Tensor from_node(NodePtr n);

 private:
  NodePtr node_;
};

// Accumulates d(root)/d(leaf) into every requires_grad leaf reachable from
// root. Repeated calls accumulate.
template <typename T>
void backward(const Tensor<T>& root);

// ---- dense ops -------------------------------------------------------------

// [m,k] x [k,n] -> [m,n]. Rank-1 right operand is treated as a column.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// [m,k] x [n,k]^T -> [m,n]
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise, with equal shapes or one operand holding a single element.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c);
template <typename T>
Tensor<T> exp(const Tensor<T>& a);
template <typename T>
Tensor<T> log(const Tensor<T>& a);
template <typename T>
Tensor<T> cos(const Tensor<T>& a);
template <typename T>
Tensor<T> sin(const Tensor<T>& a);
template <typename T>
Tensor<T> silu(const Tensor<T>& a);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);

// ---- transformer building blocks -------------------------------------------

// Row gather: weight [V,D], ids -> [ids.size(), D].
template <typename T>
Tensor<T> embedding(const Tensor<T>& weight, std::span<const std::int32_t> ids);

// x [N,D] normalized by its row RMS then multiplied by gain [D].
template <typename T>
Tensor<T> rms_norm(const Tensor<T>& x, const Tensor<T>& gain, T eps = T(1e-5));

// Rotates adjacent pairs (2i, 2i+1) of every head by angle position*theta_i.
// x is [B*S, H*dh] with rows ordered (batch, position); positions has S
// entries; theta is [dh/2]. Differentiable in x and theta.
template <typename T>
Tensor<T> rotary(const Tensor<T>& x, std::span<const double> positions,
                 const Tensor<T>& theta, std::size_t n_heads);

// Causal multi-head attention over q, k, v laid out [B*S, H*dh].
// Scores are q.k * score_scale before the softmax.
template <typename T>
Tensor<T> causal_attention(const Tensor<T>& q, const Tensor<T>& k,
                           const Tensor<T>& v, std::size_t batch,
                           std::size_t n_heads, T score_scale);

// Mean NLL over unmasked rows. logits [..., V]; targets/mask have one entry
// per row. Row maximum is subtracted before exponentiation.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                std::span<const std::int32_t> targets,
                                std::span<const std::uint8_t> mask);

// Per-row NLL and argmax hit, no graph. Used by evaluation.
template <typename T>
void token_nll_and_hits(const Tensor<T>& logits,
                        std::span<const std::int32_t> targets,
                        std::span<double> nll, std::span<std::uint8_t> hit);

}  // namespace clex
