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

#include "clex/tensor.hpp"

#include <cblas.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "clex/errors.hpp"

namespace clex {

namespace {

thread_local bool g_grad_enabled = true;
#ifdef NDEBUG
std::atomic<bool> g_finite_checks{false};
#else
std::atomic<bool> g_finite_checks{true};
#endif

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
void check_finite(std::span<const T> v, const char* op) {
  if (!g_finite_checks.load(std::memory_order_relaxed)) return;
  for (T x : v) {
    if (!std::isfinite(x)) {
      throw NumericalError(std::string("non-finite value produced by ") + op);
    }
  }
}

// C (M x N) = alpha * op(A) op(B) + beta * C, row-major.
void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a,
          int lda, const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb,
              beta, c, ldc);
}
void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  // OpenBLAS 0.3.20 returns wrong dgemm results for the (N, T) case on
  // SkylakeX/Cooperlake kernels; transpose B explicitly instead.
  if (!ta && tb) {
    std::vector<double> bt(std::size_t(k) * std::size_t(n));
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < k; ++p) bt[std::size_t(p) * n + j] = b[std::size_t(j) * ldb + p];
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, alpha, a, lda,
                bt.data(), n, beta, c, ldc);
    return;
  }
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb,
              beta, c, ldc);
}

template <typename T>
Tensor<T> make_op(const char* name, Shape shape, std::vector<T> value,
                  std::vector<NodePtr<T>> inputs,
                  std::function<void(detail::Node<T>&)> bw) {
  check_finite<T>(value, name);
  auto n = std::make_shared<detail::Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->seq = detail::next_seq();
  bool any = false;
  for (const auto& p : inputs) any = any || p->requires_grad;
  if (GradMode::enabled() && any) {
    n->requires_grad = true;
    n->parents = std::move(inputs);
    n->backward_fn = std::move(bw);
  }
  return Tensor<T>::from_node(std::move(n));
}

// Returns the output shape for elementwise ops with scalar broadcasting.
template <typename T>
Shape broadcast_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (a.numel() == 1 && b.numel() == 1) {
    return a.rank() >= b.rank() ? a.shape() : b.shape();
  }
  if (a.numel() == 1) return b.shape();
  if (b.numel() == 1) return a.shape();
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

template <typename T, typename F, typename DA, typename DB>
Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b,
                    F f, DA dfa, DB dfb) {
  Shape out = broadcast_shape(a, b, name);
  const std::size_t n = shape_numel(out);
  const bool sa = a.numel() == 1 && n != 1;
  const bool sb = b.numel() == 1 && n != 1;
  auto av = a.data();
  auto bv = b.data();
  std::vector<T> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(av[sa ? 0 : i], bv[sb ? 0 : i]);
  return make_op<T>(name, std::move(out), std::move(v), {a.node(), b.node()},
                    [sa, sb, dfa, dfb](detail::Node<T>& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      const std::size_t n = self.value.size();
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) {
                          pa.grad[sa ? 0 : i] +=
                              self.grad[i] *
                              dfa(pa.value[sa ? 0 : i], pb.value[sb ? 0 : i]);
                        }
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) {
                          pb.grad[sb ? 0 : i] +=
                              self.grad[i] *
                              dfb(pa.value[sa ? 0 : i], pb.value[sb ? 0 : i]);
                        }
                      }
                    });
}

// dfn(x, y) gives dy/dx from the input and the output value.
template <typename T, typename F, typename D>
Tensor<T> unary_op(const char* name, const Tensor<T>& a, F f, D dfn) {
  auto av = a.data();
  std::vector<T> v(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) v[i] = f(av[i]);
  return make_op<T>(name, a.shape(), std::move(v), {a.node()},
                    [dfn](detail::Node<T>& self) {
                      auto& p = *self.parents[0];
                      p.ensure_grad();
                      for (std::size_t i = 0; i < self.value.size(); ++i) {
                        p.grad[i] += self.grad[i] * dfn(p.value[i], self.value[i]);
                      }
                    });
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool on) { g_grad_enabled = on; }

void set_finite_checks(bool on) { g_finite_checks.store(on); }
bool finite_checks() { return g_finite_checks.load(); }

std::uint64_t detail::next_seq() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed) + 1;
}

// ---- Tensor ------------------------------------------------------------------

template <typename T>
Tensor<T>::Tensor() : Tensor(Shape{0}, {}) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  check_finite<T>(data, "tensor construction");
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
  node_->seq = detail::next_seq();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T fill, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, fill), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T v, bool requires_grad) {
  return Tensor(Shape{}, {v}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->value[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  node_->requires_grad = on;
  return *this;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::from_node(NodePtr n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

template <typename T>
void backward(const Tensor<T>& root) {
  if (root.numel() != 1) {
    throw ShapeError("backward() needs a scalar root, got shape " +
                     shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Collect the reachable graph, then replay it in reverse creation order.
  std::vector<detail::Node<T>*> order;
  std::vector<detail::Node<T>*> stack{root.node().get()};
  std::unordered_set<const detail::Node<T>*> seen;
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->seq > b->seq; });
  for (auto* n : order) {
    if (n->backward_fn) n->grad.assign(n->value.size(), T(0));
  }
  auto* r = root.node().get();
  r->ensure_grad();
  r->grad[0] += T(1);
  for (auto* n : order) {
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---- dense ops ---------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1)) {
    throw ShapeError("matmul expects a matrix times a matrix or vector, got " +
                     shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1);
  const std::size_t kb = b.dim(0);
  const std::size_t n = b.rank() == 2 ? b.dim(1) : 1;
  if (k != kb) {
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  std::vector<T> out(m * n, T(0));
  if (m && n && k) {
    gemm(false, false, int(m), int(n), int(k), T(1), a.data().data(), int(k),
         b.data().data(), int(n), T(0), out.data(), int(n));
  }
  Shape shape = b.rank() == 2 ? Shape{m, n} : Shape{m};
  return make_op<T>("matmul", std::move(shape), std::move(out),
                    {a.node(), b.node()}, [m, n, k](detail::Node<T>& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        gemm(false, true, int(m), int(k), int(n), T(1),
                             self.grad.data(), int(n), pb.value.data(), int(n),
                             T(1), pa.grad.data(), int(k));
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        gemm(true, false, int(k), int(n), int(m), T(1),
                             pa.value.data(), int(k), self.grad.data(), int(n),
                             T(1), pb.grad.data(), int(n));
                      }
                    });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_nt shape mismatch: " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()) + "^T");
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  std::vector<T> out(m * n, T(0));
  if (m && n && k) {
    gemm(false, true, int(m), int(n), int(k), T(1), a.data().data(), int(k),
         b.data().data(), int(k), T(0), out.data(), int(n));
  }
  return make_op<T>("matmul_nt", Shape{m, n}, std::move(out),
                    {a.node(), b.node()}, [m, n, k](detail::Node<T>& self) {
                      auto& pa = *self.parents[0];
                      auto& pb = *self.parents[1];
                      if (pa.requires_grad) {
                        pa.ensure_grad();
                        gemm(false, false, int(m), int(k), int(n), T(1),
                             self.grad.data(), int(n), pb.value.data(), int(k),
                             T(1), pa.grad.data(), int(k));
                      }
                      if (pb.requires_grad) {
                        pb.ensure_grad();
                        gemm(true, false, int(n), int(k), int(m), T(1),
                             self.grad.data(), int(n), pa.value.data(), int(k),
                             T(1), pb.grad.data(), int(k));
                      }
                    });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
      [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
      [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "mul", a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  return unary_op<T>(
      "scale", a, [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary_op<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  for (T x : a.data()) {
    if (!(x > T(0))) throw DomainError("log of nonpositive value");
  }
  return unary_op<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> cos(const Tensor<T>& a) {
  return unary_op<T>(
      "cos", a, [](T x) { return std::cos(x); },
      [](T x, T) { return -std::sin(x); });
}

template <typename T>
Tensor<T> sin(const Tensor<T>& a) {
  return unary_op<T>(
      "sin", a, [](T x) { return std::sin(x); },
      [](T x, T) { return std::cos(x); });
}

template <typename T>
Tensor<T> silu(const Tensor<T>& a) {
  return unary_op<T>(
      "silu", a, [](T x) { return x * sigmoid(x); },
      [](T x, T) {
        const T s = sigmoid(x);
        return s * (T(1) + x * (T(1) - s));
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (T x : a.data()) acc += x;
  return make_op<T>("sum", Shape{}, {acc}, {a.node()},
                    [](detail::Node<T>& self) {
                      auto& p = *self.parents[0];
                      p.ensure_grad();
                      for (auto& g : p.grad) g += self.grad[0];
                    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("cannot reshape " + shape_str(a.shape()) + " to " +
                     shape_str(shape));
  }
  std::vector<T> v(a.data().begin(), a.data().end());
  return make_op<T>("reshape", std::move(shape), std::move(v), {a.node()},
                    [](detail::Node<T>& self) {
                      auto& p = *self.parents[0];
                      p.ensure_grad();
                      for (std::size_t i = 0; i < p.grad.size(); ++i) {
                        p.grad[i] += self.grad[i];
                      }
                    });
}

// ---- transformer building blocks -------------------------------------------

template <typename T>
Tensor<T> embedding(const Tensor<T>& weight, std::span<const std::int32_t> ids) {
  if (weight.rank() != 2) throw ShapeError("embedding weight must be [V,D]");
  const std::size_t vocab = weight.dim(0), d = weight.dim(1);
  std::vector<T> out(ids.size() * d);
  auto w = weight.data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || std::size_t(ids[r]) >= vocab) {
      throw DomainError("token id " + std::to_string(ids[r]) +
                        " outside vocabulary of " + std::to_string(vocab));
    }
    std::copy_n(w.begin() + std::ptrdiff_t(ids[r] * d), d, out.begin() + std::ptrdiff_t(r * d));
  }
  std::vector<std::int32_t> idv(ids.begin(), ids.end());
  return make_op<T>("embedding", Shape{ids.size(), d}, std::move(out),
                    {weight.node()},
                    [idv = std::move(idv), d](detail::Node<T>& self) {
                      auto& p = *self.parents[0];
                      p.ensure_grad();
                      for (std::size_t r = 0; r < idv.size(); ++r) {
                        T* dst = p.grad.data() + std::size_t(idv[r]) * d;
                        const T* src = self.grad.data() + r * d;
                        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                      }
                    });
}

template <typename T>
Tensor<T> rms_norm(const Tensor<T>& x, const Tensor<T>& gain, T eps) {
  if (x.rank() != 2 || gain.numel() != x.dim(1)) {
    throw ShapeError("rms_norm expects x [N,D] and gain [D], got " +
                     shape_str(x.shape()) + " and " + shape_str(gain.shape()));
  }
  const std::size_t rows = x.dim(0), d = x.dim(1);
  std::vector<T> out(rows * d);
  std::vector<T> rstd(rows);
  auto xv = x.data();
  auto gv = gain.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T ms = T(0);
    for (std::size_t j = 0; j < d; ++j) ms += xr[j] * xr[j];
    ms /= T(d);
    rstd[r] = T(1) / std::sqrt(ms + eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xr[j] * rstd[r] * gv[j];
  }
  return make_op<T>(
      "rms_norm", x.shape(), std::move(out), {x.node(), gain.node()},
      [rstd = std::move(rstd), rows, d](detail::Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        if (px.requires_grad) px.ensure_grad();
        if (pg.requires_grad) pg.ensure_grad();
        std::vector<T> a(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* xr = px.value.data() + r * d;
          const T* gy = self.grad.data() + r * d;
          if (pg.requires_grad) {
            for (std::size_t j = 0; j < d; ++j) pg.grad[j] += gy[j] * xr[j] * rstd[r];
          }
          if (px.requires_grad) {
            T dot = T(0);
            for (std::size_t j = 0; j < d; ++j) {
              a[j] = gy[j] * pg.value[j];
              dot += a[j] * xr[j] * rstd[r];
            }
            dot /= T(d);
            T* gx = px.grad.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) {
              gx[j] += rstd[r] * (a[j] - xr[j] * rstd[r] * dot);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> rotary(const Tensor<T>& x, std::span<const double> positions,
                 const Tensor<T>& theta, std::size_t n_heads) {
  const std::size_t half = theta.numel();
  const std::size_t seq = positions.size();
  if (x.rank() != 2 || n_heads == 0 || x.dim(1) != n_heads * 2 * half) {
    throw ShapeError("rotary: x " + shape_str(x.shape()) + " does not hold " +
                     std::to_string(n_heads) + " heads of dim " +
                     std::to_string(2 * half));
  }
  if (seq == 0 || x.dim(0) % seq != 0) {
    throw ShapeError("rotary: " + std::to_string(x.dim(0)) +
                     " rows are not a whole number of sequences of length " +
                     std::to_string(seq));
  }
  const std::size_t rows = x.dim(0), width = x.dim(1);
  // Angles in double so large positions keep their precision in 32-bit runs.
  std::vector<T> cs(seq * half), sn(seq * half);
  auto th = theta.data();
  for (std::size_t s = 0; s < seq; ++s) {
    for (std::size_t i = 0; i < half; ++i) {
      const double ang = positions[s] * double(th[i]);
      cs[s * half + i] = T(std::cos(ang));
      sn[s * half + i] = T(std::sin(ang));
    }
  }
  std::vector<T> out(rows * width);
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t s = r % seq;
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = r * width + h * 2 * half;
      for (std::size_t i = 0; i < half; ++i) {
        const T c = cs[s * half + i], sv = sn[s * half + i];
        const T x0 = xv[off + 2 * i], x1 = xv[off + 2 * i + 1];
        out[off + 2 * i] = x0 * c - x1 * sv;
        out[off + 2 * i + 1] = x0 * sv + x1 * c;
      }
    }
  }
  std::vector<double> pos(positions.begin(), positions.end());
  return make_op<T>(
      "rotary", x.shape(), std::move(out), {x.node(), theta.node()},
      [cs = std::move(cs), sn = std::move(sn), pos = std::move(pos), half, seq,
       rows, width, n_heads](detail::Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pt = *self.parents[1];
        if (px.requires_grad) px.ensure_grad();
        std::vector<double> dtheta(half, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t s = r % seq;
          for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t off = r * width + h * 2 * half;
            for (std::size_t i = 0; i < half; ++i) {
              const T c = cs[s * half + i], sv = sn[s * half + i];
              const T g0 = self.grad[off + 2 * i], g1 = self.grad[off + 2 * i + 1];
              if (px.requires_grad) {
                px.grad[off + 2 * i] += g0 * c + g1 * sv;
                px.grad[off + 2 * i + 1] += -g0 * sv + g1 * c;
              }
              if (pt.requires_grad) {
                const T y0 = self.value[off + 2 * i], y1 = self.value[off + 2 * i + 1];
                dtheta[i] += pos[s] * double(g1 * y0 - g0 * y1);
              }
            }
          }
        }
        if (pt.requires_grad) {
          pt.ensure_grad();
          for (std::size_t i = 0; i < half; ++i) pt.grad[i] += T(dtheta[i]);
        }
      });
}

template <typename T>
Tensor<T> causal_attention(const Tensor<T>& q, const Tensor<T>& k,
                           const Tensor<T>& v, std::size_t batch,
                           std::size_t n_heads, T score_scale) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.rank() != 2) {
    throw ShapeError("causal_attention: q, k, v must share a [B*S, H*dh] shape");
  }
  if (batch == 0 || q.dim(0) % batch != 0 || n_heads == 0 ||
      q.dim(1) % n_heads != 0) {
    throw ShapeError("causal_attention: shape " + shape_str(q.shape()) +
                     " incompatible with batch/heads");
  }
  const std::size_t seq = q.dim(0) / batch;
  const std::size_t width = q.dim(1);
  const std::size_t dh = width / n_heads;
  const bool keep = GradMode::enabled() &&
                    (q.requires_grad() || k.requires_grad() || v.requires_grad());
  std::vector<T> out(q.numel(), T(0));
  std::vector<T> probs(keep ? batch * n_heads * seq * seq : 0);
  std::vector<T> scratch(keep ? 0 : seq * seq);
  auto qv = q.data(), kv = k.data(), vv = v.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t base = b * seq * width + h * dh;
      T* p = keep ? probs.data() + (b * n_heads + h) * seq * seq : scratch.data();
      gemm(false, true, int(seq), int(seq), int(dh), score_scale,
           qv.data() + base, int(width), kv.data() + base, int(width), T(0), p,
           int(seq));
      for (std::size_t i = 0; i < seq; ++i) {
        T* row = p + i * seq;
        T mx = row[0];
        for (std::size_t j = 1; j <= i; ++j) mx = std::max(mx, row[j]);
        T z = T(0);
        for (std::size_t j = 0; j <= i; ++j) {
          row[j] = std::exp(row[j] - mx);
          z += row[j];
        }
        const T inv = T(1) / z;
        for (std::size_t j = 0; j <= i; ++j) row[j] *= inv;
        for (std::size_t j = i + 1; j < seq; ++j) row[j] = T(0);
      }
      gemm(false, false, int(seq), int(dh), int(seq), T(1), p, int(seq),
           vv.data() + base, int(width), T(0), out.data() + base, int(width));
    }
  }
  return make_op<T>(
      "causal_attention", q.shape(), std::move(out),
      {q.node(), k.node(), v.node()},
      [probs = std::move(probs), batch, n_heads, seq, width, dh,
       score_scale](detail::Node<T>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        pq.ensure_grad();
        pk.ensure_grad();
        pv.ensure_grad();
        std::vector<T> dp(seq * seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t base = b * seq * width + h * dh;
            const T* p = probs.data() + (b * n_heads + h) * seq * seq;
            const T* go = self.grad.data() + base;
            gemm(true, false, int(seq), int(dh), int(seq), T(1), p, int(seq), go,
                 int(width), T(1), pv.grad.data() + base, int(width));
            gemm(false, true, int(seq), int(seq), int(dh), T(1), go, int(width),
                 pv.value.data() + base, int(width), T(0), dp.data(), int(seq));
            for (std::size_t i = 0; i < seq; ++i) {
              const T* pr = p + i * seq;
              T* dr = dp.data() + i * seq;
              T dot = T(0);
              for (std::size_t j = 0; j <= i; ++j) dot += pr[j] * dr[j];
              for (std::size_t j = 0; j <= i; ++j) dr[j] = pr[j] * (dr[j] - dot);
              for (std::size_t j = i + 1; j < seq; ++j) dr[j] = T(0);
            }
            gemm(false, false, int(seq), int(dh), int(seq), score_scale,
                 dp.data(), int(seq), pk.value.data() + base, int(width), T(1),
                 pq.grad.data() + base, int(width));
            gemm(true, false, int(seq), int(dh), int(seq), score_scale,
                 dp.data(), int(seq), pq.value.data() + base, int(width), T(1),
                 pk.grad.data() + base, int(width));
          }
        }
      });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                std::span<const std::int32_t> targets,
                                std::span<const std::uint8_t> mask) {
  if (logits.rank() == 0) throw ShapeError("softmax_cross_entropy: scalar logits");
  const std::size_t vocab = logits.shape().back();
  const std::size_t rows = vocab ? logits.numel() / vocab : 0;
  if (targets.size() != rows || (!mask.empty() && mask.size() != rows)) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(rows) +
                     " rows but " + std::to_string(targets.size()) +
                     " targets / " + std::to_string(mask.size()) + " mask entries");
  }
  auto lv = logits.data();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    if (targets[r] < 0 || std::size_t(targets[r]) >= vocab) {
      throw DomainError("target " + std::to_string(targets[r]) +
                        " outside vocabulary of " + std::to_string(vocab));
    }
    const T* row = lv.data() + r * vocab;
    const T mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) z += std::exp(double(row[j] - mx));
    total += std::log(z) - double(row[targets[r]] - mx);
    ++count;
  }
  if (count == 0) throw ShapeError("softmax_cross_entropy: every row is masked");
  std::vector<std::int32_t> tg(targets.begin(), targets.end());
  std::vector<std::uint8_t> mk(mask.begin(), mask.end());
  return make_op<T>(
      "softmax_cross_entropy", Shape{}, {T(total / double(count))},
      {logits.node()},
      [tg = std::move(tg), mk = std::move(mk), rows, vocab,
       count](detail::Node<T>& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        const T g = self.grad[0] / T(count);
        for (std::size_t r = 0; r < rows; ++r) {
          if (!mk.empty() && !mk[r]) continue;
          const T* row = p.value.data() + r * vocab;
          T* gr = p.grad.data() + r * vocab;
          const T mx = *std::max_element(row, row + vocab);
          T z = T(0);
          for (std::size_t j = 0; j < vocab; ++j) z += std::exp(row[j] - mx);
          for (std::size_t j = 0; j < vocab; ++j) {
            gr[j] += g * std::exp(row[j] - mx) / z;
          }
          gr[tg[r]] -= g;
        }
      });
}

template <typename T>
void token_nll_and_hits(const Tensor<T>& logits,
                        std::span<const std::int32_t> targets,
                        std::span<double> nll, std::span<std::uint8_t> hit) {
  const std::size_t vocab = logits.shape().back();
  const std::size_t rows = logits.numel() / vocab;
  if (targets.size() != rows || nll.size() != rows || hit.size() != rows) {
    throw ShapeError("token_nll_and_hits: row count mismatch");
  }
  auto lv = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || std::size_t(targets[r]) >= vocab) {
      throw DomainError("target outside vocabulary");
    }
    const T* row = lv.data() + r * vocab;
    const T* best = std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) z += std::exp(double(row[j] - *best));
    nll[r] = std::log(z) - double(row[targets[r]] - *best);
    hit[r] = std::size_t(best - row) == std::size_t(targets[r]) ? 1 : 0;
  }
}

#define CLEX_INSTANTIATE(T)                                                     \
  template class Tensor<T>;                                                     \
  template void backward<T>(const Tensor<T>&);                                  \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> matmul_nt<T>(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                             \
  template Tensor<T> exp<T>(const Tensor<T>&);                                  \
  template Tensor<T> log<T>(const Tensor<T>&);                                  \
  template Tensor<T> cos<T>(const Tensor<T>&);                                  \
  template Tensor<T> sin<T>(const Tensor<T>&);                                  \
  template Tensor<T> silu<T>(const Tensor<T>&);                                 \
  template Tensor<T> sum<T>(const Tensor<T>&);                                  \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                       \
  template Tensor<T> embedding<T>(const Tensor<T>&, std::span<const std::int32_t>); \
  template Tensor<T> rms_norm<T>(const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> rotary<T>(const Tensor<T>&, std::span<const double>,       \
                               const Tensor<T>&, std::size_t);                  \
  template Tensor<T> causal_attention<T>(const Tensor<T>&, const Tensor<T>&,    \
                                         const Tensor<T>&, std::size_t,         \
                                         std::size_t, T);                       \
  template Tensor<T> softmax_cross_entropy<T>(const Tensor<T>&,                 \
                                              std::span<const std::int32_t>,    \
                                              std::span<const std::uint8_t>);   \
  template void token_nll_and_hits<T>(const Tensor<T>&,                         \
                                      std::span<const std::int32_t>,            \
                                      std::span<double>, std::span<std::uint8_t>);

CLEX_INSTANTIATE(float)
CLEX_INSTANTIATE(double)

#undef CLEX_INSTANTIATE

}  // namespace clex
