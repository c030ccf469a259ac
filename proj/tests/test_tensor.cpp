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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "clex/errors.hpp"
#include "clex/optim.hpp"
#include "clex/tensor.hpp"
#include "test_util.hpp"

namespace clex {
namespace {

using testing::grad_check;
using testing::random_tensor;
using Td = Tensor<double>;

TEST(Matmul, IdentityAndDot) {
  Td eye({2, 2}, {1, 0, 0, 1});
  Td col({2, 1}, {3, 4});
  auto y = matmul(eye, col);
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(y.at(0), 3.0);
  EXPECT_EQ(y.at(1), 4.0);

  Td row({1, 2}, {1, 2});
  EXPECT_EQ(matmul(row, col).item(), 11.0);
}

TEST(Matmul, VectorRightOperand) {
  Td a({2, 3}, {1, 2, 3, 4, 5, 6});
  Td v({3}, {1, 0, -1});
  auto y = matmul(a, v);
  EXPECT_EQ(y.shape(), (Shape{2}));
  EXPECT_EQ(y.at(0), -2.0);
  EXPECT_EQ(y.at(1), -2.0);
}

TEST(Matmul, ShapeMismatchThrows) {
  Td a({2, 3}, std::vector<double>(6, 1.0));
  Td b({2, 3}, std::vector<double>(6, 1.0));
  EXPECT_THROW(matmul(a, b), ShapeError);
  EXPECT_NO_THROW(matmul_nt(a, b));
}

TEST(Matmul, GradOfSumIsOnesTimesBTransposed) {
  std::mt19937_64 rng(1);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 2}, rng);
  backward(sum(matmul(a, b)));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double expect = b.at(k * 2) + b.at(k * 2 + 1);
      EXPECT_NEAR(a.grad()[i * 4 + k], expect, 1e-14);
    }
  }
  EXPECT_LT(grad_check({a, b}, [&] { return sum(matmul(a, b)); }), 1e-8);
}

TEST(Matmul, NtMatchesExplicitTranspose) {
  std::mt19937_64 rng(2);
  auto a = random_tensor({3, 5}, rng);
  auto b = random_tensor({4, 5}, rng);
  std::vector<double> bt(20);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) bt[j * 4 + i] = b.at(i * 5 + j);
  auto ref = matmul(a, Td({5, 4}, bt));
  auto got = matmul_nt(a, b);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(got.at(i), ref.at(i), 1e-14);
  Td w({3, 4}, testing::random_vec(12, rng));
  EXPECT_LT(grad_check({a, b}, [&] { return sum(mul(matmul_nt(a, b), w)); }), 1e-7);
}

TEST(Matmul, MatchesNaiveLoopsAcrossShapes) {
  std::mt19937_64 rng(10);
  for (std::size_t m : {1u, 3u, 16u, 33u}) {
    for (std::size_t n : {1u, 8u, 256u}) {
      for (std::size_t k : {1u, 16u, 40u}) {
        auto a = random_tensor({m, k}, rng, false);
        auto b = random_tensor({n, k}, rng, false);
        auto c = random_tensor({k, n}, rng, false);
        auto nt = matmul_nt(a, b);
        auto nn = matmul(a, c);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            double rnt = 0.0, rnn = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
              rnt += a.at(i * k + p) * b.at(j * k + p);
              rnn += a.at(i * k + p) * c.at(p * n + j);
            }
            ASSERT_NEAR(nt.at(i * n + j), rnt, 1e-12) << m << "x" << n << "x" << k;
            ASSERT_NEAR(nn.at(i * n + j), rnn, 1e-12) << m << "x" << n << "x" << k;
          }
        }
      }
    }
  }
}

TEST(Elementwise, Values) {
  Td zero = Td::scalar(0.0);
  EXPECT_EQ(silu(zero).item(), 0.0);
  Td x({3}, {0.5, 1.0, 7.25});
  auto back = exp(log(x));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.at(i), x.at(i), 1e-15);
  EXPECT_THROW(log(Td({1}, {0.0})), DomainError);
}

TEST(Elementwise, SiluDerivativeAtOne) {
  Td x = Td::scalar(1.0, true);
  backward(silu(x));
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(x.grad()[0], s * (1.0 + (1.0 - s)), 1e-15);
}

TEST(Elementwise, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  auto a = random_tensor({2, 3}, rng);
  auto b = random_tensor({2, 3}, rng);
  auto pos = random_tensor({2, 3}, rng, true, 0.5, 2.0);
  auto c = random_tensor({}, rng);
  EXPECT_LT(grad_check({a, b}, [&] { return sum(add(a, mul(b, a))); }), 1e-7);
  EXPECT_LT(grad_check({a, b}, [&] { return sum(mul(sub(a, b), b)); }), 1e-7);
  EXPECT_LT(grad_check({a, c}, [&] { return sum(mul(add(a, c), a)); }), 1e-7);
  EXPECT_LT(grad_check({a}, [&] { return sum(scale(mul(a, a), 2.5)); }), 1e-7);
  EXPECT_LT(grad_check({a}, [&] { return sum(mul(exp(a), a)); }), 1e-7);
  EXPECT_LT(grad_check({pos}, [&] { return sum(mul(log(pos), pos)); }), 1e-7);
  EXPECT_LT(grad_check({a}, [&] { return sum(mul(cos(a), sin(a))); }), 1e-7);
  EXPECT_LT(grad_check({a}, [&] { return sum(mul(silu(a), a)); }), 1e-7);
  EXPECT_LT(grad_check({a}, [&] { return sum(mul(reshape(a, {3, 2}), reshape(a, {3, 2}))); }),
            1e-7);
}

TEST(Elementwise, IncompatibleShapesThrow) {
  Td a({2, 3}, std::vector<double>(6, 1.0));
  Td b({3, 2}, std::vector<double>(6, 1.0));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(mul(a, Td({2}, {1, 2})), ShapeError);
  EXPECT_THROW(reshape(a, {4}), ShapeError);
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  Td logits({2, 256}, std::vector<double>(512, 0.3));
  std::vector<std::int32_t> t{5, 200};
  EXPECT_NEAR(softmax_cross_entropy(logits, std::span<const std::int32_t>(t), {}).item(),
              std::log(256.0), 1e-12);
}

TEST(SoftmaxCrossEntropy, SaturatedCorrect) {
  std::vector<double> v(10, 0.0);
  v[3] = 1000.0;
  std::vector<std::int32_t> t{3};
  EXPECT_NEAR(softmax_cross_entropy(Td({1, 10}, v), std::span<const std::int32_t>(t), {}).item(),
              0.0, 1e-12);
}

TEST(SoftmaxCrossEntropy, MatchesBruteForceWithMask) {
  std::mt19937_64 rng(4);
  auto logits = random_tensor({2, 3, 5}, rng, true, -3.0, 3.0);
  std::vector<std::int32_t> t{0, 4, 2, 1, 3, 3};
  std::vector<std::uint8_t> m{1, 1, 0, 1, 1, 1};
  double total = 0.0;
  for (std::size_t r = 0; r < 6; ++r) {
    if (!m[r]) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < 5; ++j) z += std::exp(logits.at(r * 5 + j));
    total += std::log(z) - logits.at(r * 5 + t[r]);
  }
  auto loss = [&] {
    return softmax_cross_entropy(logits, std::span<const std::int32_t>(t),
                                 std::span<const std::uint8_t>(m));
  };
  EXPECT_NEAR(loss().item(), total / 5.0, 1e-10);
  EXPECT_LT(grad_check({logits}, loss), 1e-7);
}

TEST(SoftmaxCrossEntropy, Errors) {
  Td logits({2, 4}, std::vector<double>(8, 0.0));
  std::vector<std::int32_t> bad{0, 4};
  EXPECT_THROW(softmax_cross_entropy(logits, std::span<const std::int32_t>(bad), {}),
               DomainError);
  std::vector<std::int32_t> ok{0, 1};
  std::vector<std::uint8_t> none{0, 0};
  EXPECT_THROW(softmax_cross_entropy(logits, std::span<const std::int32_t>(ok),
                                     std::span<const std::uint8_t>(none)),
               ShapeError);
}

TEST(Backward, LinearAndSquare) {
  Td x = Td::scalar(2.0, true);
  backward(scale(x, 3.0));
  EXPECT_EQ(x.grad()[0], 3.0);

  Td y = Td::scalar(5.0, true);
  backward(mul(y, y));
  EXPECT_EQ(y.grad()[0], 10.0);
}

TEST(Backward, RepeatedCallsAccumulate) {
  Td x = Td::scalar(2.0, true);
  auto y = mul(x, x);
  backward(y);
  backward(y);
  EXPECT_EQ(x.grad()[0], 8.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Backward, NonScalarRootThrows) {
  Td x({2}, {1, 2}, true);
  EXPECT_THROW(backward(scale(x, 2.0)), ShapeError);
}

TEST(Backward, NoGradProducesSameValuesWithoutGraph) {
  std::mt19937_64 rng(5);
  auto a = random_tensor({3, 3}, rng);
  auto with = silu(matmul(a, a));
  Td without;
  {
    NoGradGuard ng;
    without = silu(matmul(a, a));
  }
  EXPECT_FALSE(without.requires_grad());
  EXPECT_TRUE(with.requires_grad());
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(with.at(i), without.at(i));
}

TEST(Blocks, RmsNormAndEmbeddingGradients) {
  std::mt19937_64 rng(6);
  auto x = random_tensor({3, 4}, rng);
  auto g = random_tensor({4}, rng, true, 0.5, 1.5);
  auto w = random_tensor({3, 4}, rng, false);
  EXPECT_LT(grad_check({x, g}, [&] { return sum(mul(rms_norm(x, g), w)); }), 1e-6);

  auto emb = random_tensor({5, 3}, rng);
  std::vector<std::int32_t> ids{4, 0, 4};
  auto w2 = random_tensor({3, 3}, rng, false);
  EXPECT_LT(grad_check({emb},
                       [&] {
                         return sum(mul(embedding(emb, std::span<const std::int32_t>(ids)), w2));
                       }),
            1e-8);
  std::vector<std::int32_t> bad{5};
  EXPECT_THROW(embedding(emb, std::span<const std::int32_t>(bad)), DomainError);
}

TEST(Blocks, RotaryGradientsInXAndTheta) {
  std::mt19937_64 rng(7);
  auto x = random_tensor({2 * 3, 2 * 4}, rng);
  auto theta = random_tensor({2}, rng, true, 0.05, 1.0);
  std::vector<double> pos{1.0, 2.5, 7.0};
  auto w = random_tensor({6, 8}, rng, false);
  EXPECT_LT(grad_check({x, theta},
                       [&] { return sum(mul(rotary(x, std::span<const double>(pos), theta, 2), w)); }),
            1e-6);
}

TEST(Blocks, CausalAttentionGradients) {
  std::mt19937_64 rng(8);
  const std::size_t B = 2, S = 3, H = 2, dh = 2;
  auto q = random_tensor({B * S, H * dh}, rng);
  auto k = random_tensor({B * S, H * dh}, rng);
  auto v = random_tensor({B * S, H * dh}, rng);
  auto w = random_tensor({B * S, H * dh}, rng, false);
  EXPECT_LT(grad_check({q, k, v},
                       [&] { return sum(mul(causal_attention(q, k, v, B, H, 0.7), w)); }),
            1e-6);
}

TEST(Blocks, AttentionFirstRowCopiesFirstValue) {
  std::mt19937_64 rng(9);
  auto q = random_tensor({3, 4}, rng, false);
  auto k = random_tensor({3, 4}, rng, false);
  auto v = random_tensor({3, 4}, rng, false);
  auto out = causal_attention(q, k, v, 1, 2, 0.5);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.at(j), v.at(j), 1e-15);
}

TEST(Adam, ZeroGradLeavesParamsAndDecaysMoments) {
  std::vector<Td> p{Td({2}, {1.0, -2.0}, true)};
  AdamState<double> st;
  AdamConfig cfg;
  p[0].mutable_grad()[0] = 0.5;
  adam_step(std::span<Td>(p), st, cfg);
  const double m0 = st.m[0][0], v0 = st.v[0][0];
  const double after_first = p[0].at(0);
  p[0].zero_grad();
  adam_step(std::span<Td>(p), st, cfg);
  EXPECT_NEAR(st.m[0][0], cfg.beta1 * m0, 1e-15);
  EXPECT_NEAR(st.v[0][0], cfg.beta2 * v0, 1e-15);
  EXPECT_EQ(p[0].at(1), -2.0);
  EXPECT_LT(p[0].at(0), after_first);
}

TEST(Adam, FirstStepIsSignLike) {
  std::vector<Td> p{Td({3}, {0.0, 0.0, 0.0}, true)};
  auto g = p[0].mutable_grad();
  g[0] = 3.0;
  g[1] = -0.01;
  g[2] = 0.0;
  AdamState<double> st;
  AdamConfig cfg;
  cfg.lr = 0.1;
  adam_step(std::span<Td>(p), st, cfg);
  // m_hat = g, v_hat = g^2 after bias correction.
  EXPECT_NEAR(p[0].at(0), -0.1 * 3.0 / (3.0 + 1e-8), 1e-12);
  EXPECT_NEAR(p[0].at(1), 0.1 * 0.01 / (0.01 + 1e-8), 1e-12);
  EXPECT_EQ(p[0].at(2), 0.0);
}

TEST(Adam, ClipGradNorm) {
  std::vector<Td> p{Td({2}, {0.0, 0.0}, true)};
  p[0].mutable_grad()[0] = 3.0;
  p[0].mutable_grad()[1] = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(std::span<Td>(p), 1.0), 5.0);
  EXPECT_NEAR(p[0].grad()[0], 0.6, 1e-12);
  EXPECT_NEAR(p[0].grad()[1], 0.8, 1e-12);
}

}  // namespace
}  // namespace clex
