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
#include <numbers>
#include <random>

#include "clex/errors.hpp"
#include "clex/rope.hpp"
#include "test_util.hpp"

namespace clex {
namespace {

// Dense block-diagonal rotation applied as a full d x d matrix product.
std::vector<double> dense_rotate(const std::vector<double>& x, double m,
                                 std::span<const double> theta) {
  const std::size_t d = x.size();
  std::vector<double> R(d * d, 0.0);
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double c = std::cos(m * theta[i]), s = std::sin(m * theta[i]);
    R[(2 * i) * d + 2 * i] = c;
    R[(2 * i) * d + 2 * i + 1] = -s;
    R[(2 * i + 1) * d + 2 * i] = s;
    R[(2 * i + 1) * d + 2 * i + 1] = c;
  }
  std::vector<double> y(d, 0.0);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) y[r] += R[r * d + c] * x[c];
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(DefaultBasis, KnownValues) {
  EXPECT_EQ(default_basis(2).theta().size(), 1u);
  EXPECT_EQ(default_basis(2)[0], 1.0);
  auto b4 = default_basis(4);
  EXPECT_DOUBLE_EQ(b4[0], 1.0);
  EXPECT_NEAR(b4[1], 0.01, 1e-17);
  auto b8 = default_basis(8);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(b8[i], std::pow(10.0, -double(i)), 1e-16);
  EXPECT_EQ(b8.head_dim(), 8u);
}

TEST(DefaultBasis, StrictlyDecreasing) {
  auto b = default_basis(128);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_LT(b[i], b[i - 1]);
}

TEST(DefaultBasis, Errors) {
  EXPECT_THROW(default_basis(3), DomainError);
  EXPECT_THROW(default_basis(0), DomainError);
  EXPECT_THROW(default_basis(4, 1.0), DomainError);
  EXPECT_THROW(FrequencyBasis({1.0, 0.0}), DomainError);
  EXPECT_THROW(FrequencyBasis({}), DomainError);
}

TEST(LogBasis, RoundTrip) {
  auto b = default_basis(16);
  auto back = LogBasis::of(b).exp();
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(back[i], b[i], 1e-15 * b[i]);
}

TEST(ApplyRotary, ZeroPositionIsIdentity) {
  std::vector<double> x{0.3, -1.2, 2.0, 0.7};
  EXPECT_EQ(apply_rotary(x, 0.0, default_basis(4)), x);
}

TEST(ApplyRotary, QuarterTurn) {
  std::vector<double> x{1.0, 0.0};
  auto y = apply_rotary(x, std::numbers::pi / 2, FrequencyBasis({1.0}));
  EXPECT_NEAR(y[0], 0.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0, 1e-15);
}

TEST(ApplyRotary, MatchesDenseMatrix) {
  std::mt19937_64 rng(11);
  FrequencyBasis b({1.0, 0.01});
  auto x = testing::random_vec(4, rng);
  auto y = apply_rotary(x, 2.0, b);
  auto ref = dense_rotate(x, 2.0, b.theta());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

TEST(ApplyRotary, LengthMismatchThrows) {
  std::vector<double> x(6, 1.0);
  EXPECT_THROW(apply_rotary(x, 1.0, default_basis(4)), ShapeError);
}

TEST(PairScore, Examples) {
  std::mt19937_64 rng(12);
  auto b = default_basis(8);
  auto q = testing::random_vec(8, rng);
  auto k = testing::random_vec(8, rng);
  EXPECT_NEAR(pair_score(q, k, 3.5, 3.5, b), dot(q, k), 1e-12);

  std::vector<double> e{1.0, 0.0};
  EXPECT_NEAR(pair_score(e, e, 3.0, 5.0, FrequencyBasis({1.0})), std::cos(2.0), 1e-15);

  const double m = 17.0, n = 4.25;
  auto kr = dense_rotate(k, n - m, b.theta());
  EXPECT_NEAR(pair_score(q, k, m, n, b), dot(q, kr), 1e-12);
}

TEST(RotaryTensor, MatchesVectorForm) {
  std::mt19937_64 rng(13);
  auto b = default_basis(4);
  const std::size_t S = 3, H = 2;
  auto xs = testing::random_vec(S * H * 4, rng);
  Tensor<double> x({S, H * 4}, xs);
  std::vector<double> pos{1.0, 2.0, 9.5};
  auto y = rotary(x, std::span<const double>(pos), b.as_tensor<double>(), H);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t h = 0; h < H; ++h) {
      std::vector<double> head(xs.begin() + s * 8 + h * 4, xs.begin() + s * 8 + h * 4 + 4);
      auto ref = apply_rotary(head, pos[s], b);
      for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(y.at(s * 8 + h * 4 + j), ref[j], 1e-14);
    }
  }
}

}  // namespace
}  // namespace clex
