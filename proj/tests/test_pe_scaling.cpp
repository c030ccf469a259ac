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
#include "clex/pe_scaling.hpp"
#include "test_util.hpp"

namespace clex {
namespace {

TEST(ScaleFactor, RejectsBelowOne) {
  EXPECT_THROW(ScaleFactor(0.99), DomainError);
  EXPECT_THROW(ScaleFactor(std::nan("")), DomainError);
  EXPECT_EQ(ScaleFactor(1.0).value(), 1.0);
}

TEST(AlphaPi, Values) {
  for (double a : alpha_pi(ScaleFactor(1.0), 8)) EXPECT_EQ(a, 1.0);
  EXPECT_EQ(alpha_pi(ScaleFactor(4.0), 4), (std::vector<double>{0.25, 0.25}));
  auto a = alpha_pi(ScaleFactor(16.0), 128);
  EXPECT_EQ(a.size(), 64u);
  for (double v : a) EXPECT_EQ(v, 0.0625);
}

TEST(AlphaYarn, Values) {
  for (double a : alpha_yarn(ScaleFactor(1.0), 64)) EXPECT_EQ(a, 1.0);
  auto a4 = alpha_yarn(ScaleFactor(4.0), 4);
  EXPECT_DOUBLE_EQ(a4[0], 1.0);
  EXPECT_DOUBLE_EQ(a4[1], 0.25);
  auto a8 = alpha_yarn(ScaleFactor(2.0), 8);
  EXPECT_DOUBLE_EQ(a8[0], 1.0);
  EXPECT_NEAR(a8[1], std::pow(2.0, -1.0 / 3.0), 1e-15);
  EXPECT_NEAR(a8[2], std::pow(2.0, -2.0 / 3.0), 1e-15);
  EXPECT_NEAR(a8[3], 0.5, 1e-15);
  EXPECT_THROW(alpha_yarn(ScaleFactor(2.0), 2), DomainError);
}

TEST(AlphaYarn, MonotoneInIndexAndT) {
  for (double t : {1.5, 3.0, 9.0}) {
    auto a = alpha_yarn(ScaleFactor(t), 32);
    auto b = alpha_yarn(ScaleFactor(t * 1.7), 32);
    for (std::size_t i = 1; i < a.size(); ++i) {
      EXPECT_LE(a[i], a[i - 1]);
      EXPECT_LT(b[i], a[i]);
    }
  }
}

TEST(AlphaCodeLlama, Values) {
  auto a = alpha_codellama(4);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_NEAR(a[1], 0.1, 1e-16);
  for (std::size_t d : {8u, 64u, 128u}) {
    auto scaled = scale_basis(default_basis(d), alpha_codellama(d));
    auto ref = default_basis(d, 1e6);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(scaled[i], ref[i], 1e-12 * ref[i]);
  }
}

TEST(AlphaProfile, DispatchesAndIsOneAtUnity) {
  for (auto kind : {ProfileKind::Identity, ProfileKind::PI, ProfileKind::Yarn}) {
    AlphaProfile p{kind, 16};
    for (double a : p(ScaleFactor(1.0))) EXPECT_EQ(a, 1.0) << profile_name(kind);
  }
  AlphaProfile cl{ProfileKind::CodeLlama, 16};
  EXPECT_EQ(cl(ScaleFactor(1.0)), cl(ScaleFactor(8.0)));
  EXPECT_EQ(cl(ScaleFactor(3.0)), alpha_codellama(16));
}

TEST(ScaleBasis, Elementwise) {
  FrequencyBasis b({1.0, 0.01});
  std::vector<double> ones{1.0, 1.0};
  EXPECT_EQ(scale_basis(b, ones).theta()[1], 0.01);
  std::vector<double> a{1.0, 0.25};
  auto s = scale_basis(b, a);
  EXPECT_DOUBLE_EQ(s[1], 0.0025);
  auto z = LogBasis::of(s).z;
  auto z1 = LogBasis::of(b).z;
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(z[i], z1[i] + std::log(a[i]), 1e-15);
  std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(scale_basis(b, bad), DomainError);
  std::vector<double> shortv{1.0};
  EXPECT_THROW(scale_basis(b, shortv), ShapeError);
}

TEST(ScalePositions, DividesByT) {
  std::vector<double> p{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_EQ(scale_positions(p, ScaleFactor(1.0)), p);
  auto s = scale_positions(p, ScaleFactor(4.0));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(s[i], 0.25 * double(i + 1));
}

TEST(ScalePositions, IndexScalingEqualsBasisScaling) {
  std::mt19937_64 rng(21);
  auto b = default_basis(16);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = 1.0 + 15.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double m = std::uniform_real_distribution<double>(0, 4096)(rng);
    auto x = testing::random_vec(16, rng);
    std::vector<double> pos{m};
    auto lhs = apply_rotary(x, scale_positions(pos, ScaleFactor(t))[0], b);
    auto rhs = apply_rotary(x, m, scale_basis(b, alpha_pi(ScaleFactor(t), 16)));
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-9);
  }
}

TEST(ChainStep, Examples) {
  auto z = LogBasis::of(default_basis(8));
  auto a = alpha_yarn(ScaleFactor(3.0), 8);
  EXPECT_EQ(chain_step(z, a, a).z, z.z);

  auto a1 = alpha_yarn(ScaleFactor(1.0), 8);
  auto a2 = alpha_yarn(ScaleFactor(2.0), 8);
  auto a4 = alpha_yarn(ScaleFactor(4.0), 8);
  auto chained = chain_step(chain_step(z, a1, a2), a2, a4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(chained.z[i], z.z[i] + std::log(a4[i]), 1e-14);

  auto pi = chain_step(z, alpha_pi(ScaleFactor(1.0), 8), alpha_pi(ScaleFactor(3.0), 8));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(pi.z[i], z.z[i] - std::log(3.0), 1e-14);

  std::vector<double> bad{1.0, 1.0, -1.0, 1.0};
  EXPECT_THROW(chain_step(z, a, bad), DomainError);
}

}  // namespace
}  // namespace clex
