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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "clex/clex_ode.hpp"
#include "clex/pe_scaling.hpp"
#include "clex/rope.hpp"
#include "test_util.hpp"

namespace clex {
namespace {

class Seeded : public ::testing::TestWithParam<std::uint64_t> {};

std::size_t pick_dim(std::mt19937_64& rng) {
  static const std::size_t dims[] = {4, 6, 8, 16, 32, 64, 128};
  return dims[rng() % 7];
}

TEST_P(Seeded, RotationInvariants) {
  std::mt19937_64 rng(GetParam());
  std::uniform_real_distribution<double> um(-3000, 3000), ut(1.0, 16.0);
  for (int c = 0; c < 50; ++c) {
    const std::size_t d = pick_dim(rng);
    const auto b = default_basis(d);
    const auto x = testing::random_vec(d, rng);
    const auto k = testing::random_vec(d, rng);
    const double m = um(rng), n = um(rng), t = ut(rng);
    const auto y = apply_rotary(x, m, b);
    double nx = 0, ny = 0;
    for (std::size_t i = 0; i < d; ++i) nx += x[i] * x[i], ny += y[i] * y[i];
    EXPECT_NEAR(std::sqrt(ny), std::sqrt(nx), 1e-12 * std::sqrt(nx));
    EXPECT_NEAR(pair_score(x, k, m, n, b), pair_score(x, k, 0.0, n - m, b), 1e-9 * d);
    const auto pi = apply_rotary(x, m / t, b);
    const auto pb = apply_rotary(x, m, scale_basis(b, alpha_pi(ScaleFactor(t), d)));
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(pi[i], pb[i], 1e-9);
  }
}

TEST_P(Seeded, AlphaProfiles) {
  std::mt19937_64 rng(GetParam());
  std::uniform_real_distribution<double> ut(1.0, 64.0);
  for (int c = 0; c < 50; ++c) {
    const std::size_t d = pick_dim(rng);
    const double t = ut(rng);
    const auto y = alpha_yarn(ScaleFactor(t), d);
    EXPECT_EQ(y.front(), 1.0);
    EXPECT_NEAR(y.back(), 1.0 / t, 1e-12 / t);
    for (std::size_t i = 1; i < y.size(); ++i) EXPECT_LE(y[i], y[i - 1]);
    for (double a : alpha_pi(ScaleFactor(t), d)) EXPECT_EQ(a, 1.0 / t);
  }
}

TEST_P(Seeded, PositionPlans) {
  std::mt19937_64 rng(GetParam());
  std::uniform_real_distribution<double> ut(1.0, 16.0);
  for (int c = 0; c < 30; ++c) {
    const std::size_t L = 1 + rng() % 200;
    const double t = ut(rng);
    for (auto mode : {PositionMode::Natural, PositionMode::UniformScaled,
                      PositionMode::RandomSampled}) {
      const auto p = position_plan(L, t, L, mode, rng());
      ASSERT_EQ(p.positions.size(), L);
      for (std::size_t i = 1; i < L; ++i) EXPECT_LT(p.positions[i - 1], p.positions[i]);
      EXPECT_GE(p.positions.front(), 1.0);
      EXPECT_LE(p.positions.back(), t * double(L) * (1 + 1e-12));
    }
  }
}

TEST_P(Seeded, CacheLookupCoversLength) {
  std::mt19937_64 rng(GetParam());
  auto net = OdeNet<double>::init(8, 1, rng);
  std::vector<double> ks{1.0};
  std::uniform_real_distribution<double> step(0.25, 3.0);
  while (ks.size() < 5) ks.push_back(ks.back() + step(rng));
  const std::size_t L = 16 + rng() % 100;
  auto cache = build_cache(net, XiForm::LogDerivative, ks, default_basis(8), L);
  CacheSession<double> s(cache, net, XiForm::LogDerivative, default_basis(8));
  for (int c = 0; c < 40; ++c) {
    const std::size_t len = 1 + rng() % (20 * L);
    const auto r = s.lookup(len);
    EXPECT_GE(r.t * double(L), double(len) * (1 - 1e-12));
    if (!r.on_demand) {
      auto it = cache.entries().find(r.t);
      ASSERT_NE(it, cache.entries().end());
      if (it != cache.entries().begin()) EXPECT_LT(std::prev(it)->first * double(L), double(len));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, Seeded, ::testing::Values(1u, 2u, 3u, 42u, 1234u));

}  // namespace
}  // namespace clex
