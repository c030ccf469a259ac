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
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clex/clex_ode.hpp"
#include "clex/model.hpp"
#include "clex/optim.hpp"

namespace clex {

// Byte-level token stream with a train/validation split at train_end.
struct Corpus {
  std::vector<std::uint8_t> bytes;
  std::size_t train_end = 0;

  std::span<const std::uint8_t> train() const {
    return std::span<const std::uint8_t>(bytes).first(train_end);
  }
  std::span<const std::uint8_t> validation() const {
    return std::span<const std::uint8_t>(bytes).subspan(train_end);
  }
};

// First floor(n * split_fraction) bytes train, the rest validate. Throws
// InputError for a missing or empty file.
Corpus load_corpus(const std::filesystem::path& path, double split_fraction);
Corpus make_corpus(std::vector<std::uint8_t> bytes, double split_fraction);

// batch x seq_len inputs and their next-token targets, row-major.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<std::int32_t> inputs;
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> mask;
};

// Random contiguous windows of seq_len + 1 bytes from the training split.
class TrainBatcher {
 public:
  TrainBatcher(std::span<const std::uint8_t> data, std::size_t seq_len,
               std::size_t batch_size, std::uint64_t seed);
  TokenBatch next();

 private:
  std::span<const std::uint8_t> data_;
  std::size_t seq_len_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

// Start offsets of the non-overlapping seq_len windows covering data; the
// tail remainder is dropped.
std::vector<std::size_t> eval_window_offsets(std::size_t data_len, std::size_t seq_len);

// Windows at the given offsets; every position but the last predicts the
// next byte of its window.
TokenBatch eval_batch(std::span<const std::uint8_t> data,
                      std::span<const std::size_t> offsets, std::size_t seq_len);

struct TrainOptions {
  ModelConfig model;
  AdamConfig adam;
  double grad_clip = 1.0;
  std::size_t steps = 1000;
  std::size_t batch_size = 8;
  XiForm xi_form = XiForm::LogDerivative;
  int steps_per_unit = 8;
  PositionMode position_mode = PositionMode::RandomSampled;
  std::size_t log_every = 0;
};

template <typename T>
struct TrainedModel {
  TransformerParams<T> params;
  std::optional<OdeNet<T>> ode;  // present for CLEX
  XiForm xi_form = XiForm::LogDerivative;
  int steps_per_unit = 8;

  std::vector<std::pair<std::string, Tensor<T>>> named() const;
  std::vector<Tensor<T>> parameters() const;
};

template <typename T>
TrainedModel<T> init_model(const TrainOptions& opts);

// Positions, basis and attention multiplier fed to forward().
template <typename T>
struct PositionalSetup {
  std::vector<double> positions;
  Tensor<T> theta;
  double attn_scale_mult = 1.0;
  double t = 1.0;
};

// Training-time strategy for one step. rng drives t' and position sampling.
template <typename T>
PositionalSetup<T> train_setup(const TrainedModel<T>& model,
                               const TrainOptions& opts, std::mt19937_64& rng);

struct LossRecord {
  std::size_t step = 0;
  double t_prime = 1.0;
  double loss = 0.0;
};

template <typename T>
struct TrainResult {
  TrainedModel<T> model;
  std::vector<LossRecord> trace;
};

// Throws NumericalError if the loss turns non-finite.
template <typename T>
TrainResult<T> train(const TrainOptions& opts, const Corpus& corpus,
                     const std::function<void(const LossRecord&)>& on_step = {});

// Scale factor for PI/Yarn at evaluation: max(t_fixed, eval_len / base_len).
double self_extension_factor(double t_fixed, std::size_t eval_len, std::size_t base_len);

struct EvalOptions {
  std::vector<std::size_t> eval_lens{128, 256, 512, 1024};
  std::vector<double> cache_t_ks{1.0, 2.0, 4.0, 8.0};
  bool log_scaling = true;
  std::size_t eval_batch = 4;
  std::size_t max_eval_tokens = 0;  // 0 = whole validation split
  double memory_budget_mb = 2048.0;
};

struct EvalRow {
  std::string method;
  std::size_t train_len = 0;
  std::size_t eval_len = 0;
  double eval_t = 1.0;
  double attn_scale_mult = 1.0;
  double ppl = 0.0;
  double acc = 0.0;
  double nll_sum = 0.0;
  std::size_t tokens = 0;
  std::size_t windows = 0;
  std::string status = "ok";
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

// Evaluation-time strategy for one length. session is only used for CLEX.
template <typename T>
PositionalSetup<T> eval_setup(const TrainedModel<T>& model, std::size_t eval_len,
                              const EvalOptions& opts, CacheSession<T>* session);

struct WindowScore {
  double nll_sum = 0.0;
  std::size_t hits = 0;
  std::size_t tokens = 0;
};

// Scores the windows at offsets with a fixed setup, one result per window.
template <typename T>
std::vector<WindowScore> score_windows(const TrainedModel<T>& model,
                                       const PositionalSetup<T>& setup,
                                       std::span<const std::uint8_t> data,
                                       std::span<const std::size_t> offsets,
                                       std::size_t eval_len, std::size_t batch);

template <typename T>
EvalReport evaluate(const TrainedModel<T>& model, const Corpus& corpus,
                    const EvalOptions& opts);

// Trains each configuration on the shared corpus, evaluates it on the shared
// grid and merges the rows in configuration order.
template <typename T>
EvalReport compare(const std::vector<TrainOptions>& configs, const Corpus& corpus,
                   const EvalOptions& opts,
                   const std::function<void(const TrainOptions&,
                                            const TrainResult<T>&)>& on_trained = {});

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace clex
