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

#include "clex/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "clex/errors.hpp"
#include "clex/pe_scaling.hpp"

namespace clex {

namespace {

std::vector<double> natural_positions(std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = double(j + 1);
  return p;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Corpus make_corpus(std::vector<std::uint8_t> bytes, double split_fraction) {
  if (bytes.empty()) throw InputError("corpus is empty");
  if (!(split_fraction > 0.0) || split_fraction > 1.0) {
    throw InputError("split fraction must lie in (0, 1]");
  }
  Corpus c;
  c.train_end = std::min(
      bytes.size(),
      std::size_t(std::floor(double(bytes.size()) * split_fraction + 1e-9)));
  c.bytes = std::move(bytes);
  return c;
}

Corpus load_corpus(const std::filesystem::path& path, double split_fraction) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("corpus not found: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  if (bytes.empty()) throw InputError("corpus is empty: " + path.string());
  return make_corpus(std::move(bytes), split_fraction);
}

TrainBatcher::TrainBatcher(std::span<const std::uint8_t> data, std::size_t seq_len,
                           std::size_t batch_size, std::uint64_t seed)
    : data_(data), seq_len_(seq_len), batch_size_(batch_size), rng_(seed) {
  if (seq_len == 0 || batch_size == 0) {
    throw DomainError("batcher: seq_len and batch_size must be positive");
  }
  if (data.size() < seq_len + 1) {
    throw InputError("corpus too short: " + std::to_string(data.size()) +
                     " training bytes for windows of " + std::to_string(seq_len + 1));
  }
}

TokenBatch TrainBatcher::next() {
  TokenBatch b;
  b.batch = batch_size_;
  b.seq_len = seq_len_;
  b.inputs.resize(batch_size_ * seq_len_);
  b.targets.resize(batch_size_ * seq_len_);
  b.mask.assign(batch_size_ * seq_len_, 1);
  std::uniform_int_distribution<std::size_t> dist(0, data_.size() - seq_len_ - 1);
  for (std::size_t r = 0; r < batch_size_; ++r) {
    const std::size_t off = dist(rng_);
    for (std::size_t j = 0; j < seq_len_; ++j) {
      b.inputs[r * seq_len_ + j] = data_[off + j];
      b.targets[r * seq_len_ + j] = data_[off + j + 1];
    }
  }
  return b;
}

std::vector<std::size_t> eval_window_offsets(std::size_t data_len, std::size_t seq_len) {
  if (seq_len == 0) throw DomainError("window length must be positive");
  std::vector<std::size_t> out;
  for (std::size_t off = 0; off + seq_len <= data_len; off += seq_len) out.push_back(off);
  return out;
}

TokenBatch eval_batch(std::span<const std::uint8_t> data,
                      std::span<const std::size_t> offsets, std::size_t seq_len) {
  TokenBatch b;
  b.batch = offsets.size();
  b.seq_len = seq_len;
  b.inputs.resize(offsets.size() * seq_len);
  b.targets.assign(offsets.size() * seq_len, 0);
  b.mask.assign(offsets.size() * seq_len, 1);
  for (std::size_t r = 0; r < offsets.size(); ++r) {
    if (offsets[r] + seq_len > data.size()) throw ShapeError("eval window out of range");
    for (std::size_t j = 0; j < seq_len; ++j) {
      b.inputs[r * seq_len + j] = data[offsets[r] + j];
      if (j + 1 < seq_len) {
        b.targets[r * seq_len + j] = data[offsets[r] + j + 1];
      } else {
        b.mask[r * seq_len + j] = 0;
      }
    }
  }
  return b;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> TrainedModel<T>::named() const {
  auto out = params.named();
  if (ode) {
    out.emplace_back("ode.w_up", ode->w_up);
    out.emplace_back("ode.w_down", ode->w_down);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> TrainedModel<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

template <typename T>
TrainedModel<T> init_model(const TrainOptions& opts) {
  TrainedModel<T> m;
  m.params = TransformerParams<T>::init(opts.model);
  m.xi_form = opts.xi_form;
  m.steps_per_unit = opts.steps_per_unit;
  if (opts.model.method == Method::Clex) {
    std::mt19937_64 rng(splitmix64(opts.model.seed ^ 0x0DE0DEULL));
    m.ode = OdeNet<T>::init(opts.model.d_head(), opts.model.ode_lambda, rng);
  }
  return m;
}

template <typename T>
PositionalSetup<T> train_setup(const TrainedModel<T>& model,
                               const TrainOptions& opts, std::mt19937_64& rng) {
  const auto& cfg = model.params.config;
  const std::size_t len = cfg.train_len;
  const std::size_t dh = cfg.d_head();
  const auto base = default_basis(dh, cfg.rope_base);
  PositionalSetup<T> s;
  switch (cfg.method) {
    case Method::Rope:
      s.positions = natural_positions(len);
      s.theta = base.template as_tensor<T>();
      break;
    case Method::PI:
      s.t = cfg.t_fixed;
      s.positions = scale_positions(natural_positions(len), ScaleFactor(s.t));
      s.theta = base.template as_tensor<T>();
      break;
    case Method::Yarn:
      s.t = cfg.t_fixed;
      s.positions = natural_positions(len);
      s.theta = scale_basis(base, alpha_yarn(ScaleFactor(s.t), dh)).template as_tensor<T>();
      break;
    case Method::CodeLlama:
      s.positions = natural_positions(len);
      s.theta = scale_basis(base, alpha_codellama(dh)).template as_tensor<T>();
      break;
    case Method::RandomPos:
      s.t = cfg.t_train;
      s.positions =
          position_plan(len, s.t, len, PositionMode::RandomSampled, rng()).positions;
      s.theta = base.template as_tensor<T>();
      break;
    case Method::Clex: {
      if (!model.ode) throw DomainError("CLEX model without an ODE network");
      s.t = sample_train_factor(cfg.t_train, rng);
      const auto z1 = LogBasis::of(base);
      Tensor<T> z(Shape{z1.z.size()}, std::vector<T>(z1.z.begin(), z1.z.end()));
      s.theta = exp(solve_log(z, s.t, *model.ode, model.xi_form, model.steps_per_unit));
      s.positions = position_plan(len, s.t, len, opts.position_mode, rng()).positions;
      break;
    }
  }
  return s;
}

template <typename T>
TrainResult<T> train(const TrainOptions& opts, const Corpus& corpus,
                     const std::function<void(const LossRecord&)>& on_step) {
  opts.model.validate();
  TrainResult<T> result{init_model<T>(opts), {}};
  auto& model = result.model;
  auto params = model.parameters();
  AdamState<T> state;
  TrainBatcher batcher(corpus.train(), opts.model.train_len, opts.batch_size,
                       splitmix64(opts.model.seed ^ 0xBA7C4ULL));
  std::mt19937_64 pos_rng(splitmix64(opts.model.seed ^ 0x9051710EULL));
  result.trace.reserve(opts.steps);
  for (std::size_t step = 1; step <= opts.steps; ++step) {
    const auto batch = batcher.next();
    const auto setup = train_setup(model, opts, pos_rng);
    zero_grads<T>(params);
    auto logits = forward(model.params, batch.inputs, batch.batch, setup.positions,
                          setup.theta, setup.attn_scale_mult);
    auto loss = softmax_cross_entropy(logits, batch.targets, batch.mask);
    const double lv = double(loss.item());
    if (!std::isfinite(lv)) {
      throw NumericalError("loss became non-finite at step " + std::to_string(step) +
                           " (t'=" + std::to_string(setup.t) + ")");
    }
    backward(loss);
    if (opts.grad_clip > 0.0) clip_grad_norm<T>(params, opts.grad_clip);
    adam_step<T>(params, state, opts.adam);
    LossRecord rec{step, setup.t, lv};
    result.trace.push_back(rec);
    if (on_step) on_step(rec);
  }
  return result;
}

double self_extension_factor(double t_fixed, std::size_t eval_len, std::size_t base_len) {
  if (base_len == 0) throw DomainError("base length must be positive");
  if (!(t_fixed >= 1.0)) throw DomainError("t_fixed must be >= 1");
  return std::max(t_fixed, double(eval_len) / double(base_len));
}

template <typename T>
PositionalSetup<T> eval_setup(const TrainedModel<T>& model, std::size_t eval_len,
                              const EvalOptions& opts, CacheSession<T>* session) {
  const auto& cfg = model.params.config;
  const std::size_t dh = cfg.d_head();
  const auto base = default_basis(dh, cfg.rope_base);
  PositionalSetup<T> s;
  s.positions = natural_positions(eval_len);
  s.attn_scale_mult = opts.log_scaling ? log_scale_mult(cfg.train_len, eval_len) : 1.0;
  switch (cfg.method) {
    case Method::Rope:
    case Method::RandomPos:
      s.theta = base.template as_tensor<T>();
      break;
    case Method::PI:
      s.t = self_extension_factor(cfg.t_fixed, eval_len, cfg.train_len);
      s.positions = scale_positions(s.positions, ScaleFactor(s.t));
      s.theta = base.template as_tensor<T>();
      break;
    case Method::Yarn:
      s.t = self_extension_factor(cfg.t_fixed, eval_len, cfg.train_len);
      s.theta = scale_basis(base, alpha_yarn(ScaleFactor(s.t), dh)).template as_tensor<T>();
      break;
    case Method::CodeLlama:
      s.theta = scale_basis(base, alpha_codellama(dh)).template as_tensor<T>();
      break;
    case Method::Clex: {
      if (!session) throw DomainError("CLEX evaluation needs a basis cache session");
      const auto r = session->lookup(eval_len);
      s.t = r.t;
      s.theta = r.basis.template as_tensor<T>();
      break;
    }
  }
  return s;
}

template <typename T>
std::vector<WindowScore> score_windows(const TrainedModel<T>& model,
                                       const PositionalSetup<T>& setup,
                                       std::span<const std::uint8_t> data,
                                       std::span<const std::size_t> offsets,
                                       std::size_t eval_len, std::size_t batch) {
  NoGradGuard no_grad;
  batch = std::max<std::size_t>(1, batch);
  std::vector<WindowScore> out(offsets.size());
  std::vector<double> nll;
  std::vector<std::uint8_t> hit;
  for (std::size_t start = 0; start < offsets.size(); start += batch) {
    const auto chunk = offsets.subspan(start, std::min(batch, offsets.size() - start));
    const auto b = eval_batch(data, chunk, eval_len);
    auto logits = forward(model.params, b.inputs, b.batch, setup.positions,
                          setup.theta, setup.attn_scale_mult);
    nll.assign(b.inputs.size(), 0.0);
    hit.assign(b.inputs.size(), 0);
    token_nll_and_hits(logits, b.targets, nll, hit);
    for (std::size_t r = 0; r < chunk.size(); ++r) {
      auto& w = out[start + r];
      for (std::size_t j = 0; j < eval_len; ++j) {
        const std::size_t k = r * eval_len + j;
        if (!b.mask[k]) continue;
        w.nll_sum += nll[k];
        w.hits += hit[k];
        ++w.tokens;
      }
    }
  }
  return out;
}

template <typename T>
EvalReport evaluate(const TrainedModel<T>& model, const Corpus& corpus,
                    const EvalOptions& opts) {
  const auto& cfg = model.params.config;
  auto data = corpus.validation();
  if (data.empty()) {
    throw InputError("validation split is empty; evaluation needs held-out data");
  }
  if (opts.max_eval_tokens > 0 && data.size() > opts.max_eval_tokens) {
    data = data.first(opts.max_eval_tokens);
  }
  const auto base = default_basis(cfg.d_head(), cfg.rope_base);
  std::optional<BasisCache> cache;
  std::optional<CacheSession<T>> session;
  if (cfg.method == Method::Clex) {
    if (!model.ode) throw DomainError("CLEX model without an ODE network");
    cache.emplace(build_cache(*model.ode, model.xi_form, opts.cache_t_ks, base,
                              cfg.train_len, model.steps_per_unit));
    session.emplace(*cache, *model.ode, model.xi_form, base, model.steps_per_unit);
  }
  EvalReport report;
  for (std::size_t len : opts.eval_lens) {
    if (len < 2) throw DomainError("evaluation lengths must be >= 2");
    EvalRow row;
    row.method = std::string(method_name(cfg.method));
    row.train_len = cfg.train_len;
    row.eval_len = len;
    const auto setup = eval_setup(model, len, opts, session ? &*session : nullptr);
    row.eval_t = setup.t;
    row.attn_scale_mult = setup.attn_scale_mult;
    row.ppl = row.acc = std::nan("");
    const auto offsets = eval_window_offsets(data.size(), len);
    // Rough peak footprint of one forward pass: activations plus one
    // attention score matrix.
    auto footprint_mb = [&](std::size_t b) {
      const double act = double(b * len) * double(cfg.vocab + 12 * cfg.d_model);
      return (act + double(len) * double(len)) * sizeof(T) / (1024.0 * 1024.0);
    };
    std::size_t batch = std::max<std::size_t>(1, opts.eval_batch);
    while (batch > 1 && footprint_mb(batch) > opts.memory_budget_mb) batch /= 2;
    if (offsets.empty()) {
      row.status = "skipped: validation split shorter than eval_len";
    } else if (footprint_mb(batch) > opts.memory_budget_mb) {
      row.status = "skipped: exceeds memory budget";
    } else {
      const auto scores = score_windows(model, setup, data, offsets, len, batch);
      std::size_t hits = 0;
      for (const auto& w : scores) {
        row.nll_sum += w.nll_sum;
        row.tokens += w.tokens;
        hits += w.hits;
      }
      row.windows = scores.size();
      row.ppl = std::exp(row.nll_sum / double(row.tokens));
      row.acc = double(hits) / double(row.tokens);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

template <typename T>
EvalReport compare(const std::vector<TrainOptions>& configs, const Corpus& corpus,
                   const EvalOptions& opts,
                   const std::function<void(const TrainOptions&,
                                            const TrainResult<T>&)>& on_trained) {
  for (const auto& c : configs) {
    if (c.model.vocab != configs.front().model.vocab) {
      throw InputError("compare: configurations disagree on vocabulary size");
    }
  }
  EvalReport merged;
  for (const auto& c : configs) {
    auto trained = train<T>(c, corpus);
    if (on_trained) on_trained(c, trained);
    auto rep = evaluate(trained.model, corpus, opts);
    for (auto& r : rep.rows) merged.rows.push_back(std::move(r));
  }
  return merged;
}

#define CLEX_INSTANTIATE(T)                                                     \
  template struct TrainedModel<T>;                                              \
  template TrainedModel<T> init_model<T>(const TrainOptions&);                  \
  template PositionalSetup<T> train_setup<T>(const TrainedModel<T>&,            \
                                             const TrainOptions&,               \
                                             std::mt19937_64&);                 \
  template TrainResult<T> train<T>(const TrainOptions&, const Corpus&,          \
                                   const std::function<void(const LossRecord&)>&); \
  template PositionalSetup<T> eval_setup<T>(const TrainedModel<T>&,             \
                                            std::size_t, const EvalOptions&,    \
                                            CacheSession<T>*);                  \
  template std::vector<WindowScore> score_windows<T>(                           \
      const TrainedModel<T>&, const PositionalSetup<T>&,                        \
      std::span<const std::uint8_t>, std::span<const std::size_t>, std::size_t, \
      std::size_t);                                                             \
  template EvalReport evaluate<T>(const TrainedModel<T>&, const Corpus&,        \
                                  const EvalOptions&);                          \
  template EvalReport compare<T>(                                               \
      const std::vector<TrainOptions>&, const Corpus&, const EvalOptions&,      \
      const std::function<void(const TrainOptions&, const TrainResult<T>&)>&);

CLEX_INSTANTIATE(float)
CLEX_INSTANTIATE(double)

#undef CLEX_INSTANTIATE

}  // namespace clex
