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

#include "clex/clex_ode.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "clex/errors.hpp"

namespace clex {

std::string_view xi_form_name(XiForm form) {
  return form == XiForm::LogDerivative ? "log_derivative" : "paper_printed";
}

XiForm parse_xi_form(std::string_view name) {
  if (name == "log_derivative") return XiForm::LogDerivative;
  if (name == "paper_printed") return XiForm::PaperPrinted;
  throw InputError("unknown xi_form '" + std::string(name) +
                   "' (expected log_derivative or paper_printed)");
}

std::vector<double> xi(double t, std::size_t d, XiForm form) {
  if (!std::isfinite(t) || t < 1.0) {
    throw DomainError("xi: t must be >= 1, got " + std::to_string(t));
  }
  if (d < 4 || d % 2 != 0) throw DomainError("xi: head dimension must be even and >= 4");
  std::vector<double> out(d / 2);
  const double dm2 = double(d - 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = 2.0 * double(i) / dm2;
    out[i] = form == XiForm::LogDerivative ? -e / t : -e / std::pow(t, e + 1.0);
  }
  return out;
}

template <typename T>
OdeNet<T> OdeNet<T>::init(std::size_t head_dim, std::size_t lambda_amp,
                          std::mt19937_64& rng) {
  OdeNet net = zeros(head_dim, lambda_amp);
  const double bound = 1.0 / std::sqrt(double(head_dim / 2));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& w : net.w_up.mutable_data()) w = T(dist(rng));
  return net;
}

template <typename T>
OdeNet<T> OdeNet<T>::zeros(std::size_t head_dim, std::size_t lambda_amp) {
  if (head_dim < 4 || head_dim % 2 != 0) {
    throw DomainError("OdeNet: head dimension must be even and >= 4");
  }
  if (lambda_amp == 0) throw DomainError("OdeNet: amplification factor must be >= 1");
  OdeNet net;
  net.head_dim = head_dim;
  net.lambda_amp = lambda_amp;
  const std::size_t half = head_dim / 2, hidden = lambda_amp * head_dim;
  net.w_up = Tensor<T>::zeros({hidden, half}, true);
  net.w_down = Tensor<T>::zeros({half, hidden}, true);
  return net;
}

template <typename T>
Tensor<T> dynamics(const Tensor<T>& z, double t, const OdeNet<T>& net, XiForm form) {
  if (z.rank() != 1 || z.numel() != net.head_dim / 2) {
    throw ShapeError("dynamics: z has shape " + shape_str(z.shape()) +
                     ", expected [" + std::to_string(net.head_dim / 2) + "]");
  }
  const auto x = xi(t, net.head_dim, form);
  Tensor<T> drift(Shape{x.size()}, std::vector<T>(x.begin(), x.end()));
  return add(matmul(net.w_down, silu(matmul(net.w_up, z))), drift);
}

std::size_t solver_steps(double t_target, int steps_per_unit) {
  if (steps_per_unit < 1) throw DomainError("steps_per_unit must be >= 1");
  if (!std::isfinite(t_target) || t_target < 1.0) {
    throw DomainError("solve: t_target must be >= 1, got " + std::to_string(t_target));
  }
  if (t_target == 1.0) return 0;
  const double n = std::ceil(double(steps_per_unit) * (t_target - 1.0));
  return std::max<std::size_t>(8, std::size_t(n));
}

template <typename T>
Tensor<T> solve_log_steps(const Tensor<T>& z1, double t_target,
                          const OdeNet<T>& net, XiForm form, std::size_t steps) {
  if (!std::isfinite(t_target) || t_target < 1.0) {
    throw DomainError("solve: t_target must be >= 1, got " + std::to_string(t_target));
  }
  if (t_target == 1.0 || steps == 0) return z1;
  const double h = (t_target - 1.0) / double(steps);
  const T hh = T(h);
  Tensor<T> z = z1;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = 1.0 + h * double(s);
    auto k1 = dynamics(z, t, net, form);
    auto k2 = dynamics(add(z, scale(k1, hh / T(2))), t + h / 2.0, net, form);
    auto k3 = dynamics(add(z, scale(k2, hh / T(2))), t + h / 2.0, net, form);
    auto k4 = dynamics(add(z, scale(k3, hh)), t + h, net, form);
    auto incr = add(add(k1, scale(k2, T(2))), add(scale(k3, T(2)), k4));
    z = add(z, scale(incr, hh / T(6)));
  }
  return z;
}

template <typename T>
Tensor<T> solve_log(const Tensor<T>& z1, double t_target, const OdeNet<T>& net,
                    XiForm form, int steps_per_unit) {
  return solve_log_steps(z1, t_target, net, form,
                         solver_steps(t_target, steps_per_unit));
}

template <typename T>
LogBasis solve(const LogBasis& z1, double t_target, const OdeNet<T>& net,
               XiForm form, int steps_per_unit) {
  NoGradGuard guard;
  Tensor<T> z(Shape{z1.z.size()}, std::vector<T>(z1.z.begin(), z1.z.end()));
  auto out = solve_log(z, t_target, net, form, steps_per_unit);
  return LogBasis{std::vector<double>(out.data().begin(), out.data().end())};
}

double sample_train_factor(double t_train, std::mt19937_64& rng) {
  if (!std::isfinite(t_train) || t_train < 1.0) {
    throw DomainError("t_train must be >= 1");
  }
  if (t_train == 1.0) return 1.0;
  std::uniform_real_distribution<double> dist(1.0, t_train);
  return dist(rng);
}

std::string_view position_mode_name(PositionMode mode) {
  switch (mode) {
    case PositionMode::Natural: return "natural";
    case PositionMode::UniformScaled: return "uniform";
    case PositionMode::RandomSampled: return "random";
  }
  return "?";
}

PositionMode parse_position_mode(std::string_view name) {
  if (name == "natural") return PositionMode::Natural;
  if (name == "uniform") return PositionMode::UniformScaled;
  if (name == "random") return PositionMode::RandomSampled;
  throw InputError("unknown position_mode '" + std::string(name) +
                   "' (expected natural, uniform or random)");
}

PositionPlan position_plan(std::size_t train_len, double t_prime,
                           std::size_t native_len, PositionMode mode,
                           std::uint64_t rng_seed) {
  if (!std::isfinite(t_prime) || t_prime < 1.0) {
    throw DomainError("position_plan: t' must be >= 1");
  }
  if (train_len == 0 || native_len == 0) {
    throw DomainError("position_plan: lengths must be positive");
  }
  const double span_max = t_prime * double(native_len);
  const auto range = std::size_t(std::floor(span_max));
  if (train_len > range) {
    throw DomainError("position_plan: cannot place " + std::to_string(train_len) +
                      " distinct positions in [1, " + std::to_string(range) + "]");
  }
  PositionPlan plan;
  plan.mode = mode;
  plan.t_prime = t_prime;
  plan.rng_seed = rng_seed;
  plan.positions.resize(train_len);
  switch (mode) {
    case PositionMode::Natural:
      for (std::size_t j = 0; j < train_len; ++j) plan.positions[j] = double(j + 1);
      break;
    case PositionMode::UniformScaled: {
      const double s = span_max / double(train_len);
      for (std::size_t j = 0; j < train_len; ++j) plan.positions[j] = double(j + 1) * s;
      break;
    }
    case PositionMode::RandomSampled: {
      // Floyd's sampling of train_len distinct integers from [1, range].
      std::mt19937_64 rng(rng_seed);
      std::set<std::size_t> picked;
      for (std::size_t j = range - train_len + 1; j <= range; ++j) {
        std::uniform_int_distribution<std::size_t> dist(1, j);
        const std::size_t v = dist(rng);
        if (!picked.insert(v).second) picked.insert(j);
      }
      std::size_t j = 0;
      for (auto v : picked) plan.positions[j++] = double(v);
      break;
    }
  }
  return plan;
}

BasisCache::BasisCache(std::map<double, FrequencyBasis> entries, std::size_t native_len)
    : entries_(std::move(entries)), native_len_(native_len) {
  if (entries_.empty()) throw DomainError("basis cache needs at least one entry");
  if (native_len_ == 0) throw DomainError("basis cache native length must be positive");
  if (entries_.begin()->first < 1.0) throw DomainError("basis cache keys must be >= 1");
}

std::string BasisCache::to_json() const {
  nlohmann::ordered_json j;
  j["native_len"] = native_len_;
  auto& arr = j["entries"] = nlohmann::ordered_json::array();
  for (const auto& [t, basis] : entries_) {
    arr.push_back({{"t", t},
                   {"theta", std::vector<double>(basis.theta().begin(),
                                                 basis.theta().end())}});
  }
  return j.dump(2);
}

BasisCache BasisCache::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::map<double, FrequencyBasis> entries;
    for (const auto& e : j.at("entries")) {
      entries.emplace(e.at("t").get<double>(),
                      FrequencyBasis(e.at("theta").get<std::vector<double>>()));
    }
    return BasisCache(std::move(entries), j.at("native_len").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed basis cache: ") + e.what());
  }
}

template <typename T>
BasisCache build_cache(const OdeNet<T>& net, XiForm form,
                       std::span<const double> t_ks, const FrequencyBasis& base,
                       std::size_t native_len, int steps_per_unit) {
  if (t_ks.empty()) throw DomainError("build_cache: no scale factors given");
  if (t_ks.front() < 1.0) throw DomainError("build_cache: first t_k must be >= 1");
  for (std::size_t k = 1; k < t_ks.size(); ++k) {
    if (!(t_ks[k] > t_ks[k - 1])) {
      throw DomainError("build_cache: t_k values must be strictly increasing");
    }
  }
  const auto z1 = LogBasis::of(base);
  std::map<double, FrequencyBasis> entries;
  for (double t : t_ks) {
    if (t == 1.0) {
      entries.emplace(t, base);
    } else {
      entries.emplace(t, solve(z1, t, net, form, steps_per_unit).exp());
    }
  }
  return BasisCache(std::move(entries), native_len);
}

template <typename T>
CacheSession<T>::CacheSession(const BasisCache& cache, const OdeNet<T>& net,
                              XiForm form, FrequencyBasis base, int steps_per_unit)
    : cache_(&cache),
      net_(&net),
      form_(form),
      base_(std::move(base)),
      steps_per_unit_(steps_per_unit) {}

template <typename T>
LookupResult CacheSession<T>::lookup(std::size_t seq_len) {
  if (seq_len == 0) throw DomainError("lookup: sequence length must be >= 1");
  const double len = double(seq_len);
  const double native = double(cache_->native_len());
  for (const auto& [t, basis] : cache_->entries()) {
    if (t * native >= len) return {t, basis, false};
  }
  const double t = len / native;
  auto it = overlay_.find(t);
  if (it == overlay_.end()) {
    auto solved = solve(LogBasis::of(base_), t, *net_, form_, steps_per_unit_).exp();
    it = overlay_.emplace(t, std::move(solved)).first;
  }
  return {t, it->second, true};
}

#define CLEX_INSTANTIATE(T)                                                     \
  template struct OdeNet<T>;                                                    \
  template Tensor<T> dynamics<T>(const Tensor<T>&, double, const OdeNet<T>&,    \
                                 XiForm);                                       \
  template Tensor<T> solve_log<T>(const Tensor<T>&, double, const OdeNet<T>&,   \
                                  XiForm, int);                                 \
  template Tensor<T> solve_log_steps<T>(const Tensor<T>&, double,               \
                                        const OdeNet<T>&, XiForm, std::size_t); \
  template LogBasis solve<T>(const LogBasis&, double, const OdeNet<T>&, XiForm, \
                             int);                                              \
  template BasisCache build_cache<T>(const OdeNet<T>&, XiForm,                  \
                                     std::span<const double>,                   \
                                     const FrequencyBasis&, std::size_t, int);  \
  template class CacheSession<T>;

CLEX_INSTANTIATE(float)
CLEX_INSTANTIATE(double)

#undef CLEX_INSTANTIATE

}  // namespace clex
