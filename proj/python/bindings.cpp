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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "clex/cli.hpp"
#include "clex/clex_ode.hpp"
#include "clex/errors.hpp"
#include "clex/harness.hpp"
#include "clex/model.hpp"
#include "clex/pe_scaling.hpp"
#include "clex/rope.hpp"

namespace py = pybind11;
using namespace clex;

namespace {

std::vector<double> theta_of(const FrequencyBasis& b) {
  return {b.theta().begin(), b.theta().end()};
}

OdeNet<double> make_net(std::size_t d, std::size_t lambda,
                        const std::optional<std::vector<double>>& w_up,
                        const std::optional<std::vector<double>>& w_down) {
  auto net = OdeNet<double>::zeros(d, lambda);
  auto fill = [](Tensor<double>& t, const std::vector<double>& v, const char* name) {
    if (v.size() != t.numel()) {
      throw ShapeError(std::string(name) + " needs " + std::to_string(t.numel()) +
                       " values (row-major " + shape_str(t.shape()) + "), got " +
                       std::to_string(v.size()));
    }
    std::copy(v.begin(), v.end(), t.mutable_data().begin());
  };
  if (w_up) fill(net.w_up, *w_up, "w_up");
  if (w_down) fill(net.w_down, *w_down, "w_down");
  return net;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv{"clex"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> ptrs;
  for (const auto& a : argv) ptrs.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(int(ptrs.size()), ptrs.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "RoPE scaling, CLEX basis dynamics and the evaluation helpers.";

  auto base_value = py::handle(PyExc_ValueError);
  auto base_runtime = py::handle(PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base_value);
  py::register_exception<DomainError>(m, "DomainError", base_value);
  py::register_exception<NumericalError>(m, "NumericalError", base_runtime);
  py::register_exception<InputError>(m, "InputError", base_runtime);
  py::register_exception<CompatibilityError>(m, "CompatibilityError", base_runtime);

  m.def(
      "default_basis",
      [](std::size_t d, double base) { return theta_of(default_basis(d, base)); },
      py::arg("d"), py::arg("base") = 10000.0);
  m.def(
      "apply_rotary",
      [](const std::vector<double>& x, double m, const std::vector<double>& theta) {
        return apply_rotary(x, m, FrequencyBasis(theta));
      },
      py::arg("x"), py::arg("m"), py::arg("theta"));
  m.def(
      "pair_score",
      [](const std::vector<double>& q, const std::vector<double>& k, double m, double n,
         const std::vector<double>& theta) { return pair_score(q, k, m, n, FrequencyBasis(theta)); },
      py::arg("q"), py::arg("k"), py::arg("m"), py::arg("n"), py::arg("theta"));

  m.def("alpha_pi", [](double t, std::size_t d) { return alpha_pi(ScaleFactor(t), d); },
        py::arg("t"), py::arg("d"));
  m.def("alpha_yarn", [](double t, std::size_t d) { return alpha_yarn(ScaleFactor(t), d); },
        py::arg("t"), py::arg("d"));
  m.def("alpha_codellama", &alpha_codellama, py::arg("d"));
  m.def(
      "scale_basis",
      [](const std::vector<double>& theta, const std::vector<double>& alpha) {
        return theta_of(scale_basis(FrequencyBasis(theta), alpha));
      },
      py::arg("theta"), py::arg("alpha"));
  m.def(
      "scale_positions",
      [](const std::vector<double>& p, double t) { return scale_positions(p, ScaleFactor(t)); },
      py::arg("positions"), py::arg("t"));

  m.def(
      "xi", [](double t, std::size_t d, const std::string& form) { return xi(t, d, parse_xi_form(form)); },
      py::arg("t"), py::arg("d"), py::arg("form") = "log_derivative");
  m.def("solver_steps", &solver_steps, py::arg("t"), py::arg("steps_per_unit") = 8);
  m.def(
      "solve_basis",
      [](const std::vector<double>& theta, double t, std::size_t lambda_amp,
         std::optional<std::vector<double>> w_up, std::optional<std::vector<double>> w_down,
         const std::string& form, int steps_per_unit) {
        const FrequencyBasis b(theta);
        const auto net = make_net(b.head_dim(), lambda_amp, w_up, w_down);
        return theta_of(solve(LogBasis::of(b), t, net, parse_xi_form(form), steps_per_unit).exp());
      },
      py::arg("theta"), py::arg("t"), py::arg("lambda_amp") = 1, py::arg("w_up") = py::none(),
      py::arg("w_down") = py::none(), py::arg("form") = "log_derivative",
      py::arg("steps_per_unit") = 8,
      "Integrates the log-basis ODE from 1 to t. Weights default to zero, "
      "which reproduces the Yarn basis.");
  m.def(
      "position_plan",
      [](std::size_t train_len, double t_prime, std::size_t native_len, const std::string& mode,
         std::uint64_t seed) {
        return position_plan(train_len, t_prime, native_len, parse_position_mode(mode), seed)
            .positions;
      },
      py::arg("train_len"), py::arg("t_prime"), py::arg("native_len"),
      py::arg("mode") = "random", py::arg("seed") = 0);
  m.def(
      "cache_lookup",
      [](const std::vector<double>& t_ks, std::size_t native_len, std::size_t seq_len) {
        const auto base = default_basis(8);
        const auto net = OdeNet<double>::zeros(8, 1);
        const auto cache = build_cache(net, XiForm::LogDerivative, t_ks, base, native_len);
        CacheSession<double> s(cache, net, XiForm::LogDerivative, base);
        const auto r = s.lookup(seq_len);
        return py::make_tuple(r.t, r.on_demand);
      },
      py::arg("t_ks"), py::arg("native_len"), py::arg("seq_len"),
      "Scale factor the cache rule picks for seq_len, and whether it is an on-demand solve.");

  m.def("log_scale_mult", &log_scale_mult, py::arg("train_len"), py::arg("test_len"));
  m.def("self_extension_factor", &self_extension_factor, py::arg("t_fixed"),
        py::arg("eval_len"), py::arg("base_len"));
  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs the command-line tool in-process. Returns (exit_code, stdout, stderr).");
}
