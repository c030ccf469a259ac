# Copyright 2026 The clexkit Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Python bindings for the clexkit C++ core."""

from clexkit._core import (
    CompatibilityError,
    DomainError,
    InputError,
    NumericalError,
    ShapeError,
    alpha_codellama,
    alpha_pi,
    alpha_yarn,
    apply_rotary,
    cache_lookup,
    default_basis,
    log_scale_mult,
    pair_score,
    position_plan,
    run_cli,
    scale_basis,
    scale_positions,
    self_extension_factor,
    solve_basis,
    solver_steps,
    xi,
)

__all__ = [
    "CompatibilityError",
    "DomainError",
    "InputError",
    "NumericalError",
    "ShapeError",
    "alpha_codellama",
    "alpha_pi",
    "alpha_yarn",
    "apply_rotary",
    "cache_lookup",
    "default_basis",
    "log_scale_mult",
    "pair_score",
    "position_plan",
    "run_cli",
    "scale_basis",
    "scale_positions",
    "self_extension_factor",
    "solve_basis",
    "solver_steps",
    "xi",
]
