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
import json
import math
import random

import pytest

import clexkit


def test_default_basis():
    theta = clexkit.default_basis(8)
    assert len(theta) == 4
    assert theta[0] == 1.0
    assert theta[1] == pytest.approx(10000.0 ** (-2 / 8))


def test_rotation_depends_on_offset_only():
    rng = random.Random(3)
    theta = clexkit.default_basis(16)
    q = [rng.gauss(0, 1) for _ in range(16)]
    k = [rng.gauss(0, 1) for _ in range(16)]
    a = clexkit.pair_score(q, k, 10.0, 3.0, theta)
    b = clexkit.pair_score(q, k, 107.0, 100.0, theta)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)
    rotated = clexkit.apply_rotary(q, 5.0, theta)
    assert math.fsum(x * x for x in rotated) == pytest.approx(math.fsum(x * x for x in q))


def test_alpha_profiles():
    assert clexkit.alpha_pi(4.0, 8) == [0.25] * 4
    yarn = clexkit.alpha_yarn(4.0, 8)
    assert yarn[0] == 1.0
    assert yarn[-1] == pytest.approx(0.25)
    cl = clexkit.alpha_codellama(8)
    scaled = clexkit.scale_basis(clexkit.default_basis(8), cl)
    assert scaled == pytest.approx(clexkit.default_basis(8, 1e6), rel=1e-12)
    assert clexkit.scale_positions([1.0, 2.0], 2.0) == [0.5, 1.0]


def test_zero_net_reproduces_yarn():
    theta = clexkit.default_basis(16)
    solved = clexkit.solve_basis(theta, 8.0)
    yarn = clexkit.scale_basis(theta, clexkit.alpha_yarn(8.0, 16))
    assert solved == pytest.approx(yarn, rel=1e-6)


def test_weight_shapes_checked():
    theta = clexkit.default_basis(8)
    with pytest.raises(clexkit.ShapeError):
        clexkit.solve_basis(theta, 2.0, w_up=[0.0] * 3)
    with pytest.raises(ValueError):
        clexkit.solve_basis(theta, 0.5)


def test_position_plan_and_cache():
    pos = clexkit.position_plan(16, 4.0, 16, "random", 7)
    assert len(pos) == 16
    assert pos == sorted(pos)
    assert 1.0 <= pos[0] and pos[-1] <= 64.0
    assert clexkit.position_plan(4, 1.0, 4, "natural") == [1.0, 2.0, 3.0, 4.0]
    assert clexkit.cache_lookup([1, 2, 4], 128, 300) == (4.0, False)
    t, on_demand = clexkit.cache_lookup([1, 2, 4], 128, 1024)
    assert on_demand and t == pytest.approx(8.0)


def test_eval_helpers():
    assert clexkit.log_scale_mult(128, 64) == 1.0
    assert clexkit.log_scale_mult(128, 1024) == pytest.approx(math.log(1024) / math.log(128))
    assert clexkit.self_extension_factor(4.0, 1024, 128) == 8.0
    assert clexkit.solver_steps(16.0) == 120


def test_cli_basis(tmp_path):
    code, out, err = clexkit.run_cli(["basis", "--d", "8", "--t", "1,2", "--methods", "rope,yarn"])
    assert code == 0, err
    lines = out.strip().splitlines()
    assert lines[0] == "method,t,i,theta_i"
    assert len(lines) == 1 + 2 * 2 * 4


def test_cli_rejects_missing_corpus(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"corpus": str(tmp_path / "missing.txt")}))
    code, _, err = clexkit.run_cli(["train", str(cfg), "--out", str(tmp_path / "run")])
    assert code == 2
    assert err
