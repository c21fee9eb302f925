# Copyright 2026 The pgap Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import pgap


def test_truncated_svd_matches_numpy():
    g = pgap.gaussian_matrix(3, 12, 9)
    u, s, v = pgap.truncated_svd(g, 3)
    ref = np.linalg.svd(g, compute_uv=False)
    np.testing.assert_allclose(s, ref[:3], rtol=1e-12)
    np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-12)
    tail = math.sqrt(float(np.sum(ref[3:] ** 2)))
    assert abs(np.linalg.norm(u @ np.diag(s) @ v.T - g) - tail) < 1e-10


def test_projection_meets_hyperplane():
    s = np.diag([3.0, 1.0, 0.5])
    z = pgap.project_lowdim(pgap.gaussian_matrix(7, 3, 3), s, 0.7, -1)
    assert abs(np.sum(s * z) + math.sqrt(0.7) * np.linalg.norm(s)) < 1e-12


def test_lift_is_an_isometry():
    rng = np.random.default_rng(0)
    u, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    v, _ = np.linalg.qr(rng.standard_normal((8, 4)))
    z = rng.standard_normal((4, 4))
    lifted = pgap.lift(z, u, v)
    np.testing.assert_allclose(lifted, u @ z @ v.T, atol=1e-13)
    assert abs(pgap.frob_norm(lifted) - np.linalg.norm(z)) < 1e-12
    assert abs(pgap.frob_inner(lifted, lifted) - np.sum(z * z)) < 1e-12


def test_seeds_are_deterministic_and_distinct():
    a = pgap.derive_seed(1, "probe", 0)
    assert a == pgap.derive_seed(1, "probe", 0)
    assert a != pgap.derive_seed(1, "probe", 1)
    np.testing.assert_array_equal(pgap.gaussian_matrix(a, 2, 2), pgap.gaussian_matrix(a, 2, 2))


def test_train_is_reproducible_and_descends():
    config = "[optimizer]\nsteps = 120\neta = 0.01\nseed = 5\n"
    a = pgap.train(config)
    b = pgap.train(config)
    assert len(a["loss"]) == 120
    np.testing.assert_array_equal(a["rho"], b["rho"])
    assert a["refresh"][0] and a["refresh"][100]
    assert a["final_loss"] < a["loss"][0]
    mezo = pgap.train(config, "mezo")
    assert not mezo["refresh"].any()


def test_config_errors_raise_value_error():
    with pytest.raises(pgap.ConfigError, match="optimizer.stepz"):
        pgap.resolve_config("[optimizer]\nstepz = 1\n")
    with pytest.raises(ValueError):
        pgap.resolve_config("[task\n")
    echo = pgap.resolve_config("[optimizer]\neta = 0.5\n")
    assert pgap.resolve_config(echo) == echo


def test_lab_suite_reports(tmp_path):
    config = f'[output]\ndir = "{tmp_path}"\n[lab.angle]\nq_list = [4]\nsamples = 20000\n'
    reports = pgap.lab("angle", config)
    cos2 = next(r for r in reports if r["id"] == "angle/q=4/cos2")
    assert cos2["target"] == 0.25 and cos2["pass"]
    assert (tmp_path / "lab_angle.json").exists()
    assert "dispersion" in pgap.lab_suites()
    with pytest.raises(pgap.ConfigError):
        pgap.lab("bogus")
