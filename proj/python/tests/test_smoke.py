import json
import math

import numpy as np
import pytest

import mtlab


def test_extension_slices_carry_the_norm():
    out = mtlab.extend(n=2, R=32.0, seed=3)
    assert out["field"].dtype == np.complex128
    assert out["field"].ndim == 2
    norm = out["g_norm_sq"]
    assert norm > 0
    assert max(abs(s - norm) / norm for s in out["slice_l2"]) < 1e-3


def test_xray_of_a_disc_is_its_diameter():
    h = 1.0 / 32
    x = (np.arange(97) - 48) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    disc = (X**2 + Y**2 <= 1.0).astype(float)
    res = mtlab.xray_sup(disc, spacing=h, angular_res=0.05, offset_res=0.05)
    assert res["value"] == pytest.approx(2.0, rel=0.02)
    assert len(res["direction"]) == 2


def test_counterexample_run_is_reproducible():
    a = mtlab.run_cex(64, seed=5)
    b = mtlab.run_cex(64, seed=5)
    assert a["certified"]
    assert a["ratio"] == b["ratio"]
    assert a["state_json"] == b["state_json"]
    state = json.loads(a["state_json"])
    assert isinstance(state, dict)
    assert 0 < a["selected"] <= a["n_balls"]


def test_fit_recovers_a_power():
    xs = [2.0**k for k in range(3, 9)]
    slope, _ = mtlab.fit_loglog(xs, [3 * x**0.5 for x in xs])
    assert slope == pytest.approx(0.5, abs=1e-12)


def test_scenarios(tmp_path):
    names = [n for n, _ in mtlab.list_scenarios()]
    assert "cex-growth" in names
    res = mtlab.run_scenario("fast-direct", ["R=8"], str(tmp_path))
    assert res["ok"]
    assert all(passed for _, passed, _ in res["checks"])
    with pytest.raises(KeyError):
        mtlab.run_scenario("no-such-scenario")
    with pytest.raises(ValueError):
        mtlab.run_scenario("fast-direct", ["no.such.key=1"], str(tmp_path))
    assert math.isfinite(res["seconds"])
