import json
import math

import pytest

import twistguide as tg


def test_version_and_schema():
    assert tg.__version__ == "0.3.0"
    assert tg.config_schema == "twistguide-config/1"
    assert tg.format_number(0.1) == "0.10000000000000001"


def test_unit_square_eigenvalue():
    ev = tg.transverse_eigenvalues({"shape": "rectangle", "width": 1, "height": 1, "h": 0.05}, 1)
    assert abs(ev[0] - 2 * math.pi**2) / (2 * math.pi**2) < 0.01


def test_straight_band_is_parabolic():
    k, E = tg.sweep_bands({"shape": "rectangle", "width": 1, "height": 1, "h": 0.1}, 0.0, bands=2, n_k=16, ell_max=1)
    assert E.shape == (k.shape[0], 2)
    l1 = E[:, 0].min()
    assert max(abs(E[i, 0] - l1 - k[i] ** 2) for i in range(len(k))) < 1e-10


def test_counts_agree_with_birman_schwinger():
    well = {"family": "gaussian", "c": 5.0, "width": 1.5}
    count, converged = tg.count_below(well, 0.7)
    bs, bs_converged = tg.bs_count(well, 0.7)
    assert converged and bs_converged
    assert count == bs > 0


def test_count_curve_grows():
    c = tg.count_curve({"family": "power", "c": 1.0, "alpha": 0.8}, 1e-4, 1e-1, 5)
    assert c["lambda"][0] > c["lambda"][-1]
    assert c["count"][-1] >= c["count"][0]
    assert all(c["converged"])
    sc = tg.semiclassical_count({"family": "power", "c": 1.0, "alpha": 0.8}, 1e-4)
    assert 0.8 < c["count"][-1] / sc < 1.2


def test_run_bands_stage():
    cfg = {
        "schema": "twistguide-config/1",
        "cross_section": {"shape": "rectangle", "width": 1.0, "height": 0.6, "h": 0.1},
        "twist": 0.5,
        "numerics": {"bands": 2, "n_k": 16, "ell_max": 2},
    }
    rep = tg.run(cfg, ["bands"])
    assert rep["schema"] == tg.report_schema
    assert rep["stages"] == ["bands"]
    assert "edges" not in rep


def test_config_errors():
    with pytest.raises(tg.ConfigError):
        tg.run({"schema": "nope"}, ["bands"])
    with pytest.raises(tg.ConfigError):
        tg.count_below({"family": "power", "c": 1.0, "alpha": -1.0}, 0.1)
    assert issubclass(tg.ConfigError, tg.TwistguideError)


def test_run_check():
    r = tg.run_check(json.dumps({"type": "inertia_vs_dense", "instances": 50, "max_dimension": 100}))
    assert r["status"] == "pass"
