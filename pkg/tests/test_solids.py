import math

import numpy as np
import pytest
from scipy import stats

from symgen.curves import CurveSpec, sample_params
from symgen.distance import bbox_diagonal, chamfer
from symgen.solids import (Construction, ExtrusionSpec, RevolutionSpec, SolidConfig,
                           build_solid, extrude, revolve)


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_cylindrical_example():
    out = extrude([(1.0, 0.0)], ExtrusionSpec("cylindrical", 2.0), _rng(), z=0.5)
    assert out.tolist() == [[1.0, 0.0, 0.0]]


def test_conical_apex():
    out = extrude([(0.3, -0.7)], ExtrusionSpec("conical", 1.3), _rng(), z=0.0)
    assert out.tolist() == [[0.0, 0.0, -0.65]]


@pytest.mark.parametrize("kind", ["cylindrical", "conical"])
def test_extrusion_size_and_height(kind):
    pts = _rng(1).normal(size=(6400, 2))
    spec = ExtrusionSpec(kind, 1.7)
    out = extrude(pts, spec, _rng(2))
    assert out.shape == (6400, 3)
    assert np.all(np.abs(out[:, 2]) <= spec.l_z / 2)


def test_cylindrical_keeps_xy():
    pts = _rng(3).normal(size=(500, 2))
    out = extrude(pts, ExtrusionSpec("cylindrical", 0.9), _rng(4))
    assert np.array_equal(out[:, :2], pts)


def test_cylindrical_height_is_uniform():
    l_z = 1.25
    out = extrude(np.zeros((6400, 2)), ExtrusionSpec("cylindrical", l_z), _rng(5))
    res = stats.kstest(out[:, 2], stats.uniform(loc=-l_z / 2, scale=l_z).cdf)
    assert res.pvalue > 0.01


def test_extrusion_spec_errors():
    with pytest.raises(ValueError):
        ExtrusionSpec("cylindrical", 0.0)
    with pytest.raises(ValueError):
        ExtrusionSpec("revolution", 1.0)
    with pytest.raises(ValueError):
        extrude(np.empty((0, 2)), ExtrusionSpec("conical", 1.0), _rng())


def test_revolve_quarter_turns():
    out = revolve([(1.0, 0.0)], RevolutionSpec(4, 0.0), _rng())
    expected = [(1, 0, 0), (0, 0, -1), (-1, 0, 0), (0, 0, 1)]
    assert np.allclose(out, expected, atol=1e-12, rtol=0)


def test_revolve_axis_point_is_fixed():
    out = revolve([(0.0, 0.7)], RevolutionSpec(37, 3.4), _rng())
    assert np.all(out == np.array([0.0, 0.7, 0.0]))


def test_revolve_jitter_bound():
    spec = RevolutionSpec(100, 3.4)
    out = revolve([(1.0, 0.2)], spec, _rng(6))
    theta = np.arctan2(-out[:, 2], out[:, 0])
    grid = 2 * math.pi * np.arange(100) / 100
    dev = np.angle(np.exp(1j * (theta - grid)))
    assert np.max(np.abs(dev)) <= math.radians(3.4) + 1e-12
    assert np.allclose(out[:, 1], 0.2)


def test_revolve_sizes_and_errors():
    out = revolve(_rng(7).uniform(size=(64, 2)), RevolutionSpec(), _rng(8))
    assert out.shape == (6400, 3)
    with pytest.raises(ValueError):
        revolve(np.empty((0, 2)), RevolutionSpec(), _rng())
    with pytest.raises(ValueError):
        RevolutionSpec(0, 1.0)
    with pytest.raises(ValueError):
        RevolutionSpec(10, -1.0)


def test_revolution_is_rotation_invariant_about_y():
    spec = sample_params("bezier", _rng(9))
    cloud, info = build_solid(spec, SolidConfig(), _rng(10))
    assert info["construction"] == "revolution"
    diag = bbox_diagonal(cloud)
    for a in _rng(11).uniform(0, 2 * math.pi, 3):
        c, s = math.cos(a), math.sin(a)
        rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
        assert chamfer(cloud, cloud @ rot.T) < 5e-3 * diag


def test_build_solid_point_budget():
    cfg = SolidConfig()
    cloud, info = build_solid(CurveSpec("mouth", a=1), cfg, _rng(12))
    assert cloud.shape == (6400, 3)
    assert info["construction"] in ("cylindrical", "conical")
    assert cfg.lz_range[0] <= info["l_z"] <= cfg.lz_range[1]
    cloud, info = build_solid(sample_params("bezier", _rng(13)), cfg, _rng(14))
    assert info["profile_points"] == 64 and cloud.shape == (6400, 3)


def test_conic_probability():
    # the extrusion choice does not depend on the sampling resolution
    cfg = SolidConfig(n=2, pr_conic=0.5)
    spec = CurveSpec("astroid", a=1)
    rng = _rng(15)
    conical = sum(build_solid(spec, cfg, rng)[1]["construction"] == Construction.CONICAL.value
                  for _ in range(10_000))
    assert abs(conical / 10_000 - 0.5) <= 0.02


def test_build_solid_is_deterministic():
    spec = sample_params("geometric_petal", _rng(16))
    a, ia = build_solid(spec, SolidConfig(), _rng(17))
    b, ib = build_solid(spec, SolidConfig(), _rng(17))
    assert np.array_equal(a, b) and ia == ib
