import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import lsq_linear

from conecraft.polyhedra import (DimensionMismatch, HRep, VRep, checkerboard_hrep,
                                 cone_residual, dd_convert, verify_vrep)
from conecraft.polyhedra.nnls import nnls
from conecraft.polyhedra.verify import project_cone, sample_feasible
from oracles import random_system


def test_verify_passes_on_orthant():
    h = HRep(-np.eye(3))
    rep = verify_vrep(h, dd_convert(h))
    assert rep.passed and rep.sampling == "rejection"
    assert rep.n_samples == 100


def test_verify_detects_missing_ray():
    h = HRep(-np.eye(3))
    v = VRep(rays=np.eye(3)[:, :2], lineality=np.zeros((3, 0)))
    rep = verify_vrep(h, v)
    assert not rep.passed
    assert any("completeness" in f for f in rep.failures)


def test_verify_detects_unsound_ray():
    h = HRep(-np.eye(2))
    v = VRep(rays=np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 0.0]]), lineality=np.zeros((2, 0)))
    rep = verify_vrep(h, v)
    assert not rep.passed
    assert rep.soundness_max > 0.5


def test_verify_detects_bad_lineality():
    h = HRep(np.array([[0.0, -1.0]]))
    v = VRep(rays=np.array([[0.0], [1.0]]), lineality=np.array([[0.6], [0.8]]))
    rep = verify_vrep(h, v)
    assert any("kernel" in f for f in rep.failures)


def test_verify_thin_cone_uses_projection_fallback():
    # a wedge of angle ~1e-4 rad: rejection sampling essentially never hits it
    a = np.array([[-1e-4, 1.0], [-1e-4, -1.0]])  # |y| <= 1e-4 x
    h = HRep(a)
    rep = verify_vrep(h, dd_convert(h), n_samples=50)
    assert rep.passed
    assert "projection" in rep.sampling


def test_verify_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        verify_vrep(HRep(-np.eye(2)), VRep(np.eye(3), np.zeros((3, 0))))


def test_checkerboard_verifies():
    h = checkerboard_hrep(8, 2)
    assert verify_vrep(h, dd_convert(h)).passed


def test_cone_residual_of_outside_point():
    v = VRep(rays=np.eye(2), lineality=np.zeros((2, 0)))
    assert cone_residual(v, [1.0, 2.0]) < 1e-14
    assert cone_residual(v, [-1.0, 0.0]) == pytest.approx(1.0)


def test_project_cone_is_feasible_and_moreau():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 4))
    h = HRep(a)
    for y in rng.standard_normal((20, 4)):
        z = project_cone(h, y)
        assert (a @ z).max() <= 1e-10
        # Moreau: residual is orthogonal to the projection
        assert abs((y - z) @ z) < 1e-10


def test_sample_feasible_on_zero_cone():
    h = HRep(np.array([[1.0], [-1.0]]))
    pts, how = sample_feasible(h, 10, np.random.default_rng(0))
    assert pts.shape == (0, 1) and how == "projection"


@settings(max_examples=200)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_nnls_matches_bounded_least_squares(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 8, size=2)
    a = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    x, res = nnls(a, b)
    assert x.min() >= 0
    ref = lsq_linear(a, b, bounds=(0, np.inf), method="bvls", tol=1e-14)
    assert res == pytest.approx(np.linalg.norm(a @ ref.x - b), abs=1e-9)
    assert res == pytest.approx(np.linalg.norm(a @ x - b), abs=1e-12)


@settings(max_examples=40)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_verify_accepts_dd_output(seed):
    a = random_system(np.random.default_rng(seed))
    h = HRep(a)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v = dd_convert(h)
    rep = verify_vrep(h, v, n_samples=40, seed=seed % 1000)
    assert rep.passed, rep.failures
