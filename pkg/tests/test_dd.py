import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conecraft.polyhedra import (DimensionMismatch, HRep, NumericalDegeneracyWarning,
                                 ToleranceConfig, VRep, adjacency_test, box_cone_hrep,
                                 checkerboard_hrep, dd_convert, dd_insert_halfspace,
                                 expand_generators, initial_pair, split_lineality)
from conecraft.polyhedra.dd import dedupe_rays
from oracles import bruteforce_rays, cone_member_residual, random_system, same_columns


def convert(a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalDegeneracyWarning)
        return dd_convert(HRep(np.asarray(a, dtype=float)), **kw)


def test_orthant():
    v = convert(-np.eye(3))
    assert v.n_lin == 0
    assert same_columns(v.rays, np.eye(3))


def test_unconstrained_space():
    v = dd_convert(HRep.empty(2))
    assert v.n_pointed == 0
    np.testing.assert_allclose(v.lineality.T @ v.lineality, np.eye(2), atol=1e-12)


def test_halfplane_has_line_and_ray():
    v = convert([[0.0, -1.0]])
    assert (v.n_pointed, v.n_lin) == (1, 1)
    np.testing.assert_allclose(v.rays[:, 0], [0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(v.lineality[:, 0]), [1.0, 0.0], atol=1e-12)


def test_zero_cone():
    # x <= 0 and -x <= 0 in one dimension leaves only the origin
    v = convert([[1.0], [-1.0]])
    assert (v.n_pointed, v.n_lin) == (0, 0)


def test_checkerboard_generator_count():
    v = dd_convert(checkerboard_hrep(28, 4))
    assert (v.n_pointed, v.n_lin, v.n_r) == (16, 768, 1552)
    assert expand_generators(v).shape == (784, 1552)


@pytest.mark.parametrize("d", range(3, 9))
def test_box_cone_has_2_to_d_rays(d):
    v = dd_convert(box_cone_hrep(d))
    assert (v.n_pointed, v.n_lin) == (2 ** d, 0)
    # the rays are (±1, ..., ±1, 1) up to scale
    scaled = v.rays / v.rays[-1]
    np.testing.assert_allclose(np.abs(scaled), 1.0, atol=1e-9)


def test_dimension_errors():
    with pytest.raises(DimensionMismatch):
        dd_convert(HRep(np.zeros((0, 0))))
    with pytest.raises(ValueError):
        dd_convert(HRep(-np.eye(2)), order="random")


def test_split_lineality_orthant_is_rotation():
    lin, red, lift = split_lineality(HRep(-np.eye(2)))
    assert lin.shape == (2, 0)
    np.testing.assert_allclose(lift.T @ lift, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(red.a_matrix, -lift, atol=1e-12)


def test_split_lineality_rank_deficient():
    a = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]])
    lin, red, lift = split_lineality(HRep(a))
    assert lin.shape == (3, 2) and lift.shape == (3, 1)
    np.testing.assert_allclose(a @ lin, 0.0, atol=1e-12)


def test_insert_halfspace_cuts_quadrant():
    # start from the quadrant {x >= 0, y >= 0}; add x - y <= 0
    pair = initial_pair(-np.eye(2), [0, 1])
    out = dd_insert_halfspace(pair, np.array([1.0, -1.0]))
    expect = np.array([[0.0, 1.0], [1.0, 1.0]]).T / np.array([1.0, np.sqrt(2)])
    assert same_columns(out.rays, expect)
    assert out.active_sets.shape == (2, 3)


def test_insert_redundant_halfspace_keeps_rays():
    pair = initial_pair(-np.eye(3), [0, 1, 2])
    out = dd_insert_halfspace(pair, -np.ones(3))
    assert same_columns(out.rays, pair.rays)


def test_adjacency_in_square_cone():
    # pyramid over a square: four rays, neighbours adjacent, diagonals not
    rays = np.array([[1, 1, 1], [-1, 1, 1], [-1, -1, 1], [1, -1, 1]], dtype=float).T
    a = np.array([[1, 0, -1], [0, 1, -1], [-1, 0, -1], [0, -1, -1]], dtype=float)
    act = np.abs(a @ rays).T < 1e-12
    from conecraft.polyhedra import DDPair
    pair = DDPair(HRep(a), VRep(rays, np.zeros((3, 0))), act)
    assert adjacency_test(pair, 0, 1)
    assert adjacency_test(pair, 1, 2)
    assert not adjacency_test(pair, 0, 2)
    with pytest.raises(ValueError):
        adjacency_test(pair, 1, 1)


def test_dedupe_drops_positive_multiples_only():
    r = np.array([[1.0, 2.0, -1.0], [0.0, 0.0, 0.0]])
    out = dedupe_rays(r)
    assert out.shape[1] == 2


def test_degeneracy_band_is_reported():
    # a ray lands just past eps_class on the new row, inside the 10x band
    a = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, -1e-9 * 3]])
    with pytest.warns(NumericalDegeneracyWarning):
        v = dd_convert(HRep(a), ToleranceConfig(eps_class=1e-9), order="input")
    assert v.warnings


@settings(max_examples=150)
@given(seed=st.integers(0, 2 ** 32 - 1), order=st.sampled_from(["greedy", "input"]))
def test_rays_match_bruteforce_enumeration(seed, order):
    a = random_system(np.random.default_rng(seed))
    v = convert(a, order=order)
    rays, lin = bruteforce_rays(a)
    assert v.n_lin == lin.shape[1]
    assert same_columns(v.rays, rays)


@settings(max_examples=60)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_generators_are_sound_and_complete(seed):
    rng = np.random.default_rng(seed)
    a = random_system(rng)
    v = convert(a)
    gens = expand_generators(v)
    if len(a) and gens.shape[1]:
        assert (a @ gens).max() <= 1e-9 * np.abs(a).max()
    # rejection-sampled feasible points lie in the generated cone (scipy oracle)
    pts = rng.standard_normal((400, a.shape[1]))
    if len(a):
        pts = pts[(pts @ a.T).max(axis=1) <= 0]
    for z in pts[:20]:
        assert cone_member_residual(v.rays, v.lineality, z) < 1e-8


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_insertion_order_does_not_change_the_cone(seed):
    a = random_system(np.random.default_rng(seed))
    g = convert(a, order="greedy")
    i = convert(a, order="input")
    assert g.n_lin == i.n_lin
    assert same_columns(g.rays, i.rays)


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_row_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    a = random_system(rng)
    perm = rng.permutation(len(a))
    assert same_columns(convert(a).rays, convert(a[perm]).rays)


@given(seed=st.integers(0, 2 ** 32 - 1), scale=st.floats(1e-3, 1e3))
def test_row_scaling_invariance(seed, scale):
    a = random_system(np.random.default_rng(seed))
    assert same_columns(convert(a).rays, convert(a * scale).rays)
