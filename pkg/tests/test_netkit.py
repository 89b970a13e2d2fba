import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conecraft.netkit import (Adam, AdamState, CheckpointCorrupt, ConstraintLayer, Linear,
                              PlateauScheduler, Sequential, ReLU, adam_step, box_scale,
                              general_polyhedron_combine, load_checkpoint, save_checkpoint)
from conecraft.polyhedra import HRep, checkerboard_hrep, dd_convert, expand_generators
from conecraft.tensorkit import ShapeMismatch, Tensor, no_grad
from oracles import adam_reference

H16 = checkerboard_hrep(16, 2)
RAYS16 = expand_generators(dd_convert(H16))


def test_linear_init_bounds(rng):
    lin = Linear(16, 8, rng)
    assert np.abs(lin.weight.data).max() <= 0.25
    assert lin.weight.shape == (8, 16)
    assert Linear(16, 8, rng, zero_bias=True).bias.data.tolist() == [0.0] * 8


def test_parameter_and_buffer_names(rng):
    layer = ConstraintLayer(RAYS16, 256, rng)
    names = [n for n, _ in layer.named_parameters()]
    assert names == ["bn.weight", "bn.bias", "affine.weight", "affine.bias"]
    assert [n for n, _ in layer.named_buffers()] == ["rays", "bn.running_mean", "bn.running_var"]
    seq = Sequential(Linear(2, 3, rng), ReLU(), Linear(3, 1, rng))
    assert [n for n, _ in seq.named_parameters()] == [
        "layers.0.weight", "layers.0.bias", "layers.2.weight", "layers.2.bias"]


def test_state_dict_roundtrip_and_validation(rng):
    a = ConstraintLayer(RAYS16, 256, rng)
    b = ConstraintLayer(np.zeros_like(RAYS16), 256, np.random.default_rng(9))
    b.load_state_dict(a.state_dict())
    x = Tensor(rng.standard_normal((5, 256)))
    a.eval(), b.eval()
    np.testing.assert_array_equal(a(x).data, b(x).data)
    sd = a.state_dict()
    sd["affine.weight"] = sd["affine.weight"][:, :3]
    with pytest.raises(ShapeMismatch):
        b.load_state_dict(sd)
    with pytest.raises(KeyError):
        b.load_state_dict({"nope": np.zeros(1)})


def test_constraint_layer_rejects_infeasible_rays(rng):
    with pytest.raises(ValueError):
        ConstraintLayer(-RAYS16[:, -4:] + 1.0, 4, rng, hrep=H16)


def test_from_hrep_counts(rng):
    layer = ConstraintLayer.from_hrep(H16, 256, rng)
    assert layer.n_r == 2 * 252 + 4
    assert layer.eps_layer == pytest.approx(1e-8 * layer.n_r)


@settings(max_examples=25)
@given(seed=st.integers(0, 2 ** 32 - 1), box=st.booleans(), scale=st.floats(0.1, 100.0))
def test_constraint_layer_outputs_are_feasible(seed, box, scale):
    rng = np.random.default_rng(seed)
    layer = ConstraintLayer(RAYS16, 8, rng, box_active=box)
    layer.affine.weight.data *= scale
    layer.affine.bias.data = rng.standard_normal(layer.n_r) * scale
    x = Tensor(rng.standard_normal((200, 8)) * scale)
    with no_grad():
        z = layer(x).data
    assert (z @ H16.a_matrix.T).max() <= layer.eps_layer
    if box:
        assert np.abs(z).max() <= 1.0 + 1e-12


def test_box_scale_cases():
    out = box_scale(Tensor([[0.5, -0.2], [2.0, -4.0], [1.0, 0.0]])).data
    np.testing.assert_allclose(out, [[0.5, -0.2], [0.5, -1.0], [1.0, 0.0]])


def test_box_scale_identity_gradient_at_tie():
    x = Tensor([[1.0, 0.5]], requires_grad=True)
    (box_scale(x) * Tensor([[2.0, 3.0]])).sum().backward()
    np.testing.assert_allclose(x.grad, [[2.0, 3.0]])


def test_general_polyhedron_combine_stays_in_hull(rng):
    verts = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    rays = np.array([[1.0], [1.0]])
    z = general_polyhedron_combine(verts, rays, rng.standard_normal((50, 3)),
                                   rng.standard_normal((50, 1))).data
    # the set is {x >= 0, y >= 0, x + y >= 0} shifted along (1, 1): x >= 0, y >= 0
    assert z.min() >= -1e-12


def test_adam_matches_longhand_reference():
    w = Tensor(np.array([3.0]), requires_grad=True)
    opt = Adam([w], lr=0.1)
    for _ in range(25):
        opt.zero_grad()
        (w * w).sum().backward()
        opt.step()
    ref = adam_reference(lambda x: 2 * x, 3.0, 0.1, 25)
    assert w.data[0] == pytest.approx(ref, rel=1e-12)


@given(g=st.floats(1e-3, 1e3), lr=st.floats(1e-5, 1e-1))
def test_adam_first_step_has_size_lr(g, lr):
    p = Tensor(np.array([0.0]), requires_grad=True)
    adam_step(AdamState(), [p], [np.array([g])], lr)
    # |g| / (|g| + eps) differs from one by at most eps / |g|
    assert abs(p.data[0] + lr) <= lr * (1e-8 / g + 1e-14)


def test_plateau_scheduler_reduces_after_patience():
    s = PlateauScheduler(factor=0.1, patience=2)
    lr = 1.0
    lrs = []
    for v in [5.0, 4.0, 4.0, 4.0, 4.0, 3.0]:
        lr = s.step(v, lr)
        lrs.append(lr)
    assert lrs == [1.0, 1.0, 1.0, 1.0, pytest.approx(0.1), pytest.approx(0.1)]


def test_checkpoint_roundtrip(tmp_path, rng):
    v = dd_convert(H16)
    tensors = {"w": rng.standard_normal((3, 4)), "b": rng.standard_normal(4)}
    save_checkpoint(tmp_path / "c", tensors, {"kind": "x"}, config={"lr": 1e-4},
                    hrep=H16, vrep=v, box_active=True, optimizer={"kind": "adam"})
    manifest, loaded, h, vv = load_checkpoint(tmp_path / "c")
    for k in tensors:
        np.testing.assert_array_equal(loaded[k], tensors[k])
    np.testing.assert_array_equal(h.a_matrix, H16.a_matrix)
    assert vv.n_r == v.n_r and manifest["box_active"]


def test_checkpoint_corruption(tmp_path):
    save_checkpoint(tmp_path / "c", {"w": np.ones((2, 2))}, {"kind": "x"})
    (tmp_path / "c" / "w.bin").write_bytes(b"\0" * 8)
    with pytest.raises(CheckpointCorrupt):
        load_checkpoint(tmp_path / "c")
    (tmp_path / "c" / "w.bin").unlink()
    with pytest.raises(CheckpointCorrupt):
        load_checkpoint(tmp_path / "c")
    (tmp_path / "c" / "manifest.json").write_text(json.dumps({"format": "other"}))
    with pytest.raises(CheckpointCorrupt):
        load_checkpoint(tmp_path / "c")
    with pytest.raises(CheckpointCorrupt):
        load_checkpoint(tmp_path / "missing")
