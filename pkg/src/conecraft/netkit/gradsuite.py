"""Finite-difference checks over every differentiable op and the constraint layer."""
from __future__ import annotations

import numpy as np

from .. import tensorkit as tk
from ..polyhedra import checkerboard_hrep
from .layers import ConstraintLayer, box_scale, general_polyhedron_combine

KINK_MARGIN = 1e-2


def _away_from_zero(x, margin=KINK_MARGIN):
    return np.where(x >= 0, x + margin, x - margin)


def _weighted(fn, w):
    """Scalarize ``fn`` with fixed weights so the whole Jacobian is probed."""
    return lambda t: (fn(t) * tk.Tensor(w)).sum()


def _cases(rng):
    n, f = 4, 3
    x = rng.standard_normal((n, f))
    other = rng.standard_normal((n, f))
    pos = rng.uniform(0.5, 2.0, (n, f))
    row = rng.standard_normal(f)
    col = rng.standard_normal((n, 1))
    mat = rng.standard_normal((f, 5))
    w_nf = rng.standard_normal((n, f))
    w_n5 = rng.standard_normal((n, 5))
    w_fn = rng.standard_normal((f, n))
    yield "add", lambda t: t + tk.Tensor(other), x, w_nf
    yield "add_row", lambda t: tk.Tensor(x) + t, row, w_nf
    yield "sub", lambda t: tk.Tensor(other) - t, x, w_nf
    yield "sub_col", lambda t: tk.Tensor(x) - t, col, w_nf
    yield "mul", lambda t: t * tk.Tensor(other), x, w_nf
    yield "mul_col", lambda t: tk.Tensor(x) * t, col, w_nf
    yield "div_num", lambda t: t / tk.Tensor(pos), x, w_nf
    yield "div_den", lambda t: tk.Tensor(x) / t, pos, w_nf
    yield "matmul_left", lambda t: tk.matmul(t, tk.Tensor(mat)), x, w_n5
    yield "matmul_right", lambda t: tk.matmul(tk.Tensor(x), t), mat, w_n5
    yield "transpose", tk.transpose, x, w_fn
    yield "sum", lambda t: tk.tsum(t, axis=0), x, rng.standard_normal(f)
    yield "sum_rows", lambda t: tk.tsum(t, axis=1), x, rng.standard_normal(n)
    yield "mean", lambda t: tk.mean(t, axis=0), x, rng.standard_normal(f)
    yield "reshape", lambda t: tk.reshape(t, (f, n)), x, w_fn
    yield "relu", tk.relu, _away_from_zero(x), w_nf
    yield "abs", tk.tabs, _away_from_zero(x), w_nf
    yield "sigmoid", tk.sigmoid, 3 * x, w_nf
    yield "exp", tk.exp, x, w_nf
    yield "log", tk.log, pos, w_nf
    yield "softmax", tk.softmax, x, w_nf
    yield "batch_norm_train", lambda t: tk.batch_norm(t, tk.BNState.create(f), True), x, w_nf
    state = tk.BNState.create(f)
    state.running_mean = rng.standard_normal(f)
    state.running_var = rng.uniform(0.5, 2.0, f)
    yield "batch_norm_eval", lambda t: tk.batch_norm(t, state, False), x, w_nf
    big = x * 3.0
    big[np.arange(n), np.abs(big).argmax(axis=1)] *= 1.5  # clear the argmax tie
    big[0] = 0.3 * np.tanh(big[0])  # one row inside the box
    yield "box_scale", box_scale, big, w_nf
    verts = rng.standard_normal((f, 3))
    rays = rng.standard_normal((f, 2))
    mu_pre = _away_from_zero(rng.standard_normal((n, 2)))
    yield ("polyhedron_logits", lambda t: general_polyhedron_combine(verts, rays, t, mu_pre),
           rng.standard_normal((n, 3)), w_nf)
    logits = rng.standard_normal((n, 3))
    yield ("polyhedron_rays", lambda t: general_polyhedron_combine(verts, rays, logits, t),
           mu_pre, w_nf)


def _constraint_layer_case(rng):
    """A training-mode constraint layer on a small checkerboard with every
    ray coefficient at least ``KINK_MARGIN`` away from the abs kink."""
    layer = ConstraintLayer.from_hrep(checkerboard_hrep(4, 2), 5, rng)
    for _ in range(100):
        x = rng.standard_normal((6, 5))
        with tk.no_grad():
            layer(tk.Tensor(x))
        if np.abs(layer.mu.data).min() > KINK_MARGIN:
            break
    else:
        raise RuntimeError("could not place inputs away from the abs kink")
    w = rng.standard_normal((6, layer.d))
    return layer, x, w


def run_gradcheck_suite(seed=0, h=1e-5) -> dict:
    """Maximum relative gradient error per op, keyed by op name."""
    rng = np.random.default_rng(seed)
    results = {}
    for name, fn, x, w in _cases(rng):
        results[name] = tk.grad_check(_weighted(fn, w), x, h)
    layer, x, w = _constraint_layer_case(rng)
    results["constraint_layer_input"] = tk.grad_check(
        _weighted(layer, w), x, h)
    for name, p in layer.named_parameters():
        results[f"constraint_layer_{name}"] = _param_check(layer, p, x, w, h)
    return results


def _param_check(layer, p, x, w, h=1e-5):
    """Compare a parameter's backprop gradient against central differences."""
    def loss():
        return (layer(tk.Tensor(x)) * tk.Tensor(w)).sum()

    layer.zero_grad()
    loss().backward()
    analytic = p.grad.copy()
    numeric = np.zeros_like(p.data)
    flat, nflat = p.data.reshape(-1), numeric.reshape(-1)
    with tk.no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = loss().item()
            flat[i] = orig - h
            fm = loss().item()
            flat[i] = orig
            nflat[i] = (fp - fm) / (2 * h)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max(initial=0.0))
