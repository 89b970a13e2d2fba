"""Inference timing: constrained forward pass against forward plus projection."""
from __future__ import annotations

import time

import numpy as np
from threadpoolctl import threadpool_limits

from ..datakit import synthetic_images
from ..polyhedra import HRep
from ..projector import project_batch
from ..tensorkit import Tensor, no_grad
from .models import load_model


def _time(fn, n_runs, warmup):
    for _ in range(warmup):
        fn()
    out = np.empty(n_runs)
    for i in range(n_runs):
        t0 = time.perf_counter()
        fn()
        out[i] = time.perf_counter() - t0
    return out


def bench_inference(checkpoint_constrained, checkpoint_unconstrained, h: HRep = None,
                    n_runs=100, batch=256, warmup=3, box=True, seed=0, inputs=None):
    """Mean and std wall-clock of both inference routes, single-threaded.

    Inputs default to synthetic images of matching size. For VAE checkpoints
    the decoders are timed on latent draws from N(0, I).
    """
    con, _, h_con = load_model(checkpoint_constrained)
    unc, _, h_unc = load_model(checkpoint_unconstrained)
    h = h if h is not None else (h_con if h_con is not None else h_unc)
    if h is None:
        raise ValueError("no constraint set given and none stored in the checkpoints")
    if con.topology()["d"] != unc.topology()["d"]:
        raise ValueError("checkpoints have different output dimensions")
    is_vae = con.topology()["kind"] == "vae"
    con.set_box(box)
    if inputs is None:
        if is_vae:
            inputs = np.random.default_rng(seed).standard_normal((batch, con.latent_dim))
        else:
            side = int(round(np.sqrt(h.d)))
            inputs = synthetic_images(side, batch, seed)
    x = Tensor(inputs)
    fwd_c = con.decode if is_vae else con
    fwd_u = unc.decode if is_vae else unc

    def constrained():
        with no_grad():
            return fwd_c(x).data

    def projected():
        with no_grad():
            z = fwd_u(x).data
        return project_batch(h, box, z)

    with threadpool_limits(limits=1):
        t_c = _time(constrained, n_runs, warmup)
        t_u = _time(projected, n_runs, warmup)
    return {
        "batch": int(x.shape[0]),
        "n_runs": n_runs,
        "box": box,
        "constrained_mean": float(t_c.mean()),
        "constrained_std": float(t_c.std()),
        "projection_mean": float(t_u.mean()),
        "projection_std": float(t_u.std()),
        "ratio": float(t_u.mean() / t_c.mean()),
    }
