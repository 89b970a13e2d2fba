"""Learning to map targets onto the checkerboard cone.

Two variants are compared against the exact projection of each validation
target: a single ConstraintLayer whose outputs are feasible by
construction, and a plain FC(d, d) whose outputs are projected with
Dykstra's algorithm at evaluation time.
"""
from __future__ import annotations

import time

import numpy as np

from ..datakit import Dataset, batches, load_mnist, synthetic_dataset
from ..netkit import Adam, PlateauScheduler
from ..polyhedra import HRep, checkerboard_hrep, dd_convert, expand_generators, max_violation
from ..projector import project_batch
from ..tensorkit import Tensor, no_grad
from .config import DataConfig, ProjectionExperimentConfig, to_dict
from .metrics import MetricsLog
from .models import ProjectionNet, save_model


def make_dataset(data: DataConfig, side: int, seed: int) -> Dataset:
    if data.synthetic:
        n = data.n_train + data.n_val + data.n_test
        return synthetic_dataset(side, n, seed, data.domain, data.n_val, data.n_test)
    ds = load_mnist(data.dir, data.domain, data.n_val)
    if ds.d != side * side:
        raise ValueError(f"images have {ds.d} pixels, config expects side {side}")
    return ds


def violation(h: HRep, z) -> float:
    """Largest constraint excess ``max(0, max_i a_i z)`` over a batch."""
    z = np.atleast_2d(z)
    if z.shape[0] == 0:
        return 0.0
    return float(max(0.0, max_violation(h, z).max()))


def mse(z, y) -> float:
    return float(np.mean((np.asarray(z) - np.asarray(y)) ** 2))


def box_on(cfg, epoch) -> bool:
    """Whether outputs are box-scaled after ``epoch`` completed epochs."""
    return cfg.box_activation_epoch is not None and epoch >= cfg.box_activation_epoch


def build_projection_model(cfg: ProjectionExperimentConfig, h: HRep, rng):
    d = cfg.side * cfg.side
    if cfg.variant == "constrained":
        v = dd_convert(h)
        model = ProjectionNet(d, expand_generators(v), rng, hrep=h)
        model.layer.vrep = v
        return model
    return ProjectionNet(d, None, rng)


def _evaluate(model, h, y, box, tol):
    model.eval()
    with no_grad():
        z = model(Tensor(y)).data
    model.train()
    if not model.constrained:
        z = project_batch(h, box, z, tol)
    return z


def run_projection_experiment(cfg: ProjectionExperimentConfig, out_dir=None,
                              progress=None) -> MetricsLog:
    """Train one variant and log validation MSE against the exact optimum.

    The optimum projects each validation target onto the cone, intersected
    with the unit box when a box schedule is configured. Only epochs whose
    outputs obey that same feasible set count towards the best loss.
    """
    t_start = time.perf_counter()
    ds = make_dataset(cfg.data, cfg.side, cfg.seed)
    h = checkerboard_hrep(cfg.side, cfg.tiles_per_side)
    rng = np.random.default_rng(cfg.seed)
    use_box = cfg.box_activation_epoch is not None
    y_val = ds.val
    optimum = mse(project_batch(h, use_box, y_val, cfg.projection_tol), y_val)

    model = build_projection_model(cfg, h, rng)
    opt = Adam(model.parameters(), lr=cfg.lr)
    sched = PlateauScheduler(cfg.scheduler_factor, cfg.scheduler_patience)
    log = MetricsLog()

    def record(epoch, train_loss, seconds):
        box = box_on(cfg, epoch)
        model.set_box(box)
        z = _evaluate(model, h, y_val, box, cfg.projection_tol)
        val = mse(z, y_val)
        log.append(epoch=epoch, train_loss=train_loss, val_loss=val, lr=opt.lr,
                   max_violation=violation(h, z),
                   max_abs=float(np.abs(z).max(initial=0.0)), box_active=box,
                   seconds=seconds)
        if progress:
            progress(log.records[-1])
        return val

    record(0, None, 0.0)
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        model.set_box(box_on(cfg, epoch - 1))
        total, count = 0.0, 0
        for yb in batches(ds, cfg.batch_size, shuffle_seed=cfg.seed, epoch=epoch):
            if yb.shape[0] < 2:
                continue  # batch norm needs two samples
            opt.zero_grad()
            diff = model(yb) - yb
            loss = (diff * diff).mean()
            loss.backward()
            opt.step()
            total += loss.item() * yb.shape[0]
            count += yb.shape[0]
        val = record(epoch, total / max(count, 1), time.perf_counter() - t0)
        opt.lr = sched.step(val, opt.lr)

    eligible = [r for r in log.records if r["epoch"] > 0 and (r["box_active"] or not use_box
                                                            or not model.constrained)]
    best = min(eligible, key=lambda r: r["val_loss"])
    log.summary = {
        "variant": cfg.variant,
        "seed": cfg.seed,
        "optimum": optimum,
        "best_val_loss": best["val_loss"],
        "best_epoch": best["epoch"],
        "gap": best["val_loss"] / optimum if optimum > 0 else float("nan"),
        "max_violation": max(r["max_violation"] for r in log.records),
        "total_seconds": time.perf_counter() - t_start,
    }
    if model.constrained:
        log.summary["n_r"] = model.layer.n_r
    if out_dir is not None:
        log.write(out_dir)
        save_model(f"{out_dir}/checkpoint", model, config=to_dict(cfg), hrep=h,
                   vrep=model.layer.vrep if model.constrained else None,
                   optimizer=opt.metadata())
    return log
