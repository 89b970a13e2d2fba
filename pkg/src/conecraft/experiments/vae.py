"""Variational autoencoder whose decoder ends in a ConstraintLayer."""
from __future__ import annotations

import time

import numpy as np

from ..netkit import Adam, PlateauScheduler
from ..polyhedra import HRep, checkerboard_hrep, dd_convert, expand_generators, read_hrep
from ..tensorkit import Tensor, no_grad
from .config import VAEConfig, to_dict
from .metrics import MetricsLog
from .models import VAE, gaussian_kl, load_model, save_model
from ..datakit import batches
from .projection import box_on, make_dataset, violation


def vae_loss(model: VAE, x, eps):
    """Per-batch mean negative ELBO (Gaussian likelihood with identity
    covariance, constant term dropped) and the reconstructions."""
    recon, mu, logsig = model(x, eps)
    diff = recon - x
    nll = (diff * diff).sum(axis=1) * 0.5
    return (nll + gaussian_kl(mu, logsig)).mean(), recon


def constraint_set(cfg: VAEConfig) -> HRep:
    if cfg.hrep_path:
        return read_hrep(cfg.hrep_path)
    return checkerboard_hrep(cfg.side, cfg.tiles_per_side)


def build_vae(cfg: VAEConfig, h: HRep, rng):
    d = cfg.side * cfg.side
    if h.d != d:
        raise ValueError(f"constraints have d={h.d}, images have {d} pixels")
    if cfg.variant == "constrained":
        v = dd_convert(h)
        model = VAE(d, cfg.latent_dim, cfg.hidden_dim, expand_generators(v), rng, hrep=h)
        model.constraint.vrep = v
        return model
    return VAE(d, cfg.latent_dim, cfg.hidden_dim, None, rng)


def decode_prior(model: VAE, n: int, seed: int) -> np.ndarray:
    """Decode ``n`` latent draws from N(0, I) in eval mode."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, model.latent_dim))
    if n == 0:
        return np.zeros((0, model.d))
    was_training = model.training
    model.eval()
    with no_grad():
        out = model.decode(Tensor(z)).data
    model.train(was_training)
    return out


def feasibility_report(h: HRep, images: np.ndarray, eps_layer: float) -> dict:
    """Per-sample ``max(Az)`` and ``|z|_inf`` with an overall verdict."""
    if images.shape[0] == 0:
        return {"n": 0, "max_az": [], "max_abs": [], "feasible": True, "in_box": True}
    az = (images @ h.a_matrix.T).max(axis=1) if h.m else np.zeros(images.shape[0])
    mabs = np.abs(images).max(axis=1)
    return {"n": int(images.shape[0]), "max_az": az.tolist(), "max_abs": mabs.tolist(),
            "feasible": bool(az.max() <= eps_layer),
            "in_box": bool(mabs.max() <= 1.0 + 1e-12)}


def run_vae_experiment(cfg: VAEConfig, out_dir=None, progress=None,
                       n_prior_samples=1000) -> MetricsLog:
    t_start = time.perf_counter()
    ds = make_dataset(cfg.data, cfg.side, cfg.seed)
    h = constraint_set(cfg)
    rng = np.random.default_rng(cfg.seed)
    model = build_vae(cfg, h, rng)
    opt = Adam(model.parameters(), lr=cfg.lr)
    sched = PlateauScheduler(cfg.scheduler_factor, cfg.scheduler_patience)
    noise = np.random.default_rng([cfg.seed, 1])
    x_val = ds.val
    eps_val = np.random.default_rng([cfg.seed, 2]).standard_normal((len(x_val), cfg.latent_dim))
    log = MetricsLog()

    def record(epoch, train_loss, seconds):
        box = box_on(cfg, epoch)
        model.set_box(box)
        model.eval()
        with no_grad():
            loss, recon = vae_loss(model, Tensor(x_val), eps_val)
        model.train()
        log.append(epoch=epoch, train_loss=train_loss, val_loss=loss.item(), lr=opt.lr,
                   max_violation=violation(h, recon.data),
                   max_abs=float(np.abs(recon.data).max(initial=0.0)), box_active=box,
                   seconds=seconds)
        if progress:
            progress(log.records[-1])
        return loss.item()

    record(0, None, 0.0)
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        model.set_box(box_on(cfg, epoch - 1))
        total, count = 0.0, 0
        for xb in batches(ds, cfg.batch_size, shuffle_seed=cfg.seed, epoch=epoch):
            if xb.shape[0] < 2:
                continue  # batch norm needs two samples
            eps = noise.standard_normal((xb.shape[0], cfg.latent_dim))
            opt.zero_grad()
            loss, _ = vae_loss(model, xb, eps)
            loss.backward()
            opt.step()
            total += loss.item() * xb.shape[0]
            count += xb.shape[0]
        val = record(epoch, total / max(count, 1), time.perf_counter() - t0)
        opt.lr = sched.step(val, opt.lr)

    elbo_first = -log.records[1]["train_loss"]
    elbo_last = -log.records[-1]["train_loss"]
    samples = decode_prior(model, n_prior_samples, cfg.seed)
    eps_layer = model.constraint.eps_layer if model.constrained else 0.0
    rep = feasibility_report(h, samples, eps_layer)
    log.summary = {
        "variant": cfg.variant,
        "seed": cfg.seed,
        "elbo_epoch1": elbo_first,
        "elbo_final": elbo_last,
        "elbo_improvement": (elbo_last - elbo_first) / abs(elbo_first),
        "prior_samples": rep["n"],
        "prior_max_az": max(rep["max_az"], default=0.0),
        "prior_max_abs": max(rep["max_abs"], default=0.0),
        "prior_feasible": rep["feasible"],
        "prior_in_box": rep["in_box"],
        "eps_layer": eps_layer,
        "max_violation": max(r["max_violation"] for r in log.records),
        "total_seconds": time.perf_counter() - t_start,
    }
    if out_dir is not None:
        log.write(out_dir)
        save_model(f"{out_dir}/checkpoint", model, config=to_dict(cfg), hrep=h,
                   vrep=model.constraint.vrep if model.constrained else None,
                   optimizer=opt.metadata())
    return log


def sample_vae(checkpoint, n: int, seed: int):
    """Decode ``n`` prior samples from a saved VAE; returns ``(images, report)``."""
    model, _, h = load_model(checkpoint)
    images = decode_prior(model, n, seed)
    if h is None:
        h = HRep.empty(model.d)
    eps_layer = model.constraint.eps_layer if model.constrained else 0.0
    return images, feasibility_report(h, images, eps_layer)
