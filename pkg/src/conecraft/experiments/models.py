"""Model builders for the experiments, plus checkpoint round-trips."""
from __future__ import annotations

import numpy as np

from ..netkit import (ConstraintLayer, Linear, Module, ReLU, Sequential, Sigmoid,
                      load_checkpoint, save_checkpoint)
from ..tensorkit import Tensor, as_tensor, exp


class ProjectionNet(Module):
    """A single layer mapping targets to outputs.

    ``constrained`` wraps a ConstraintLayer, whose outputs lie in the cone
    by construction; otherwise a plain FC(d, d).
    """

    def __init__(self, d, rays=None, rng=None, hrep=None):
        self.constrained = rays is not None
        if self.constrained:
            self.layer = ConstraintLayer(rays, d, rng, hrep=hrep)
        else:
            self.layer = Linear(d, d, rng)

    @property
    def box_active(self):
        return self.constrained and self.layer.box_active

    def set_box(self, active):
        if self.constrained:
            self.layer.box_active = bool(active)

    def forward(self, y):
        return self.layer(y)

    def topology(self):
        if self.constrained:
            return {"kind": "projection", "variant": "constrained", "d": self.layer.d,
                    "n_r": self.layer.n_r, "box_active": self.layer.box_active}
        return {"kind": "projection", "variant": "unconstrained", "d": self.layer.out_features}


class VAE(Module):
    """Encoder FC(d, hidden)-ReLU with separate mean and log-std heads.

    The constrained decoder is FC(latent, hidden)-ReLU-FC(hidden, d)-sigmoid
    followed by a ConstraintLayer; the unconstrained one maps the sigmoid
    output affinely onto [-1, 1].
    """

    def __init__(self, d, latent_dim=2, hidden_dim=256, rays=None, rng=None, hrep=None):
        rng = rng if rng is not None else np.random.default_rng()
        self.encoder = Sequential(Linear(d, hidden_dim, rng), ReLU())
        self.mu_head = Linear(hidden_dim, latent_dim, rng)
        self.logsig_head = Linear(hidden_dim, latent_dim, rng)
        self.decoder = Sequential(Linear(latent_dim, hidden_dim, rng), ReLU(),
                                  Linear(hidden_dim, d, rng), Sigmoid())
        self.constrained = rays is not None
        if self.constrained:
            self.constraint = ConstraintLayer(rays, d, rng, hrep=hrep)
        self.latent_dim = latent_dim
        self.hidden_dim = hidden_dim
        self.d = d

    def set_box(self, active):
        if self.constrained:
            self.constraint.box_active = bool(active)

    @property
    def box_active(self):
        return self.constrained and self.constraint.box_active

    def encode(self, x):
        h = self.encoder(x)
        return self.mu_head(h), self.logsig_head(h)

    def decode(self, z):
        out = self.decoder(z)
        if self.constrained:
            return self.constraint(out)
        return out * 2.0 - 1.0

    def forward(self, x, eps):
        """Reconstruction, mean and log-std for inputs ``x`` and noise ``eps``."""
        mu, logsig = self.encode(x)
        z = mu + exp(logsig) * as_tensor(eps)
        return self.decode(z), mu, logsig

    def topology(self):
        topo = {"kind": "vae", "variant": "constrained" if self.constrained else "unconstrained",
                "d": self.d, "latent_dim": self.latent_dim, "hidden_dim": self.hidden_dim}
        if self.constrained:
            topo["n_r"] = self.constraint.n_r
            topo["box_active"] = self.constraint.box_active
        return topo


def gaussian_kl(mu, logsig):
    """Per-sample KL(N(mu, diag sigma^2) || N(0, I)) as an (n,) tensor."""
    return ((mu * mu + exp(logsig * 2.0) - 1.0 - logsig * 2.0) * 0.5).sum(axis=1)


def build_from_topology(topo, rng=None):
    """An uninitialised model with the shapes described by ``topo``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    d = topo["d"]
    rays = np.zeros((d, topo["n_r"])) if topo.get("variant") == "constrained" else None
    if topo["kind"] == "projection":
        model = ProjectionNet(d, rays, rng)
    elif topo["kind"] == "vae":
        model = VAE(d, topo["latent_dim"], topo["hidden_dim"], rays, rng)
    else:
        raise ValueError(f"unknown model kind {topo['kind']!r}")
    model.set_box(topo.get("box_active", False))
    return model


def save_model(path, model, *, config=None, hrep=None, vrep=None, optimizer=None):
    save_checkpoint(path, model.state_dict(), model.topology(), config=config, hrep=hrep,
                    vrep=vrep, box_active=model.box_active, optimizer=optimizer)


def load_model(path):
    """Returns ``(model, manifest, hrep)`` with the model in eval mode."""
    manifest, tensors, hrep, _ = load_checkpoint(path)
    model = build_from_topology(manifest["topology"])
    model.load_state_dict(tensors)
    if hrep is not None:
        if model.constrained and isinstance(model, ProjectionNet):
            model.layer.hrep = hrep
        elif model.constrained:
            model.constraint.hrep = hrep
    return model.eval(), manifest, hrep
