"""Adam and a reduce-on-plateau learning-rate schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(state: AdamState, params, grads, lr: float):
    """One bias-corrected Adam update, applied in place to ``params``."""
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"gradient {g.shape} for parameter {p.data.shape}")
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


class Adam:
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.state = AdamState(beta1=betas[0], beta2=betas[1], eps=eps)

    def step(self):
        adam_step(self.state, self.params, [p.grad for p in self.params], self.lr)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def metadata(self):
        s = self.state
        return {"kind": "adam", "lr": self.lr, "step": s.step,
                "beta1": s.beta1, "beta2": s.beta2, "eps": s.eps}


@dataclass
class PlateauScheduler:
    """Multiply the rate by ``factor`` once the validation loss has failed
    to improve for more than ``patience`` consecutive epochs."""

    factor: float = 0.1
    patience: int = 5
    best_val: float = math.inf
    num_bad: int = 0
    threshold: float = 1e-12

    def step(self, val_loss: float, lr: float) -> float:
        return scheduler_step(self, val_loss, lr)


def scheduler_step(s: PlateauScheduler, val_loss: float, lr: float) -> float:
    if val_loss < s.best_val - s.threshold:
        s.best_val = val_loss
        s.num_bad = 0
        return lr
    s.num_bad += 1
    if s.num_bad > s.patience:
        s.num_bad = 0
        return lr * s.factor
    return lr
