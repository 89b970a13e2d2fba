"""Lawson-Hanson active-set nonnegative least squares."""
from __future__ import annotations

import numpy as np


def nnls(a, b, max_iter=None, tol=None):
    """Solve ``argmin_{x >= 0} |a x - b|_2``.

    Returns ``(x, rnorm)`` with the residual recomputed from ``x``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = a.shape
    if b.shape != (m,):
        raise ValueError(f"right-hand side of shape {b.shape} for {m} rows")
    if max_iter is None:
        max_iter = 3 * max(n, 1) + 30
    if tol is None:
        tol = 10 * np.finfo(float).eps * np.linalg.norm(a, 1) * max(m, n)
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = a.T @ (b - a @ x)
    outer = 0
    while np.any(~passive) and np.max(w[~passive], initial=-np.inf) > tol:
        outer += 1
        if outer > max_iter:
            break
        cand = np.where(~passive, w, -np.inf)
        passive[int(np.argmax(cand))] = True
        while True:
            s = np.zeros(n)
            idx = np.flatnonzero(passive)
            s[idx] = np.linalg.lstsq(a[:, idx], b, rcond=None)[0]
            if np.all(s[idx] > 0):
                break
            neg = idx[s[idx] <= 0]
            alpha = np.min(x[neg] / (x[neg] - s[neg]))
            x = x + alpha * (s - x)
            passive &= x > tol
            x[~passive] = 0.0
        x = s
        w = a.T @ (b - a @ x)
    return x, float(np.linalg.norm(a @ x - b))
