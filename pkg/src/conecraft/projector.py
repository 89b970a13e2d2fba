"""Orthogonal projection onto ``{z | A z <= 0}``, optionally intersected
with the box ``[-1, 1]^d``, by Dykstra's cyclic correction scheme.

The half-spaces are visited in row order and the box last. Every half-space
correction is a multiple of its normal, so only one scalar per row and
constraint is stored. Rows that exhaust the cycle budget get a KKT-checked
active-set polish, then an exact least-distance solve, before being
reported as not converged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .polyhedra import DimensionMismatch, HRep
from .polyhedra.nnls import nnls

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000


class ZeroRow(ValueError):
    pass


class NotConverged(RuntimeError):
    """Carries the best iterate(s) alongside the residuals."""

    def __init__(self, msg, z, iters, residual, rows=None):
        super().__init__(msg)
        self.z = z
        self.iters = iters
        self.residual = residual
        self.rows = rows


@dataclass
class ProjectionProblem:
    h: HRep
    y: np.ndarray
    box: bool = False
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.shape != (self.h.d,):
            raise DimensionMismatch(f"target of shape {self.y.shape} for d={self.h.d}")


class BatchResult(NamedTuple):
    z: np.ndarray
    iters: np.ndarray
    residual: np.ndarray
    converged: np.ndarray


def project_halfspace(a, z) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    nn = a @ a
    if nn == 0.0:
        raise ZeroRow("cannot project onto a half-space with zero normal")
    return z - max(0.0, a @ z) / nn * a


def _constraint_rows(a, d, box):
    """Stack the half-spaces and, if requested, the box faces as G z <= h."""
    if not box:
        return a, np.zeros(a.shape[0])
    g = np.vstack([a, np.eye(d), -np.eye(d)])
    return g, np.concatenate([np.zeros(a.shape[0]), np.ones(2 * d)])


def polish(g, hv, y, x, mult):
    """Exact projection of ``y`` onto ``{G z <= h}`` from an active-set guess.

    Candidate active sets come from the positive Dykstra multipliers
    ``mult`` and the near-tight rows at ``x``. A candidate is accepted only
    if the equality-constrained projection is feasible with nonnegative
    multipliers, i.e. satisfies the KKT conditions. Returns None otherwise.
    """
    scale = 1.0 + np.abs(y).max(initial=0.0)
    slack = g @ x - hv
    tight = np.abs(slack) <= 1e-6 * scale
    positive = mult > 0
    for sel in (positive | tight, positive, tight):
        idx = np.flatnonzero(sel)
        if len(idx) == 0:
            continue
        gs = g[idx]
        lam = np.linalg.lstsq(gs @ gs.T, gs @ y - hv[idx], rcond=None)[0]
        z = y - gs.T @ lam
        if np.abs(gs @ z - hv[idx]).max() > 1e-10 * scale:
            continue
        if (g @ z - hv).max() > 1e-12 * scale or lam.min() < -1e-12 * scale:
            continue
        return z
    return None


def least_distance(g, hv, y):
    """Exact projection onto ``{G z <= h}`` via least distance programming.

    With ``x = z - y`` the problem is ``min |x|`` s.t. ``-G x >= G y - h``,
    which reduces to one NNLS over ``[-G^T; (G y - h)^T]`` (Lawson-Hanson,
    LDP). Returns None if the set is empty.
    """
    gg = -g
    hh = g @ y - hv
    n = g.shape[1]
    e = np.vstack([gg.T, hh[None, :]])
    f = np.zeros(n + 1)
    f[n] = 1.0
    u, _ = nnls(e, f)
    r = e @ u - f
    if abs(r[n]) < 1e-14:
        return None
    return y - r[:n] / r[n]


def dykstra_batch(h: HRep, ys, box: bool = False, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> BatchResult:
    """Project every row of ``ys`` independently.

    A row stops iterating once one full cycle changes neither the iterate
    nor any correction term by ``tol`` or more (max norm). Later cycles of
    other rows leave it untouched, so a row's result does not depend on
    the rest of the batch.
    """
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    n, d = ys.shape
    if d != h.d:
        raise DimensionMismatch(f"batch of width {d} for d={h.d}")
    a = h.canonical().a_matrix
    norms2 = np.einsum("ij,ij->i", a, a)
    x = ys.copy()
    coef = np.zeros((n, a.shape[0]))
    box_inc = np.zeros((n, d)) if box else None
    iters = np.zeros(n, dtype=np.int64)
    residual = np.full(n, np.inf)
    converged = np.zeros(n, dtype=bool)
    active = np.arange(n)
    norms = np.sqrt(norms2)
    for cycle in range(1, max_iter + 1):
        xa = x[active]
        start = xa.copy()
        ca = coef[active]
        c_start = ca.copy()
        for k in range(a.shape[0]):
            ak = a[k]
            w = xa + ca[:, k:k + 1] * ak
            t = np.maximum(0.0, w @ ak) / norms2[k]
            xa = w - t[:, None] * ak
            ca[:, k] = t
        disp = np.abs(xa - start).max(axis=1, initial=0.0)
        if a.shape[0]:
            disp = np.maximum(disp, (np.abs(ca - c_start) * norms).max(axis=1))
        if box:
            qa = box_inc[active]
            w = xa + qa
            xa = np.clip(w, -1.0, 1.0)
            q_new = w - xa
            box_inc[active] = q_new
            disp = np.maximum(disp, np.abs(xa - start).max(axis=1, initial=0.0))
            disp = np.maximum(disp, np.abs(q_new - qa).max(axis=1, initial=0.0))
        x[active] = xa
        coef[active] = ca
        residual[active] = disp
        iters[active] = cycle
        done = disp < tol
        converged[active[done]] = True
        active = active[~done]
        if len(active) == 0:
            break
    # Nearly parallel constraints can stall the cycle; repair those rows.
    if len(active):
        g, hv = _constraint_rows(a, d, box)
        for i in active:
            mult = coef[i] * norms
            if box:
                mult = np.concatenate([mult, np.maximum(box_inc[i], 0.0),
                                       np.maximum(-box_inc[i], 0.0)])
            z = polish(g, hv, ys[i], x[i], mult)
            if z is None:
                z = least_distance(g, hv, ys[i])
                scale = 1.0 + np.abs(ys[i]).max(initial=0.0)
                # ill-conditioned rows leave rounding-level excess in the LDP answer
                if z is not None and (g @ z - hv).max() > 1e-8 * scale:
                    z = None
            if z is not None:
                x[i] = z
                residual[i] = 0.0
                converged[i] = True
    return BatchResult(x, iters, residual, converged)


def dykstra_project(p: ProjectionProblem, strict: bool = False):
    """Project a single target; returns ``(z, iters, residual)``.

    When the cycle limit is hit the best iterate is returned, or
    ``NotConverged`` is raised if ``strict``.
    """
    res = dykstra_batch(p.h, p.y[None, :], p.box, p.tol, p.max_iter)
    z, it, r = res.z[0], int(res.iters[0]), float(res.residual[0])
    if not res.converged[0]:
        msg = f"Dykstra stopped after {it} cycles with displacement {r:.3e}"
        if strict:
            raise NotConverged(msg, z, it, r)
        logger.warning(msg)
    return z, it, r


def project_batch(h: HRep, box: bool, ys, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, strict: bool = False):
    """Row-wise projection of a (batch x d) array or Tensor.

    Returns the same kind it was given. Rows that hit the cycle limit are
    logged, or raised together as ``NotConverged`` if ``strict``.
    """
    from .tensorkit import Tensor

    is_tensor = isinstance(ys, Tensor)
    arr = ys.data if is_tensor else ys
    res = dykstra_batch(h, arr, box, tol, max_iter)
    bad = np.flatnonzero(~res.converged)
    if len(bad):
        msg = f"{len(bad)} row(s) did not converge: {bad[:10].tolist()}"
        if strict:
            raise NotConverged(msg, res.z, res.iters, res.residual, rows=bad)
        logger.warning(msg)
    return Tensor(res.z) if is_tensor else res.z
