"""Double description conversion from half-spaces to generators.

The kernel of ``A`` is split off first so that the iteration runs on a
pointed cone of dimension ``rank(A)``. The pointed part starts from the
simplicial cone of ``rank(A)`` independent rows and inserts the remaining
rows one at a time, combining adjacent (negative, positive) generator pairs.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import (DimensionMismatch, HRep, NumericalDegeneracyWarning,
                   ToleranceConfig, VRep)

logger = logging.getLogger(__name__)

_PAIR_CHUNK = 4096


@dataclass
class DDPair:
    """Generators ``v`` of ``{z | h.a_matrix z <= 0}`` plus active sets.

    ``active_sets[g, k]`` is True when generator ``g`` is tight on row ``k``
    of ``h``. ``degenerate`` counts classification values that landed within
    a factor of ten of the tolerance.
    """

    h: HRep
    v: VRep
    active_sets: np.ndarray
    degenerate: int = field(default=0)

    @property
    def rays(self) -> np.ndarray:
        return self.v.rays

    @property
    def n_generators(self) -> int:
        return self.v.n_pointed


def split_lineality(h: HRep, tol: ToleranceConfig = ToleranceConfig()):
    """Split ``R^d`` into ``ker(A)`` and its orthogonal complement.

    Returns
    -------
    lineality : (d, d - r) array
        Orthonormal basis of ``ker(A)``.
    reduced : HRep
        The system ``A Q`` on the r-dimensional complement; its cone is
        pointed.
    lift : (d, r) array
        Orthonormal ``Q`` mapping reduced coordinates back to ``R^d``.
    """
    d = h.d
    a = h.canonical().a_matrix
    if a.shape[0] == 0:
        return np.eye(d), HRep(np.zeros((0, 0))), np.zeros((d, 0))
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(s > tol.eps_rank * s[0]))
    lift = vt[:r].T.copy()
    lineality = vt[r:].T.copy()
    return lineality, HRep(a @ lift), lift


def _classify(row, rays, eps):
    vals = row @ rays
    scale = eps * np.linalg.norm(row)
    pos = vals > scale
    neg = vals < -scale
    mag = np.abs(vals)
    band = int(np.count_nonzero((mag >= scale / 10) & (mag <= scale * 10)))
    return vals, pos, neg, band


def adjacency_test(pair: DDPair, i: int, j: int) -> bool:
    """Combinatorial test: no third generator is tight on every row
    that is tight for both ``i`` and ``j``."""
    if i == j:
        raise ValueError("adjacency needs two distinct generators")
    act = pair.active_sets
    common = act[i] & act[j]
    others = np.ones(act.shape[0], dtype=bool)
    others[[i, j]] = False
    return not bool(np.any(np.all(act[others][:, common], axis=1)))


def _adjacent_pairs(active, neg_idx, pos_idx, dim):
    """All adjacent (neg, pos) index pairs, vectorized over candidates."""
    if len(neg_idx) == 0 or len(pos_idx) == 0:
        return np.zeros((0, 2), dtype=int)
    act_f = active.astype(np.float64)
    counts = act_f[neg_idx] @ act_f[pos_idx].T
    # An edge of a pointed cone of dimension dim is tight on >= dim - 2 rows.
    ii, jj = np.nonzero(counts >= dim - 2 - 0.5)
    if len(ii) == 0:
        return np.zeros((0, 2), dtype=int)
    cand_i = neg_idx[ii]
    cand_j = pos_idx[jj]
    missing_f = (~active).astype(np.float64)
    keep = np.zeros(len(cand_i), dtype=bool)
    for start in range(0, len(cand_i), _PAIR_CHUNK):
        sl = slice(start, start + _PAIR_CHUNK)
        common = (active[cand_i[sl]] & active[cand_j[sl]]).astype(np.float64)
        # generators tight on the whole common set; i and j always are
        n_contain = np.count_nonzero(missing_f @ common.T == 0.0, axis=0)
        keep[sl] = n_contain == 2
    return np.stack([cand_i[keep], cand_j[keep]], axis=1)


def dd_insert_halfspace(pair: DDPair, row, eps_class: float = 1e-9) -> DDPair:
    """Add the half-space ``row . z <= 0`` to a double description pair."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (pair.h.d,):
        raise DimensionMismatch(f"row of shape {row.shape} for d={pair.h.d}")
    rays = pair.rays
    act = pair.active_sets
    vals, pos, neg, band = _classify(row, rays, eps_class)
    zero = ~(pos | neg)
    new_h = HRep(np.vstack([pair.h.a_matrix, row[None, :]]))

    pairs = _adjacent_pairs(act, np.flatnonzero(neg), np.flatnonzero(pos),
                            pair.h.d)
    i, j = pairs[:, 0], pairs[:, 1]
    new_rays = vals[j] * rays[:, i] - vals[i] * rays[:, j]
    if new_rays.shape[1]:
        new_rays /= np.linalg.norm(new_rays, axis=0)
    new_act = act[i] & act[j]

    kept = neg | zero
    rays_out = np.hstack([rays[:, kept], new_rays])
    act_out = np.vstack([act[kept], new_act])
    col = np.concatenate([zero[kept], np.ones(len(i), dtype=bool)])
    act_out = np.hstack([act_out, col[:, None]])
    return DDPair(new_h, VRep(rays_out, np.zeros((pair.h.d, 0))), act_out,
                  pair.degenerate + band)


def _initial_basis(a, r, order):
    """Indices of r linearly independent rows of ``a``."""
    if order == "greedy":
        _, _, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
        return sorted(int(p) for p in piv[:r])
    chosen = []
    for k in range(a.shape[0]):
        trial = a[chosen + [k]]
        if np.linalg.matrix_rank(trial) == len(chosen) + 1:
            chosen.append(k)
            if len(chosen) == r:
                break
    return chosen


def initial_pair(a, basis) -> DDPair:
    """Simplicial DD pair from r independent rows of an (m x r) system."""
    b = a[basis]
    r = b.shape[0]
    rays = -np.linalg.inv(b)
    rays /= np.linalg.norm(rays, axis=0)
    act = ~np.eye(r, dtype=bool)
    return DDPair(HRep(b), VRep(rays, np.zeros((r, 0))), act)


def dedupe_rays(rays, tol=1e-7):
    """Drop columns that are positive multiples of an earlier column, i.e.
    whose unit vectors lie within Euclidean distance ``tol``."""
    if rays.shape[1] < 2:
        return rays
    unit = rays / np.linalg.norm(rays, axis=0)
    # |u - w|^2 = 2 - 2 u.w for unit vectors
    gram = unit.T @ unit
    keep = np.ones(unit.shape[1], dtype=bool)
    for k in range(1, unit.shape[1]):
        if np.any(gram[k, :k][keep[:k]] > 1.0 - 0.5 * tol ** 2):
            keep[k] = False
    return rays[:, keep]


def dd_pointed(a, tol: ToleranceConfig = ToleranceConfig(), order="greedy"):
    """Extreme rays of ``{z | a z <= 0}`` for full-column-rank ``a``.

    Returns the rays (r x n) and the count of near-tolerance
    classifications.
    """
    m, r = a.shape
    if r == 0:
        return np.zeros((0, 0)), 0
    basis = _initial_basis(a, r, order)
    pair = initial_pair(a, basis)
    remaining = [k for k in range(m) if k not in set(basis)]
    while remaining:
        if pair.n_generators == 0:
            break
        if order == "greedy":
            rows = a[remaining]
            scale = tol.eps_class * np.linalg.norm(rows, axis=1)
            cutoffs = np.count_nonzero(rows @ pair.rays > scale[:, None], axis=1)
            k = remaining.pop(int(np.argmin(cutoffs)))
        else:
            k = remaining.pop(0)
        pair = dd_insert_halfspace(pair, a[k], tol.eps_class)
        logger.debug("inserted row %d: %d generators", k, pair.n_generators)
    return pair.rays, pair.degenerate


def dd_convert(h: HRep, tol: ToleranceConfig = ToleranceConfig(),
               order: str = "greedy") -> VRep:
    """Convert ``{z | A z <= 0}`` to rays plus an orthonormal lineality basis.

    ``order`` is ``"greedy"`` (insert the row cutting off the fewest
    generators next) or ``"input"`` (row order as given).
    """
    if order not in ("greedy", "input"):
        raise ValueError(f"unknown insertion order {order!r}")
    if h.d < 1:
        raise DimensionMismatch("cone dimension must be at least 1")
    lineality, reduced, lift = split_lineality(h, tol)
    rays_red, n_degenerate = dd_pointed(reduced.a_matrix, tol, order)
    rays = lift @ rays_red if rays_red.size else np.zeros((h.d, 0))
    if rays.shape[1]:
        rays = dedupe_rays(rays / np.linalg.norm(rays, axis=0))
    notes = []
    if n_degenerate:
        msg = (f"{n_degenerate} classification value(s) within a factor 10 "
               f"of eps_class={tol.eps_class:g}")
        notes.append(msg)
        warnings.warn(msg, NumericalDegeneracyWarning, stacklevel=2)
    return VRep(rays, lineality, warnings=notes)
