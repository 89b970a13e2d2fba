"""Half-space and ray representations of homogeneous polyhedral cones."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatch(ValueError):
    pass


class InvalidGrid(ValueError):
    pass


class NumericalDegeneracyWarning(UserWarning):
    """A classification value fell close to the tolerance boundary."""


@dataclass(frozen=True)
class ToleranceConfig:
    eps_class: float = 1e-9
    eps_feas: float = 1e-9
    eps_orth: float = 1e-10
    eps_rank: float = 1e-10
    completeness_rtol: float = 1e-6


@dataclass(frozen=True)
class HRep:
    """The cone ``{z | A z <= 0}``.

    Only the homogeneous system is stored; there is no right-hand side.
    """

    a_matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.a_matrix, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("constraint matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)

    @classmethod
    def empty(cls, d: int) -> "HRep":
        return cls(np.zeros((0, d)))

    @property
    def m(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def d(self) -> int:
        return self.a_matrix.shape[1]

    def canonical(self) -> "HRep":
        """Drop all-zero rows."""
        keep = np.abs(self.a_matrix).max(axis=1, initial=0.0) > 0.0
        return HRep(self.a_matrix[keep])

    def permuted(self, order) -> "HRep":
        return HRep(self.a_matrix[np.asarray(order, dtype=int)])


@dataclass(frozen=True)
class VRep:
    """Generators of a polyhedral cone.

    ``rays`` (d x n_pointed) enter with nonnegative coefficients and
    ``lineality`` (d x n_lin, orthonormal columns) with free coefficients.
    """

    rays: np.ndarray
    lineality: np.ndarray
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        rays = np.array(self.rays, dtype=np.float64)
        lin = np.array(self.lineality, dtype=np.float64)
        if rays.ndim != 2 or lin.ndim != 2 or rays.shape[0] != lin.shape[0]:
            raise DimensionMismatch(
                f"rays {rays.shape} and lineality {lin.shape} disagree on d")
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "lineality", lin)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def d(self) -> int:
        return self.rays.shape[0]

    @property
    def n_pointed(self) -> int:
        return self.rays.shape[1]

    @property
    def n_lin(self) -> int:
        return self.lineality.shape[1]

    @property
    def n_r(self) -> int:
        return 2 * self.n_lin + self.n_pointed


def expand_generators(v: VRep) -> np.ndarray:
    """Columns whose nonnegative span is the cone: ``[L, -L, R]``."""
    return np.hstack([v.lineality, -v.lineality, v.rays])


def membership(h: HRep, z, eps: float = 0.0) -> bool:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (h.d,):
        raise DimensionMismatch(f"vector of shape {z.shape} for d={h.d}")
    if h.m == 0:
        return True
    return bool(np.max(h.a_matrix @ z) <= eps)


def max_violation(h: HRep, z) -> np.ndarray:
    """Row-wise ``max(A z)`` for a batch ``z`` of shape (n, d); 0 if m == 0."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.shape[1] != h.d:
        raise DimensionMismatch(f"batch of width {z.shape[1]} for d={h.d}")
    if h.m == 0:
        return np.zeros(z.shape[0])
    return (z @ h.a_matrix.T).max(axis=1)


def checkerboard_hrep(side: int, tiles_per_side: int) -> HRep:
    """Tile-average sign constraints on a ``side x side`` image.

    Tile (i, j) gets sign ``s = +1`` if ``i + j`` is even, else ``-1``; its
    row is ``s / |tile|`` on the tile's pixels, so ``A z <= 0`` forces the
    even tiles to a nonpositive mean and the odd tiles to a nonnegative one.
    Pixels are indexed row-major.
    """
    if side < 1 or tiles_per_side < 1 or side % tiles_per_side:
        raise InvalidGrid(
            f"side {side} is not divisible into {tiles_per_side} tiles per side")
    t = side // tiles_per_side
    a = np.zeros((tiles_per_side ** 2, side * side))
    img = np.arange(side * side).reshape(side, side)
    for i in range(tiles_per_side):
        for j in range(tiles_per_side):
            sign = 1.0 if (i + j) % 2 == 0 else -1.0
            idx = img[i * t:(i + 1) * t, j * t:(j + 1) * t].ravel()
            a[i * tiles_per_side + j, idx] = sign / (t * t)
    return HRep(a)


def box_cone_hrep(d: int) -> HRep:
    """Homogenized box ``{(x, t) | -t <= x_i <= t}`` in d + 1 dimensions."""
    a = np.zeros((2 * d, d + 1))
    for i in range(d):
        a[2 * i, i] = 1.0
        a[2 * i + 1, i] = -1.0
    a[:, d] = -1.0
    return HRep(a)
