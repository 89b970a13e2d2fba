"""Post-hoc soundness and completeness checks for a ray representation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DimensionMismatch, HRep, ToleranceConfig, VRep, expand_generators
from .nnls import nnls


@dataclass
class VerificationReport:
    passed: bool
    soundness_max: float
    lineality_max: float
    orthonormality_error: float
    completeness_max: float
    n_samples: int
    sampling: str
    failures: list = field(default_factory=list)
    degeneracy_warnings: list = field(default_factory=list)


def cone_residual(v: VRep, z) -> float:
    """Relative distance from ``z`` to the cone spanned by ``v``.

    The lineality component is removed by orthogonal projection, which is
    exact for an orthonormal lineality basis, and the rest is fitted by
    nonnegative least squares over the pointed rays.
    """
    z = np.asarray(z, dtype=np.float64)
    nz = np.linalg.norm(z)
    if nz == 0.0:
        return 0.0
    lin = v.lineality
    zr = z - lin @ (lin.T @ z)
    if v.n_pointed == 0:
        return float(np.linalg.norm(zr) / nz)
    rays = v.rays - lin @ (lin.T @ v.rays)
    _, res = nnls(rays, zr)
    return float(res / nz)


def project_cone(h: HRep, y) -> np.ndarray:
    """Exact projection onto ``{z | A z <= 0}`` by Moreau decomposition:
    the polar cone is generated by the rows of ``A``, so
    ``P(y) = y - A^T lam`` with ``lam = argmin_{lam >= 0} |A^T lam - y|``."""
    if h.m == 0:
        return np.array(y, dtype=np.float64)
    lam, _ = nnls(h.a_matrix.T, y)
    return y - h.a_matrix.T @ lam


def sample_feasible(h: HRep, n: int, rng: np.random.Generator):
    """Feasible points by rejection sampling, topped up with exact
    projections of Gaussian points when rejection comes up short."""
    found = []
    draws = 0
    while len(found) < n and draws < 10 * n:
        batch = rng.standard_normal((n, h.d))
        draws += n
        ok = np.ones(n, dtype=bool) if h.m == 0 else (batch @ h.a_matrix.T).max(axis=1) <= 0.0
        found.extend(batch[ok])
    pts = np.array(found[:n]).reshape(-1, h.d)
    if len(pts) == n:
        return pts, "rejection"
    # Projections of Gaussian points often collapse onto the apex; keep only
    # those of non-negligible length. A {0} cone yields none, which is fine.
    extra = []
    draws = 0
    while len(pts) + len(extra) < n and draws < 10 * n:
        ys = rng.standard_normal((n, h.d))
        draws += n
        zs = np.array([project_cone(h, y) for y in ys])
        big = np.linalg.norm(zs, axis=1) > 1e-6 * np.linalg.norm(ys, axis=1)
        extra.extend(zs[big])
    extra = np.array(extra[:n - len(pts)]).reshape(-1, h.d)
    how = "rejection+projection" if len(pts) else "projection"
    return np.vstack([pts, extra]), how


def verify_vrep(h: HRep, v: VRep, n_samples: int = 100, seed: int = 0,
                tol: ToleranceConfig = ToleranceConfig()) -> VerificationReport:
    if h.d != v.d:
        raise DimensionMismatch(f"HRep d={h.d} vs VRep d={v.d}")
    failures = []
    a = h.a_matrix
    a_max = float(np.abs(a).max()) if a.size else 0.0

    gens = expand_generators(v)
    soundness = 0.0
    if h.m and gens.shape[1]:
        viol = (a @ gens).max(axis=0)
        scale = np.abs(gens).max(axis=0) * a_max
        soundness = float(np.max(viol / scale))
        if soundness > tol.eps_feas:
            failures.append(f"soundness: scaled violation {soundness:.3e}")

    lin_max = 0.0
    if h.m and v.n_lin:
        lin_max = float(np.abs(a @ v.lineality).max() / a_max)
        if lin_max > tol.eps_feas:
            failures.append(f"lineality not in kernel: {lin_max:.3e}")
    orth = 0.0
    if v.n_lin:
        orth = float(np.abs(v.lineality.T @ v.lineality - np.eye(v.n_lin)).max())
        if orth > tol.eps_orth:
            failures.append(f"lineality not orthonormal: {orth:.3e}")

    rng = np.random.default_rng(seed)
    pts, how = sample_feasible(h, n_samples, rng) if n_samples else (np.zeros((0, h.d)), "none")
    completeness = 0.0
    for z in pts:
        res = cone_residual(v, z)
        completeness = max(completeness, res)
    if completeness >= tol.completeness_rtol:
        failures.append(f"completeness: relative residual {completeness:.3e}")

    return VerificationReport(
        passed=not failures, soundness_max=soundness, lineality_max=lin_max,
        orthonormality_error=orth, completeness_max=completeness,
        n_samples=len(pts), sampling=how, failures=failures,
        degeneracy_warnings=list(v.warnings))
