"""Plain-text H-rep and V-rep files.

H-rep: header ``H <m> <d>`` then m rows of d floats.
V-rep: header ``V <d> <n_pointed> <n_lin>`` then the rays, then the
lineality basis, one vector per line. Floats use 17 significant digits.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import HRep, VRep


class FormatError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def _fmt(vec) -> str:
    return " ".join(f"{x:.17g}" for x in vec)


def _read_lines(path):
    with open(path) as f:
        return [ln.strip() for ln in f.read().splitlines()]


def _parse_header(path, lines, tag, n_fields):
    if not lines or not lines[0]:
        raise FormatError(path, 1, "missing header")
    parts = lines[0].split()
    if parts[0] != tag or len(parts) != n_fields + 1:
        raise FormatError(path, 1,
                          f"expected header '{tag}' with {n_fields} counts, got {lines[0]!r}")
    try:
        counts = [int(p) for p in parts[1:]]
    except ValueError:
        raise FormatError(path, 1, f"non-integer count in header {lines[0]!r}") from None
    if any(c < 0 for c in counts):
        raise FormatError(path, 1, "negative count in header")
    return counts


def _parse_rows(path, lines, start, n, d):
    body = [ln for ln in lines[start:start + n]]
    if len(body) < n:
        raise FormatError(path, start + len(body) + 1, f"expected {n} rows, file ended")
    out = np.zeros((n, d))
    for k, ln in enumerate(body):
        lineno = start + k + 1
        try:
            vals = [float(t) for t in ln.split()]
        except ValueError:
            raise FormatError(path, lineno, "non-numeric entry") from None
        if len(vals) != d:
            raise FormatError(path, lineno, f"expected {d} values, got {len(vals)}")
        out[k] = vals
    return out


def write_hrep(path, h: HRep) -> None:
    lines = [f"H {h.m} {h.d}"] + [_fmt(row) for row in h.a_matrix]
    Path(path).write_text("\n".join(lines) + "\n")


def read_hrep(path) -> HRep:
    lines = _read_lines(path)
    m, d = _parse_header(path, lines, "H", 2)
    rows = _parse_rows(path, lines, 1, m, d)
    if any(lines[1 + m:]):
        raise FormatError(path, 2 + m, "trailing content after last row")
    return HRep(rows)


def write_vrep(path, v: VRep) -> None:
    lines = [f"V {v.d} {v.n_pointed} {v.n_lin}"]
    lines += [_fmt(r) for r in v.rays.T]
    lines += [_fmt(b) for b in v.lineality.T]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vrep(path) -> VRep:
    lines = _read_lines(path)
    d, n_p, n_l = _parse_header(path, lines, "V", 3)
    rays = _parse_rows(path, lines, 1, n_p, d)
    lin = _parse_rows(path, lines, 1 + n_p, n_l, d)
    if any(lines[1 + n_p + n_l:]):
        raise FormatError(path, 2 + n_p + n_l, "trailing content after last row")
    return VRep(rays.T.reshape(d, n_p), lin.T.reshape(d, n_l))
