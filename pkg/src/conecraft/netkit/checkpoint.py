"""Checkpoint directories: ``manifest.json`` plus one raw ``.bin`` per tensor.

Tensor files are little-endian float64, row-major, without a header; the
manifest records each tensor's shape.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..polyhedra import read_hrep, read_vrep, write_hrep, write_vrep

FORMAT = "conecraft-checkpoint/1"


class CheckpointCorrupt(RuntimeError):
    pass


def save_checkpoint(path, tensors: dict, topology: dict, *, config=None, hrep=None,
                    vrep=None, box_active=False, optimizer=None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = {}
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        fname = f"{name}.bin"
        (path / fname).write_bytes(arr.tobytes(order="C"))
        entries[name] = {"file": fname, "shape": list(arr.shape)}
    manifest = {
        "format": FORMAT,
        "topology": topology,
        "tensors": entries,
        "hrep": None,
        "vrep": None,
        "box_active": bool(box_active),
        "optimizer": optimizer,
        "config": config,
    }
    if hrep is not None:
        write_hrep(path / "hrep.txt", hrep)
        manifest["hrep"] = "hrep.txt"
    if vrep is not None:
        write_vrep(path / "vrep.txt", vrep)
        manifest["vrep"] = "vrep.txt"
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def load_checkpoint(path):
    """Return ``(manifest, tensors, hrep, vrep)``; missing files or size
    mismatches raise ``CheckpointCorrupt``."""
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointCorrupt(f"{path}: unreadable manifest ({exc})") from exc
    if manifest.get("format") != FORMAT:
        raise CheckpointCorrupt(f"{path}: unknown format {manifest.get('format')!r}")
    tensors = {}
    for name, entry in manifest.get("tensors", {}).items():
        shape = tuple(entry["shape"])
        try:
            raw = (path / entry["file"]).read_bytes()
        except OSError as exc:
            raise CheckpointCorrupt(f"{path}: missing tensor file {entry['file']}") from exc
        if len(raw) != 8 * int(np.prod(shape, dtype=np.int64)):
            raise CheckpointCorrupt(
                f"{path}: {entry['file']} has {len(raw)} bytes for shape {shape}")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    try:
        hrep = read_hrep(path / manifest["hrep"]) if manifest.get("hrep") else None
        vrep = read_vrep(path / manifest["vrep"]) if manifest.get("vrep") else None
    except (OSError, ValueError) as exc:
        raise CheckpointCorrupt(f"{path}: bad constraint file ({exc})") from exc
    return manifest, tensors, hrep, vrep
