"""Experiment configurations.

Configs are nested dataclasses filled from JSON mappings. Unknown keys are
rejected, and overrides use dotted paths such as ``data.n_train=2000``.
"""
from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    synthetic: bool = True
    dir: typing.Optional[str] = None
    domain: str = "[-1,1]"
    n_train: int = 5000
    n_val: int = 500
    n_test: int = 500

    def __post_init__(self):
        if self.domain not in ("[0,1]", "[-1,1]"):
            raise ConfigError(f"data.domain must be [0,1] or [-1,1], got {self.domain!r}")


@dataclass
class ProjectionExperimentConfig:
    side: int = 16
    tiles_per_side: int = 2
    variant: str = "constrained"
    lr: float = 1e-4
    batch_size: int = 64
    epochs: int = 60
    box_activation_epoch: typing.Optional[int] = 30
    seed: int = 0
    scheduler_factor: float = 0.1
    scheduler_patience: int = 5
    projection_tol: float = 1e-8
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self):
        if self.variant not in ("constrained", "unconstrained"):
            raise ConfigError(f"variant must be constrained or unconstrained, got {self.variant!r}")
        _check_schedule(self.epochs, self.box_activation_epoch)


@dataclass
class VAEConfig:
    side: int = 16
    tiles_per_side: int = 2
    hrep_path: typing.Optional[str] = None
    variant: str = "constrained"
    latent_dim: int = 2
    hidden_dim: int = 256
    lr: float = 1e-4
    batch_size: int = 64
    epochs: int = 60
    box_activation_epoch: typing.Optional[int] = 30
    seed: int = 0
    scheduler_factor: float = 0.1
    scheduler_patience: int = 5
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be at least 1")
        if self.variant not in ("constrained", "unconstrained"):
            raise ConfigError(f"variant must be constrained or unconstrained, got {self.variant!r}")
        _check_schedule(self.epochs, self.box_activation_epoch)


@dataclass
class BenchConfig:
    constrained_ckpt: str = ""
    unconstrained_ckpt: str = ""
    n_runs: int = 100
    batch: int = 256
    warmup: int = 3
    box: bool = True
    seed: int = 0


def _check_schedule(epochs, box_epoch):
    if epochs < 1:
        raise ConfigError("epochs must be at least 1")
    if box_epoch is not None and not 0 <= box_epoch <= epochs:
        raise ConfigError(f"box_activation_epoch {box_epoch} outside [0, {epochs}]")


def _is_dataclass_type(tp):
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def from_dict(cls, data: dict, path: str = ""):
    """Build ``cls`` from a mapping, recursing into nested dataclasses."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(path + k for k in unknown)}")
    kwargs = {}
    for key, val in data.items():
        tp = hints[key]
        if _is_dataclass_type(tp):
            kwargs[key] = from_dict(tp, val, f"{path}{key}.")
        else:
            kwargs[key] = _coerce(val, tp, path + key)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _coerce(val, tp, key):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, getattr(types, "UnionType", None)):
        args = typing.get_args(tp)
        if val is None and type(None) in args:
            return None
        tp = next(a for a in args if a is not type(None))
    if tp is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if tp is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if tp is bool and isinstance(val, bool):
        return val
    if tp is str and isinstance(val, str):
        return val
    raise ConfigError(f"{key}: expected {tp.__name__}, got {val!r}")


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.path=value`` strings. Values that parse as a JSON scalar
    (number, bool, null, quoted string) take that value; anything else,
    such as ``[0,1]``, is kept as a plain string."""
    data = json.loads(json.dumps(data))
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        if isinstance(val, (list, dict)):
            val = raw
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {p} is not a section")
        node[parts[-1]] = val
    return data


def load_config(cls, path=None, overrides=None):
    """Defaults < JSON file < overrides."""
    data = to_dict(cls())
    if path is not None:
        with open(path) as f:
            file_data = json.load(f)
        data = _merge(data, file_data)
    data = apply_overrides(data, overrides)
    return from_dict(cls, data)


def _merge(base, extra):
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out
