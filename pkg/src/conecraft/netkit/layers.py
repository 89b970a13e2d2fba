"""Fully-connected building blocks and the cone-constrained output layer."""
from __future__ import annotations

import numpy as np

from ..polyhedra import (HRep, ToleranceConfig, VRep, dd_convert, expand_generators,
                         max_violation)
from ..tensorkit import (BNState, ShapeMismatch, Tensor, as_tensor, batch_norm, matmul,
                         relu, sigmoid, softmax, tabs)


class Module:
    """Parameter discovery over attributes, in definition order.

    Tensors with ``requires_grad`` are parameters, other Modules are
    children, and names listed in ``buffer_names`` are ndarray buffers.
    Attributes starting with an underscore are ignored.
    """

    buffer_names: tuple = ()
    training = True

    def __call__(self, *args):
        return self.forward(*args)

    def _children(self):
        for name, val in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(val, (Module, BNState)):
                yield name, val
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix=""):
        for name, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad and not name.startswith("_"):
                yield prefix + name, val
        for name, child in self._children():
            if isinstance(child, BNState):
                yield f"{prefix}{name}.weight", child.weight
                yield f"{prefix}{name}.bias", child.bias
            else:
                yield from child.named_parameters(f"{prefix}{name}.")

    def _buffer_slots(self, prefix=""):
        for name in self.buffer_names:
            yield prefix + name, self, name
        for name, child in self._children():
            if isinstance(child, BNState):
                yield f"{prefix}{name}.running_mean", child, "running_mean"
                yield f"{prefix}{name}.running_var", child, "running_var"
            else:
                yield from child._buffer_slots(f"{prefix}{name}.")

    def named_buffers(self, prefix=""):
        for name, owner, attr in self._buffer_slots(prefix):
            yield name, getattr(owner, attr)

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self):
        out = {k: v.data.copy() for k, v in self.named_parameters()}
        out.update({k: np.array(v, dtype=np.float64) for k, v in self.named_buffers()})
        return out

    def load_state_dict(self, tensors):
        expected = self.state_dict()
        missing = set(expected) - set(tensors)
        if missing:
            raise KeyError(f"missing tensors: {sorted(missing)}")
        for name, arr in tensors.items():
            if name not in expected:
                raise KeyError(f"unexpected tensor {name!r}")
            if np.shape(arr) != expected[name].shape:
                raise ShapeMismatch(f"{name}: {np.shape(arr)} vs {expected[name].shape}")
        params = dict(self.named_parameters())
        slots = {name: (owner, attr) for name, owner, attr in self._buffer_slots()}
        for name, arr in tensors.items():
            arr = np.array(arr, dtype=np.float64)
            if name in params:
                params[name].data = arr
            else:
                owner, attr = slots[name]
                setattr(owner, attr, arr)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def train(self, mode=True):
        self.training = mode
        for _, child in self._children():
            if isinstance(child, Module):
                child.train(mode)
        return self

    def eval(self):
        return self.train(False)


class Linear(Module):
    """``y = x W^T + b`` with ``W`` of shape (out, in).

    Weights start uniform in ``±1/sqrt(in)``; the bias likewise unless
    ``zero_bias``.
    """

    def __init__(self, in_features, out_features, rng=None, zero_bias=False):
        rng = rng if rng is not None else np.random.default_rng()
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Tensor(rng.uniform(-bound, bound, (out_features, in_features)),
                             requires_grad=True)
        b = np.zeros(out_features) if zero_bias else rng.uniform(-bound, bound, out_features)
        self.bias = Tensor(b, requires_grad=True)

    @property
    def in_features(self):
        return self.weight.shape[1]

    @property
    def out_features(self):
        return self.weight.shape[0]

    def forward(self, x):
        return matmul(as_tensor(x), self.weight.T) + self.bias


class ReLU(Module):
    def forward(self, x):
        return relu(x)


class Sigmoid(Module):
    def forward(self, x):
        return sigmoid(x)


class Sequential(Module):
    def __init__(self, *layers):
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x


def box_scale(z):
    """Row-wise ``z / max(|z|_inf, 1)``.

    Rows already inside the unit box, including the tie ``|z|_inf == 1``,
    pass through with identity gradient.
    """
    z = as_tensor(z)
    if z.ndim != 2:
        raise ShapeMismatch(f"box_scale expects (batch, d), got {z.shape}")
    x = z.data
    n, d = x.shape
    if d == 0:
        return z * 1.0
    absx = np.abs(x)
    k = absx.argmax(axis=1)
    norm = absx[np.arange(n), k]
    scaled = norm > 1.0
    s = np.where(scaled, norm, 1.0)
    out = x / s[:, None]

    def back(g):
        gx = g / s[:, None]
        rows = np.flatnonzero(scaled)
        if len(rows):
            dot = (g[rows] * x[rows]).sum(axis=1)
            sign = np.sign(x[rows, k[rows]])
            gx[rows, k[rows]] -= sign * dot / s[rows] ** 2
        return (gx,)

    return Tensor._result(out, (z,), back, "box_scale")


class ConstraintLayer(Module):
    """Maps features to points of the cone spanned by the columns of ``rays``.

    Forward: batch norm, affine map to one coefficient per ray, absolute
    value, conical combination; optionally followed by ``box_scale``.
    """

    buffer_names = ("rays",)

    def __init__(self, rays, in_features, rng=None, box_active=False, hrep=None,
                 tol: ToleranceConfig = ToleranceConfig()):
        rays = np.array(rays, dtype=np.float64)
        if rays.ndim != 2:
            raise ShapeMismatch(f"rays must be (d, n_r), got {rays.shape}")
        self.rays = rays
        self.bn = BNState.create(in_features)
        self.affine = Linear(in_features, rays.shape[1], rng, zero_bias=True)
        self.box_active = box_active
        self.hrep = hrep
        self.vrep = None
        self._mu = None
        if hrep is not None:
            self._check_rays(hrep, tol)

    @classmethod
    def from_hrep(cls, h: HRep, in_features, rng=None, box_active=False,
                  order="greedy", tol: ToleranceConfig = ToleranceConfig()):
        v = dd_convert(h, tol, order)
        layer = cls(expand_generators(v), in_features, rng, box_active, h, tol)
        layer.vrep = v
        return layer

    def _check_rays(self, h, tol):
        if h.d != self.rays.shape[0]:
            raise ShapeMismatch(f"HRep d={h.d} but rays have d={self.rays.shape[0]}")
        if h.m == 0 or self.n_r == 0:
            return
        viol = max_violation(h, self.rays.T)
        scale = np.abs(self.rays).max(axis=0) * np.abs(h.a_matrix).max()
        if np.any(viol > tol.eps_feas * scale):
            raise ValueError(f"rays violate the constraints by up to {viol.max():.3e}")

    @property
    def d(self):
        return self.rays.shape[0]

    @property
    def n_r(self):
        return self.rays.shape[1]

    @property
    def mu(self):
        """Conical coefficients from the most recent forward pass."""
        return self._mu

    @property
    def eps_layer(self):
        return 1e-8 * self.n_r

    def forward(self, a):
        u = self.affine(batch_norm(a, self.bn, self.training))
        self._mu = tabs(u)
        z = matmul(self._mu, Tensor(self.rays.T))
        if self.box_active:
            z = box_scale(z)
        return z


def general_polyhedron_combine(vertices, rays, lam_logits, mu_pre):
    """Points ``sum_i lam_i v_i + sum_j mu_j r_j`` with ``lam = softmax(logits)``
    and ``mu = |mu_pre|``; vertices (d, n), rays (d, s)."""
    vertices, rays = as_tensor(vertices), as_tensor(rays)
    if vertices.shape[1] < 1:
        raise ShapeMismatch("at least one vertex is required")
    lam = softmax(lam_logits)
    out = matmul(lam, vertices.T)
    if rays.shape[1]:
        out = out + matmul(tabs(mu_pre), rays.T)
    return out
