"""A small dense-tensor engine with reverse-mode differentiation.

Tensors wrap float64 numpy arrays. Every operation on a tensor that
requires grad records its inputs and a backward rule; ``Tape.record``
orders the recorded graph topologically and ``Tape.backward`` walks it
once in reverse.

Broadcasting is limited to what fully-connected layers need: a scalar, a
feature row ``(f,)`` against ``(n, f)``, or a per-sample column ``(n, 1)``
against ``(n, f)``.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np


class ShapeMismatch(ValueError):
    pass


class DegenerateBatch(ValueError):
    pass


_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    prev = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self.op = "leaf"

    @classmethod
    def _result(cls, data, parents, backward, op):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        needs = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = needs
        out._parents = tuple(parents) if needs else ()
        out._backward = backward if needs else None
        return out

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, seed=None):
        Tape.record(self).backward(seed)

    # operators
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)

    def abs(self):
        return tabs(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class Tape:
    """Recorded operations in topological order (inputs first)."""

    nodes: list = field(default_factory=list)

    @classmethod
    def record(cls, root: Tensor) -> "Tape":
        order, seen = [], set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        return cls(order)

    def backward(self, seed=None):
        if not self.nodes:
            return
        root = self.nodes[-1]
        if not root.requires_grad:
            raise RuntimeError("backward on a tensor that does not require grad")
        if seed is None:
            if root.data.size != 1:
                raise ShapeMismatch("a seed is required for non-scalar outputs")
            seed = np.ones_like(root.data)
        grads = {id(root): np.asarray(seed, dtype=np.float64).reshape(root.shape)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg


def _check_broadcast(sa, sb):
    if sa == sb or sa == () or sb == ():
        return
    big, small = (sa, sb) if len(sa) >= len(sb) else (sb, sa)
    if len(big) == 2 and (small == big[1:] or small == (big[0], 1) or small == (1, big[1])):
        return
    raise ShapeMismatch(f"cannot broadcast {sa} with {sb}")


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape)
    return Tensor._result(a.data + b.data, (a, b),
                          lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
                          "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape)
    return Tensor._result(a.data - b.data, (a, b),
                          lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
                          "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape)
    return Tensor._result(a.data * b.data, (a, b),
                          lambda g: (_unbroadcast(g * b.data, a.shape),
                                     _unbroadcast(g * a.data, b.shape)),
                          "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a.shape, b.shape)
    out = a.data / b.data
    return Tensor._result(out, (a, b),
                          lambda g: (_unbroadcast(g / b.data, a.shape),
                                     _unbroadcast(-g * out / b.data, b.shape)),
                          "div")


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul of {a.shape} and {b.shape}")
    return Tensor._result(a.data @ b.data, (a, b),
                          lambda g: (g @ b.data.T, a.data.T @ g), "matmul")


def transpose(a):
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeMismatch(f"transpose needs a matrix, got {a.shape}")
    return Tensor._result(a.data.T.copy(), (a,), lambda g: (g.T,), "transpose")


def tsum(a, axis=None):
    a = as_tensor(a)

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return Tensor._result(np.asarray(a.data.sum(axis=axis)), (a,), back, "sum")


def mean(a, axis=None):
    a = as_tensor(a)
    n = a.data.size if axis is None else a.shape[axis]
    return tsum(a, axis) * (1.0 / n)


def reshape(a, shape):
    a = as_tensor(a)
    return Tensor._result(a.data.reshape(shape), (a,),
                          lambda g: (g.reshape(a.shape),), "reshape")


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0
    return Tensor._result(np.where(mask, x.data, 0.0), (x,),
                          lambda g: (g * mask,), "relu")


def tabs(x):
    """Elementwise |x|; the derivative at 0 is taken to be 0."""
    x = as_tensor(x)
    sign = np.sign(x.data)
    return Tensor._result(np.abs(x.data), (x,), lambda g: (g * sign,), "abs")


def sigmoid(x):
    x = as_tensor(x)
    out = np.empty_like(x.data)
    pos = x.data >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ez = np.exp(x.data[~pos])
    out[~pos] = ez / (1.0 + ez)
    return Tensor._result(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def exp(x):
    x = as_tensor(x)
    out = np.exp(x.data)
    return Tensor._result(out, (x,), lambda g: (g * out,), "exp")


def log(x):
    x = as_tensor(x)
    return Tensor._result(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


def softmax(x):
    """Row-wise softmax of an (n, m) tensor, shifted by the row max."""
    x = as_tensor(x)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeMismatch(f"softmax expects (n, m>=1), got {x.shape}")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return Tensor._result(s, (x,), back, "softmax")


@dataclass
class BNState:
    """Learnable scale/shift plus running statistics of one batch-norm."""

    weight: Tensor
    bias: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def create(cls, n_features, momentum=0.1, eps=1e-5):
        return cls(Tensor(np.ones(n_features), requires_grad=True),
                   Tensor(np.zeros(n_features), requires_grad=True),
                   np.zeros(n_features), np.ones(n_features), momentum, eps)


def batch_norm(x, state: BNState, training: bool):
    """Per-feature normalization of an (n, f) batch.

    Training mode uses the biased batch variance for normalization and
    folds the unbiased one into the running estimate.
    """
    x = as_tensor(x)
    if x.ndim != 2 or x.shape[1] != state.weight.shape[0]:
        raise ShapeMismatch(f"batch_norm input {x.shape} for {state.weight.shape[0]} features")
    n = x.shape[0]
    if training:
        if n < 2:
            raise DegenerateBatch("batch norm in training mode needs at least 2 samples")
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        mom = state.momentum
        state.running_mean = (1 - mom) * state.running_mean + mom * mu
        state.running_var = (1 - mom) * state.running_var + mom * var * n / (n - 1)
    else:
        mu, var = state.running_mean, state.running_var
    inv = 1.0 / np.sqrt(var + state.eps)
    xhat = (x.data - mu) * inv
    w, b = state.weight, state.bias
    out = xhat * w.data + b.data

    def back(g):
        gw = (g * xhat).sum(axis=0)
        gb = g.sum(axis=0)
        gx_hat = g * w.data
        if training:
            gx = inv / n * (n * gx_hat - gx_hat.sum(axis=0)
                            - xhat * (gx_hat * xhat).sum(axis=0))
        else:
            gx = gx_hat * inv
        return gx, gw, gb

    return Tensor._result(out, (x, w, b), back, "batch_norm")


def grad_check(f, x, h: float = 1e-5) -> float:
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|)."""
    x0 = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    xt = Tensor(x0.copy(), requires_grad=True)
    out = f(xt)
    out.backward()
    analytic = xt.grad if xt.grad is not None else np.zeros_like(x0)
    numeric = np.zeros_like(x0)
    flat = x0.reshape(-1)
    num_flat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(Tensor(x0)).item()
            flat[i] = orig - h
            fm = f(Tensor(x0)).item()
            flat[i] = orig
            num_flat[i] = (fp - fm) / (2 * h)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max(initial=0.0))
