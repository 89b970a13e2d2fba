"""Image datasets: MNIST IDX files, a synthetic stand-in, and batching.

Canonical MNIST file names looked up by ``load_mnist``::

    train-images-idx3-ubyte   train-labels-idx1-ubyte
    t10k-images-idx3-ubyte    t10k-labels-idx1-ubyte

Uncompressed files are expected; a ``.gz`` suffix is also accepted.
"""
from __future__ import annotations

import gzip
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensorkit import Tensor

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
DOMAINS = ("[0,1]", "[-1,1]")


class BadMagic(ValueError):
    pass


class TruncatedFile(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def bytes_to_domain(b, domain="[-1,1]"):
    b = np.asarray(b, dtype=np.float64)
    if domain == "[0,1]":
        return b / 255.0
    if domain == "[-1,1]":
        return 2.0 * b / 255.0 - 1.0
    raise ValueError(f"unknown pixel domain {domain!r}")


def domain_to_bytes(x, domain="[-1,1]"):
    x = np.asarray(x, dtype=np.float64)
    b = x * 255.0 if domain == "[0,1]" else (x + 1.0) * 255.0 / 2.0
    return np.rint(b).astype(np.uint8)


@dataclass(frozen=True)
class Dataset:
    """Images stored row-wise as train, then validation, then test."""

    images: np.ndarray
    n_train: int
    n_val: int
    n_test: int = 0
    domain: str = "[-1,1]"
    labels: np.ndarray | None = None

    def __post_init__(self):
        n = self.n_train + self.n_val + self.n_test
        if n != self.images.shape[0]:
            raise DimensionMismatch(f"split sizes sum to {n}, have {self.images.shape[0]} images")
        lo, hi = (0.0, 1.0) if self.domain == "[0,1]" else (-1.0, 1.0)
        if self.images.size and (self.images.min() < lo or self.images.max() > hi):
            raise ValueError(f"pixel values outside {self.domain}")

    @property
    def d(self):
        return self.images.shape[1]

    @property
    def train(self):
        return self.images[:self.n_train]

    @property
    def val(self):
        return self.images[self.n_train:self.n_train + self.n_val]

    @property
    def test(self):
        return self.images[self.n_train + self.n_val:]


def _open(path):
    path = str(path)
    return gzip.open(path, "rb") if path.endswith(".gz") else open(path, "rb")


def read_idx(path, expected_magic):
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: {len(raw)} bytes")
    magic = int.from_bytes(raw[:4], "big")
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic {magic:#010x}, expected {expected_magic:#010x}")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFile(f"{path}: header cut short")
    dims = tuple(int.from_bytes(raw[4 + 4 * i:8 + 4 * i], "big") for i in range(ndim))
    size = int(np.prod(dims, dtype=np.int64))
    if len(raw) < header + size:
        raise TruncatedFile(f"{path}: {len(raw) - header} payload bytes, expected {size}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def write_idx(path, array):
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    header = magic.to_bytes(4, "big") + b"".join(n.to_bytes(4, "big") for n in array.shape)
    Path(path).write_bytes(header + array.tobytes())


def load_idx(images_path, labels_path=None, domain="[-1,1]", n_val=1000) -> Dataset:
    """One IDX image file as a dataset; the last ``n_val`` images form the
    validation split."""
    imgs = read_idx(images_path, IMAGES_MAGIC)
    if imgs.ndim != 3:
        raise DimensionMismatch(f"{images_path}: expected 3 dimensions, got {imgs.ndim}")
    labels = None
    if labels_path is not None:
        labels = read_idx(labels_path, LABELS_MAGIC)
        if labels.shape != (imgs.shape[0],):
            raise DimensionMismatch(f"{labels.shape[0]} labels for {imgs.shape[0]} images")
    n = imgs.shape[0]
    if not 0 <= n_val <= n:
        raise DimensionMismatch(f"validation size {n_val} for {n} images")
    x = bytes_to_domain(imgs.reshape(n, -1), domain)
    return Dataset(x, n - n_val, n_val, 0, domain, labels)


def _find(directory, stem):
    for name in (stem, stem + ".gz"):
        p = Path(directory) / name
        if p.exists():
            return p
    return None


def load_mnist(directory=None, domain="[-1,1]", n_val=1000) -> Dataset:
    """Train/validation from the training file, test from ``t10k`` if present.

    ``directory`` falls back to ``$CONECRAFT_DATA_DIR``.
    """
    directory = directory or os.environ.get("CONECRAFT_DATA_DIR")
    if not directory:
        raise FileNotFoundError("no MNIST directory given and CONECRAFT_DATA_DIR is unset")
    train_imgs = _find(directory, "train-images-idx3-ubyte")
    if train_imgs is None:
        raise FileNotFoundError(f"train-images-idx3-ubyte not found in {directory}")
    ds = load_idx(train_imgs, _find(directory, "train-labels-idx1-ubyte"), domain, n_val)
    test_imgs = _find(directory, "t10k-images-idx3-ubyte")
    if test_imgs is None:
        return ds
    test = load_idx(test_imgs, _find(directory, "t10k-labels-idx1-ubyte"), domain, 0)
    labels = None
    if ds.labels is not None and test.labels is not None:
        labels = np.concatenate([ds.labels, test.labels])
    return Dataset(np.vstack([ds.images, test.images]), ds.n_train, ds.n_val,
                   test.n_train, domain, labels)


def synthetic_images(side, n, seed, n_waves=3, max_freq=2.0, offset_mean=-1.0,
                     offset_std=0.3):
    """Smooth images in [-1, 1]: a few random 2-d cosines per image, a
    random brightness offset, squashed with tanh.

    The default offset darkens the background, like handwritten digits on
    black, so most tile means are clearly negative.
    """
    rng = np.random.default_rng(seed)
    u = (np.arange(side) + 0.5) / side
    yy, xx = np.meshgrid(u, u, indexing="ij")
    fx = rng.uniform(0, max_freq, (n, n_waves, 1, 1))
    fy = rng.uniform(0, max_freq, (n, n_waves, 1, 1))
    phase = rng.uniform(0, 2 * np.pi, (n, n_waves, 1, 1))
    amp = rng.uniform(0.3, 1.0, (n, n_waves, 1, 1))
    offset = rng.normal(offset_mean, offset_std, (n, 1, 1))
    field = (amp * np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)).sum(axis=1) + offset
    return np.tanh(field).reshape(n, side * side)


def synthetic_dataset(side, n, seed, domain="[-1,1]", n_val=None, n_test=0) -> Dataset:
    """Deterministic low-frequency images; ``n`` is the total count."""
    x = synthetic_images(side, n, seed)
    if domain == "[0,1]":
        x = (x + 1.0) / 2.0
    elif domain != "[-1,1]":
        raise ValueError(f"unknown pixel domain {domain!r}")
    x = np.clip(x, -1.0 if domain == "[-1,1]" else 0.0, 1.0)
    if n_val is None:
        n_val = n // 10
    return Dataset(x, n - n_val - n_test, n_val, n_test, domain)


def batches(data, batch_size, shuffle_seed=None, epoch=0):
    """Yield Tensors of at most ``batch_size`` rows covering ``data`` once.

    With a ``shuffle_seed`` the order is a permutation drawn from
    ``(shuffle_seed, epoch)``, so each epoch differs but is reproducible.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    x = data.train if isinstance(data, Dataset) else np.asarray(data)
    n = x.shape[0]
    if shuffle_seed is None:
        order = np.arange(n)
    else:
        order = np.random.default_rng([shuffle_seed, epoch]).permutation(n)
    for start in range(0, n, batch_size):
        yield Tensor(x[order[start:start + batch_size]])
