"""MNIST IDX ingestion and a seeded synthetic manifold generator."""

from __future__ import annotations

import enum
import gzip
import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError, IdxParseError
from .rng import RngStream

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class Source(str, enum.Enum):
    MNIST_TRAIN = "mnist-train"
    MNIST_TEST = "mnist-test"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # (n, d_x), entries in [0, 1]
    source: Source
    labels: np.ndarray | None = None
    intrinsic_dim: int | None = None
    image_shape: tuple | None = None  # (rows, cols) for image data
    latent: np.ndarray | None = None  # synthetic manifold coordinates t
    pre_activation: np.ndarray | None = None  # synthetic features before the logistic

    @property
    def n(self):
        return self.images.shape[0]

    @property
    def dim(self):
        return self.images.shape[1]

    def subset(self, count):
        count = min(int(count), self.n)
        cut = lambda a: None if a is None else a[:count]  # noqa: E731
        return Dataset(self.images[:count], self.source, cut(self.labels), self.intrinsic_dim,
                       self.image_shape, cut(self.latent), cut(self.pre_activation))


# -- IDX ----------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def parse_idx(buf: bytes, expected_magic: int, name="idx") -> np.ndarray:
    """Parse an unsigned-byte IDX buffer into an ``np.uint8`` array."""
    if len(buf) < 4:
        raise IdxParseError(f"{name}: file too short for magic number", len(buf))
    (magic,) = struct.unpack_from(">I", buf, 0)
    if magic != expected_magic:
        raise IdxParseError(f"{name}: magic 0x{magic:08x} != expected 0x{expected_magic:08x}", 0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise IdxParseError(f"{name}: truncated header", len(buf))
    dims = struct.unpack_from(f">{ndim}I", buf, 4)
    size = math.prod(dims)
    if len(buf) < header + size:
        raise IdxParseError(f"{name}: truncated payload, expected {size} bytes after header", len(buf))
    if len(buf) > header + size:
        raise IdxParseError(f"{name}: {len(buf) - header - size} trailing bytes", header + size)
    return np.frombuffer(buf, dtype=np.uint8, count=size, offset=header).reshape(dims)


def idx_bytes(array: np.ndarray) -> bytes:
    """Serialize a uint8 array (1-D labels or 3-D images) to IDX."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    return struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape) + array.tobytes()


def load_mnist_idx(images_path, labels_path=None, source=Source.MNIST_TRAIN) -> Dataset:
    raw = parse_idx(_read_bytes(images_path), IMAGE_MAGIC, os.fspath(images_path))
    if raw.ndim != 3:
        raise IdxParseError(f"{images_path}: expected 3 dimensions, got {raw.ndim}", 3)
    n, rows, cols = raw.shape
    labels = None
    if labels_path is not None:
        labels = parse_idx(_read_bytes(labels_path), LABEL_MAGIC, os.fspath(labels_path))
        if labels.shape[0] != n:
            raise IdxParseError(f"{labels_path}: {labels.shape[0]} labels for {n} images", 4)
        if labels.size and labels.max() > 9:
            raise IdxParseError(f"{labels_path}: label {labels.max()} out of range", 8 + int(np.argmax(labels > 9)))
        labels = labels.astype(np.int64)
    images = raw.reshape(n, rows * cols).astype(np.float64) / 255.0
    return Dataset(images, Source(source), labels, image_shape=(rows, cols))


def load_mnist_dir(directory, split="train") -> Dataset:
    img_name, lbl_name = MNIST_FILES[split]
    paths = []
    for name in (img_name, lbl_name):
        path = os.path.join(directory, name)
        if not os.path.exists(path) and os.path.exists(path + ".gz"):
            path += ".gz"
        paths.append(path)
    source = Source.MNIST_TRAIN if split == "train" else Source.MNIST_TEST
    return load_mnist_idx(paths[0], paths[1], source)


def dataset_to_idx(dataset: Dataset):
    """Inverse of :func:`load_mnist_idx`: ``(image_bytes, label_bytes_or_None)``."""
    rows, cols = dataset.image_shape
    pixels = np.rint(dataset.images * 255.0).astype(np.uint8).reshape(dataset.n, rows, cols)
    labels = None if dataset.labels is None else idx_bytes(dataset.labels.astype(np.uint8))
    return idx_bytes(pixels), labels


# -- synthetic manifold ----------------------------------------------------------

_SPLIT_STREAM = {"train": 1, "test": 2}


def manifold_parameters(d_x: int, k: int, seed: int):
    """The fixed maps ``(A, B, c)`` of the generator for a given seed."""
    rng = RngStream(seed, stream_id=0)
    a = rng.normal((d_x, k)) * (1.5 / math.sqrt(k))
    b = rng.normal((d_x, k)) * (1.0 / math.sqrt(k))
    c = rng.normal(d_x) * 0.5
    return a, b, c


def manifold_map(t, a, b, c):
    """Pre-logistic features ``A sin(pi t) + B t + c`` for rows of ``t``."""
    t = np.atleast_2d(t)
    return np.sin(np.pi * t) @ a.T + t @ b.T + c


def _logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def synthetic_manifold(n: int, d_x: int, k: int, seed: int, split: str = "train") -> Dataset:
    """Points on a k-dimensional curved manifold in (0, 1)^d_x.

    The maps depend only on ``seed``; ``split`` selects an independent stream
    of manifold coordinates, so train and test share the same manifold.
    """
    if not 1 <= k < d_x:
        raise DomainError(f"need 1 <= k < d_x, got k={k}, d_x={d_x}")
    if split not in _SPLIT_STREAM:
        raise DomainError(f"unknown split {split!r}")
    a, b, c = manifold_parameters(d_x, k, seed)
    t = 2.0 * RngStream(seed, _SPLIT_STREAM[split]).uniform((n, k)) - 1.0
    pre = manifold_map(t, a, b, c)
    side = math.isqrt(d_x)
    shape = (side, side) if side * side == d_x else (1, d_x)
    return Dataset(_logistic(pre), Source.SYNTHETIC, intrinsic_dim=k, image_shape=shape,
                   latent=t, pre_activation=pre)
