"""Reconstruction and sample-set metrics that need no pretrained networks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import RngStream

DEFAULT_PROJECTIONS = 128


@dataclass(frozen=True)
class MetricReport:
    mse: float
    swd: float
    n_projections: int
    seed: int


def mse(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DomainError(f"shape mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return float(np.mean(d * d))


def random_directions(n_proj: int, dim: int, rng: RngStream) -> np.ndarray:
    g = rng.normal((n_proj, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sliced_w2(x, y, n_proj: int = DEFAULT_PROJECTIONS, rng: RngStream | None = None, seed: int = 0) -> float:
    """Sliced 2-Wasserstein distance between equal-size samples.

    Each random unit direction reduces the problem to 1-D, where the optimal
    coupling matches order statistics.  The squared 1-D distances (mass-1
    normalization) are averaged over directions and the root is returned.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape != y.shape:
        raise DomainError(f"sliced_w2 needs equal (n, d) shapes, got {x.shape} and {y.shape}")
    if n_proj < 1:
        raise DomainError("n_proj must be >= 1")
    rng = RngStream(seed, stream_id=0) if rng is None else rng
    theta = random_directions(n_proj, x.shape[1], rng)
    px = np.sort(x @ theta.T, axis=0)
    py = np.sort(y @ theta.T, axis=0)
    per_direction = np.mean((px - py) ** 2, axis=0)
    return math.sqrt(float(np.mean(per_direction)))


def evaluate(x, x_rec, n_proj=DEFAULT_PROJECTIONS, seed=0) -> MetricReport:
    return MetricReport(mse(x, x_rec), sliced_w2(x, x_rec, n_proj, seed=seed), n_proj, seed)
