"""Exact 2-Wasserstein distance between equal-size point sets.

Plans are doubly stochastic with unit row and column sums (total mass n).
The minimum of a linear objective over that polytope is attained at a
permutation matrix, so the transport problem is solved exactly as a linear
assignment problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import RngStream
from .sampling import Prior, centerize, draw, spherize

MAX_POINTS = 4096


@dataclass(frozen=True)
class TransportPlan:
    assignment: np.ndarray  # assignment[i] = j pairs z_i with z'_j
    objective: float


def _as_points(z) -> np.ndarray:
    return np.asarray(getattr(z, "points", z), dtype=float)


def cost_matrix(z, zp) -> np.ndarray:
    """Squared Euclidean distances ``C[i, j] = ||z_i - z'_j||^2``.

    Accepts point clouds or plain arrays.  For D >= 512 the coordinate sum is
    Kahan-compensated; either way the result is exactly antisymmetric under
    swapping the arguments (``cost(a, b) == cost(b, a).T``).
    """
    a, b = _as_points(z), _as_points(zp)
    if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape:
        raise DomainError(f"point sets must have equal shapes, got {a.shape} and {b.shape}")
    n, dim = a.shape
    if dim < 512:
        diff = a[:, None, :] - b[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    total = np.zeros((n, n))
    comp = np.zeros((n, n))
    for k in range(dim):
        d = a[:, k][:, None] - b[:, k][None, :]
        y = d * d - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def linear_assignment(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect matching of a square cost matrix.

    Shortest augmenting paths with dual potentials (Hungarian method, O(n^3)).
    Rows are inserted one at a time; the inner Dijkstra-like scan is
    vectorized over columns.  Ties resolve to the lowest column index.
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    if n != m:
        raise DomainError(f"cost matrix must be square, got {cost.shape}")
    inf = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)  # owner[j]: 1-based row matched to column j; column 0 is the root
    way = np.zeros(n + 1, dtype=np.int64)
    for row in range(1, n + 1):
        owner[0] = row
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            reduced = cost[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            candidates = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(candidates)) + 1
            delta = candidates[j1 - 1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    assignment = np.empty(n, dtype=np.int64)
    assignment[owner[1:] - 1] = np.arange(n)
    return assignment


def plan_objective(cost: np.ndarray, assignment: np.ndarray) -> float:
    return math.fsum(cost[np.arange(cost.shape[0]), assignment])


def exact_w2(z, zp):
    """Return ``(W2, plan)`` under the unit-marginal (mass n) convention."""
    a, b = _as_points(z), _as_points(zp)
    if a.shape != b.shape:
        raise DomainError(f"point sets must have equal shapes, got {a.shape} and {b.shape}")
    if a.shape[0] > MAX_POINTS:
        raise DomainError(f"exact solver is limited to n <= {MAX_POINTS}")
    cost = cost_matrix(a, b)
    assignment = linear_assignment(cost)
    objective = plan_objective(cost, assignment)
    return math.sqrt(max(objective, 0.0)), TransportPlan(assignment, objective)


@dataclass(frozen=True)
class ConvergenceRow:
    seed: int
    dim: int
    n: int
    prior_a: str
    prior_b: str
    w2: float
    ratio: float


@dataclass(frozen=True)
class ConvergenceSummary:
    dim: int
    mean_ratio: float
    std_ratio: float
    seeds: int


def normalized_cloud(prior: Prior, rng: RngStream, n: int, dim: int, radius: float = 1.0):
    return spherize(centerize(draw(prior, rng, n, dim)), radius)


def w2_convergence_experiment(prior_a: Prior, prior_b: Prior, n: int, dims, seeds, radius: float = 1.0):
    """W2 between centered, spherized clouds from two priors across dimensions.

    For each seed s and dimension D the two clouds use streams ``(s, 2D)`` and
    ``(s, 2D + 1)``, so a row does not depend on which other dimensions are in
    the sweep.  ``ratio = W2 / (sqrt(2n) r)`` tends to 1 as D grows.
    Returns ``(rows, summary)``; ``summary`` has one entry per D with the
    mean and sample standard deviation of the ratio over seeds.
    """
    dims = sorted(int(d) for d in dims)
    seeds = [int(s) for s in seeds]
    if not dims or not seeds:
        raise DomainError("need at least one dimension and one seed")
    if n > 512:
        raise DomainError("convergence experiment is limited to n <= 512")
    rows = []
    for dim in dims:
        for seed in seeds:
            za = normalized_cloud(prior_a, RngStream(seed, 2 * dim), n, dim, radius)
            zb = normalized_cloud(prior_b, RngStream(seed, 2 * dim + 1), n, dim, radius)
            w2, _ = exact_w2(za, zb)
            rows.append(ConvergenceRow(seed, dim, n, prior_a.label, prior_b.label, w2,
                                       w2 / (math.sqrt(2.0 * n) * radius)))
    summary = []
    for dim in dims:
        ratios = np.array([r.ratio for r in rows if r.dim == dim])
        std = float(ratios.std(ddof=1)) if ratios.size > 1 else 0.0
        summary.append(ConvergenceSummary(dim, float(ratios.mean()), std, int(ratios.size)))
    return rows, summary
