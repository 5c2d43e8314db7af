"""Seeded draws from the four latent priors, centering/spherization, and
Monte-Carlo checks of the chord distribution and of the row-mean CLT."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .errors import DataError, DegenerateInputError, DomainError, UnsupportedParameterError
from .rng import RngStream
from .spheregeom import SphereSpec, chord_cdf, chord_stats

POISSON_MAX_LAMBDA = 30.0


class PriorKind(str, enum.Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"
    POISSON = "poisson"
    CHI_SQUARED = "chi2"


@dataclass(frozen=True)
class Prior:
    """Coordinate-wise i.i.d. latent prior.

    ``param`` is lambda for Poisson and the degrees of freedom k for
    chi-squared; it is ignored for the standard normal and for Uniform(-1, 1).
    """

    kind: PriorKind
    param: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PriorKind(self.kind))
        if self.kind is PriorKind.POISSON and not self.param > 0:
            raise DomainError(f"Poisson rate must be > 0, got {self.param!r}")
        if self.kind is PriorKind.CHI_SQUARED and (self.param < 1 or int(self.param) != self.param):
            raise DomainError(f"chi-squared degrees of freedom must be a positive integer, got {self.param!r}")

    @classmethod
    def normal(cls):
        return cls(PriorKind.NORMAL)

    @classmethod
    def uniform(cls):
        return cls(PriorKind.UNIFORM)

    @classmethod
    def poisson(cls, lam=4.0):
        return cls(PriorKind.POISSON, float(lam))

    @classmethod
    def chi_squared(cls, k=1):
        if float(k) != int(k):
            raise DomainError(f"chi-squared degrees of freedom must be a positive integer, got {k!r}")
        return cls(PriorKind.CHI_SQUARED, int(k))

    @classmethod
    def parse(cls, text: str) -> "Prior":
        """Parse ``normal``, ``uniform``, ``poisson[:lam]`` or ``chi2[:k]``."""
        name, _, arg = text.strip().lower().partition(":")
        aliases = {"gaussian": "normal", "chi": "chi2", "chisquared": "chi2", "chi-squared": "chi2"}
        name = aliases.get(name, name)
        try:
            kind = PriorKind(name)
        except ValueError:
            raise DomainError(f"unknown prior {text!r}") from None
        if kind is PriorKind.POISSON:
            return cls.poisson(float(arg) if arg else 4.0)
        if kind is PriorKind.CHI_SQUARED:
            return cls.chi_squared(int(arg) if arg else 1)
        return cls(kind)

    @property
    def label(self) -> str:
        if self.kind is PriorKind.POISSON:
            return f"poisson:{self.param:g}"
        if self.kind is PriorKind.CHI_SQUARED:
            return f"chi2:{int(self.param)}"
        return self.kind.value

    @property
    def mean(self) -> float:
        return {PriorKind.NORMAL: 0.0, PriorKind.UNIFORM: 0.0}.get(self.kind, float(self.param))

    @property
    def std(self) -> float:
        if self.kind is PriorKind.NORMAL:
            return 1.0
        if self.kind is PriorKind.UNIFORM:
            return 1.0 / math.sqrt(3.0)
        if self.kind is PriorKind.POISSON:
            return math.sqrt(self.param)
        return math.sqrt(2.0 * self.param)


@dataclass(frozen=True)
class PointCloud:
    """An ``n x D`` matrix of latent samples plus provenance flags."""

    points: np.ndarray
    prior: str = "unknown"
    centered: bool = False
    spherized: bool = False
    seed: int | None = None
    radius: float | None = None

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def sphere(self) -> SphereSpec | None:
        return SphereSpec(self.dim, self.radius) if self.spherized else None

    def header(self) -> str:
        seed = "" if self.seed is None else str(self.seed)
        radius = "" if self.radius is None else repr(float(self.radius))
        return (f"dim={self.dim},prior={self.prior},centered={str(self.centered).lower()},"
                f"spherized={str(self.spherized).lower()},seed={seed},radius={radius}")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            for row in self.points:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "PointCloud":
        with open(path) as fh:
            header = fh.readline().strip()
            fields = dict(item.split("=", 1) for item in header.split(",") if "=" in item)
            if "dim" not in fields:
                raise DataError(f"{path}: missing 'dim=' header")
            dim = int(fields["dim"])
            rows = [line for line in fh if line.strip()]
        points = np.array([[float(v) for v in line.split(",")] for line in rows], dtype=float).reshape(-1, dim)
        flag = lambda key: fields.get(key, "false").lower() == "true"  # noqa: E731
        return cls(
            points=points,
            prior=fields.get("prior", "unknown"),
            centered=flag("centered"),
            spherized=flag("spherized"),
            seed=int(fields["seed"]) if fields.get("seed") else None,
            radius=float(fields["radius"]) if fields.get("radius") else (1.0 if flag("spherized") else None),
        )


def _poisson_inversion(u: np.ndarray, lam: float) -> np.ndarray:
    # Sequential search: k is the smallest integer with F(k) >= u.
    k = np.zeros(u.shape, dtype=np.int64)
    p = np.full(u.shape, math.exp(-lam))
    cdf = p.copy()
    active = u > cdf
    j = 0
    while np.any(active):
        j += 1
        p = p * (lam / j)
        cdf = cdf + p
        k[active] = j
        active &= u > cdf
        if j > 1000:  # F(k) saturated below u by rounding
            break
    return k.astype(np.float64)


def sample_prior(prior: Prior, rng: RngStream, shape) -> np.ndarray:
    """Raw coordinate draws of the given shape (row-major consumption)."""
    if prior.kind is PriorKind.NORMAL:
        return rng.normal(shape)
    if prior.kind is PriorKind.UNIFORM:
        return 2.0 * rng.uniform(shape) - 1.0
    if prior.kind is PriorKind.POISSON:
        if prior.param > POISSON_MAX_LAMBDA:
            raise UnsupportedParameterError(
                f"Poisson inversion is limited to lambda <= {POISSON_MAX_LAMBDA:g}, got {prior.param:g}")
        return _poisson_inversion(rng.uniform(shape), prior.param)
    k = int(prior.param)
    count = int(np.prod(shape, dtype=np.int64))
    z = rng.normal((count, k))
    return np.sum(z * z, axis=1).reshape(shape)


def draw(prior: Prior, rng: RngStream, n: int, dim: int) -> PointCloud:
    if n < 1 or dim < 1:
        raise DomainError(f"need n >= 1 and D >= 1, got n={n}, D={dim}")
    points = sample_prior(prior, rng, (n, dim))
    return PointCloud(points=points, prior=prior.label, seed=rng.seed)


def centerize_rows(z: np.ndarray) -> np.ndarray:
    return z - z.mean(axis=1, keepdims=True)


def centerize(cloud: PointCloud) -> PointCloud:
    """Subtract each row's coordinate mean.  Already-centered clouds are returned as is."""
    if cloud.centered:
        return cloud
    return replace(cloud, points=centerize_rows(cloud.points), centered=True)


def spherize_rows(z: np.ndarray, radius: float = 1.0) -> np.ndarray:
    norms = np.linalg.norm(z, axis=1)
    floor = 1e-12 * math.sqrt(z.shape[1])
    bad = np.flatnonzero(norms <= floor)
    if bad.size:
        raise DegenerateInputError("row norm too small to project onto the sphere", int(bad[0]))
    return z * (radius / norms)[:, None]


def spherize(cloud: PointCloud, radius: float = 1.0) -> PointCloud:
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius!r}")
    return replace(cloud, points=spherize_rows(cloud.points, radius), spherized=True, radius=float(radius))


def ks_statistic(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between an empirical sample and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - f), np.max(f - (i - 1) / m)))


@dataclass(frozen=True)
class ChordSample:
    mean: float
    std: float
    ks_statistic: float
    reference_dim: int
    pairs: int


def random_pair_distances(points: np.ndarray, pair_count: int, rng: RngStream) -> np.ndarray:
    """Distances between ``pair_count`` uniformly drawn index pairs with i != j."""
    n = points.shape[0]
    if n < 2:
        raise DomainError("need at least 2 points to form pairs")
    i = rng.integers(n, pair_count)
    j = rng.integers(n - 1, pair_count)
    j = j + (j >= i)
    return np.linalg.norm(points[i] - points[j], axis=1)


def reference_sphere(cloud: PointCloud) -> SphereSpec:
    """The sphere a spherized cloud is uniformly spread over, if the prior allows.

    Centered rows lie in the hyperplane orthogonal to the all-ones vector, so
    after spherization they live on a sphere of ambient dimension D - 1.
    """
    if not cloud.spherized:
        raise DomainError("cloud must be spherized")
    dim = cloud.dim - 1 if cloud.centered else cloud.dim
    return SphereSpec(dim, cloud.radius)


def mc_chord_stats(cloud: PointCloud, pair_count: int, rng: RngStream) -> ChordSample:
    """Empirical chord statistics and the KS distance to the closed-form law."""
    if pair_count < 1000:
        raise DomainError(f"pair_count must be >= 1000, got {pair_count}")
    if cloud.n < 2:
        raise DomainError("need at least 2 points to form pairs")
    sphere = reference_sphere(cloud)
    dist = random_pair_distances(cloud.points, pair_count, rng)
    dist = np.clip(dist, 0.0, 2.0 * sphere.radius)
    ks = ks_statistic(dist, lambda x: chord_cdf(sphere, x))
    return ChordSample(float(dist.mean()), float(dist.std()), ks, sphere.ambient_dim, pair_count)


def clt_standardized_means(prior: Prior, dim: int, n: int, rng: RngStream) -> np.ndarray:
    z = sample_prior(prior, rng, (n, dim))
    return math.sqrt(dim) * (z.mean(axis=1) - prior.mean) / prior.std


def clt_diagnostic(prior: Prior, dim: int, n: int, rng: RngStream) -> float:
    """KS distance between standardized row means and N(0, 1)."""
    if dim < 64 or n < 1000:
        raise DomainError(f"clt_diagnostic needs D >= 64 and n >= 1000, got D={dim}, n={n}")
    return ks_statistic(clt_standardized_means(prior, dim, n, rng), ndtr)


def closed_form_target(cloud: PointCloud):
    """Closed-form chord statistics for the cloud's reference sphere."""
    return chord_stats(reference_sphere(cloud))
