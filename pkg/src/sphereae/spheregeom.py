"""Closed-form geometry of spheres in high dimensions.

Dimensions are *ambient*: ``SphereSpec(ambient_dim=D)`` is the sphere of
radius r inside R^D, i.e. the set of length-D vectors of norm r.  The chord
(distance) formulas below are written with the exponent parameter equal to D,
which reproduces the circle (D=2, mean chord 4/pi) and the ordinary 2-sphere
(D=3, mean chord 4/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import gk15, integrate
from .special import log_gamma

_LOG_SQRT_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class SphereSpec:
    ambient_dim: int
    radius: float = 1.0

    def __post_init__(self):
        if int(self.ambient_dim) != self.ambient_dim or self.ambient_dim < 2:
            raise DomainError(f"ambient_dim must be an integer >= 2, got {self.ambient_dim!r}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError(f"radius must be positive and finite, got {self.radius!r}")


@dataclass(frozen=True)
class ChordStats:
    mean: float
    std: float
    asymptotic_mean: float
    asymptotic_std: float

    @property
    def relative_std(self) -> float:
        return self.std / self.mean


def log_chord_normalizer(dim: int) -> float:
    """ln c(D) with c(D) = sqrt(pi) Gamma((D-1)/2) / Gamma(D/2)."""
    return _LOG_SQRT_PI + log_gamma((dim - 1) / 2.0) - log_gamma(dim / 2.0)


def log_chord_density(sphere: SphereSpec, xi):
    """Natural log of the chord-length density; ``-inf`` where it vanishes."""
    d = sphere.ambient_dim
    r = sphere.radius
    xi = np.asarray(xi, dtype=float)
    if np.any(~np.isfinite(xi)) or np.any(xi < 0) or np.any(xi > 2 * r):
        raise DomainError(f"chord length must lie in [0, {2 * r}]")
    s = xi / (2.0 * r)
    with np.errstate(divide="ignore", invalid="ignore"):
        # 0 * log(0) terms are the D=2 (xi^0) and D=3 ((1-s^2)^0) cases
        power_term = (d - 2) * np.log(xi) if d != 2 else np.zeros_like(xi)
        shell = np.log1p(-s) + np.log1p(s)
        shell_term = 0.5 * (d - 3) * shell if d != 3 else np.zeros_like(xi)
    return power_term + shell_term - log_chord_normalizer(d) - (d - 1) * math.log(r)


def chord_density(sphere: SphereSpec, xi):
    """Density of the distance between two independent uniform points on the sphere.

    Scalars in, float out; arrays are evaluated element-wise.  For D=2 the
    density diverges at ``xi = 2r`` and ``inf`` is returned there.
    """
    out = np.exp(log_chord_density(sphere, xi))
    return float(out) if out.ndim == 0 else out


def chord_stats(sphere: SphereSpec) -> ChordStats:
    d = sphere.ambient_dim
    r = sphere.radius
    log_mean_unit = (d - 1) * math.log(2.0) + 2.0 * log_gamma(d / 2.0) - _LOG_SQRT_PI - log_gamma(d - 0.5)
    mean_unit = math.exp(log_mean_unit)
    # E[xi^2] = 2 r^2 exactly, so var = 2 r^2 - mean^2
    std_unit = math.sqrt(2.0) * math.sqrt(max(0.0, 1.0 - mean_unit * mean_unit / 2.0))
    return ChordStats(
        mean=r * mean_unit,
        std=r * std_unit,
        asymptotic_mean=math.sqrt(2.0) * r * (1.0 - 1.0 / (8.0 * d)),
        asymptotic_std=r / math.sqrt(2.0 * d),
    )


def annulus_volume_fraction(sphere, eps: float) -> float:
    """Fraction of a ball's volume within ``eps * r`` of its boundary: 1 - (1 - eps)^D.

    ``sphere`` may be a :class:`SphereSpec` or a bare dimension (D >= 1 is
    accepted here since the formula is meaningful for the unit interval).
    """
    dim = sphere.ambient_dim if isinstance(sphere, SphereSpec) else int(sphere)
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return -math.expm1(dim * math.log1p(-eps))


# Angular form: with xi = 2 r sin(theta / 2) the chord density pushes forward
# to sin(theta)^(D-2) / c(D) on [0, pi], which is smooth at both ends even for
# D = 2 and D = 3.  All cumulative quantities are integrated in theta.

def _angle_density(dim: int, theta):
    log_c = log_chord_normalizer(dim)
    with np.errstate(divide="ignore"):
        return np.exp((dim - 2) * np.log(np.sin(theta)) - log_c) if dim != 2 else np.full_like(theta, math.exp(-log_c))


def chord_angle(sphere: SphereSpec, xi):
    s = np.clip(np.asarray(xi, dtype=float) / (2.0 * sphere.radius), 0.0, 1.0)
    return 2.0 * np.arcsin(s)


def chord_cdf(sphere: SphereSpec, xi, grid: int = 512):
    """P(chord <= xi), evaluated by Gauss-Kronrod quadrature of the density.

    The query points are merged with a uniform angular grid so every
    integration panel is short; each panel gets a 15-point Kronrod rule and
    the panels are accumulated in order.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(xi > 2 * sphere.radius):
        raise DomainError(f"chord length must lie in [0, {2 * sphere.radius}]")
    theta = chord_angle(sphere, xi).ravel()
    order = np.argsort(theta, kind="stable")
    knots = np.concatenate([np.linspace(0.0, math.pi, grid + 1), theta[order]])
    kind = np.concatenate([np.zeros(grid + 1, dtype=bool), np.ones(theta.size, dtype=bool)])
    perm = np.argsort(knots, kind="stable")
    knots, kind = knots[perm], kind[perm]
    panels, _ = gk15(lambda t: _angle_density(sphere.ambient_dim, t), knots[:-1], knots[1:])
    cumulative = np.concatenate([[0.0], np.cumsum(panels)])
    out = np.empty(theta.size)
    out[order] = np.clip(cumulative[kind], 0.0, 1.0)
    out = out.reshape(xi.shape)
    return float(out) if out.ndim == 0 else out


def chord_moment(sphere: SphereSpec, power: int, atol: float = 1e-12) -> float:
    """E[xi^power] by adaptive quadrature in the angular variable."""
    r = sphere.radius
    d = sphere.ambient_dim

    def integrand(t):
        return (2.0 * r * np.sin(0.5 * t)) ** power * _angle_density(d, t)

    return integrate(integrand, 0.0, math.pi, atol=atol).value
