"""Log-Gamma for positive reals, accurate in the relative sense everywhere.

Near the zeros of ln Gamma (x = 1 and x = 2) a plain Lanczos or Stirling
evaluation loses relative accuracy, so the interval [0.5, 2.5) uses the Taylor
series of ln Gamma(1 + e) whose coefficients are zeta values.  Larger
arguments use the recurrence down to [1.5, 2.5) or, from 7 on, the Stirling
series.
"""

from __future__ import annotations

import math

from scipy.special import zeta

from .errors import DomainError

_EULER_GAMMA = 0.57721566490153286060651209008240243
_HALF_LOG_TWO_PI = 0.91893853320467274178032973640561764

# ln Gamma(1 + e) = -gamma*e + sum_{k>=2} (-1)^k zeta(k) e^k / k, |e| <= 1/2
_N_TAYLOR = 60
_TAYLOR = [0.0, -_EULER_GAMMA] + [
    (-1) ** k * float(zeta(k, 1)) / k for k in range(2, _N_TAYLOR + 1)
]

# B_{2k} / (2k (2k - 1)) for k = 1..10
_STIRLING = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
]

_STIRLING_MIN = 7.0


def _lngamma_1p(e: float) -> float:
    # Horner on the Taylor polynomial; |e| <= 0.5 keeps the tail below 1e-19.
    acc = 0.0
    for c in reversed(_TAYLOR[1:]):
        acc = acc * e + c
    return acc * e + 0.0


def _stirling(x: float) -> float:
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_STIRLING):
        series = series * inv2 + c
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_TWO_PI + series * inv


def log_gamma(x: float) -> float:
    """Return ``ln Gamma(x)`` for finite ``x > 0``.

    Relative error stays below 1e-12 over [0.5, 2000] (checked against a
    40-digit reference in the tests).
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    if x >= _STIRLING_MIN:
        return _stirling(x)
    if x < 0.5:
        # Gamma(x) = Gamma(x + 1) / x
        return log_gamma(x + 1.0) - math.log(x)
    if x < 1.5:
        return _lngamma_1p(x - 1.0)
    if x < 2.5:
        e = x - 2.0
        return math.log1p(e) + _lngamma_1p(e)
    shift = 0.0
    while x >= 2.5:
        x -= 1.0
        shift += math.log(x)
    return shift + log_gamma(x)
