"""Chi-square validation gating.

The quantile is found by bisection on the regularized lower incomplete gamma
function, evaluated with its power series below ``x = a + 1`` and with a
Lentz continued fraction above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import NumericalError

__all__ = ["gamma_p", "chi2_cdf", "chi2_quantile", "gate_test", "GateConfig"]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 500
MAX_DOF = 10
_COND_LIMIT = 1e12


def _gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_frac(a: float, x: float) -> float:
    # upper tail Q(a, x) via modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function P(a, x)."""
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cont_frac(a, x)


def chi2_cdf(x: float, dof: int) -> float:
    return gamma_p(0.5 * dof, 0.5 * x)


@lru_cache(maxsize=64)
def chi2_quantile(dof: int, a: float) -> float:
    """Value ``gamma`` with ``P(chi2_dof <= gamma) = a``.

    >>> round(chi2_quantile(2, 0.95), 6)
    5.991465
    """
    if not isinstance(dof, (int, np.integer)) or not 1 <= dof <= MAX_DOF:
        raise ValueError(f"dof must be an integer in [1, {MAX_DOF}], got {dof!r}")
    if not 0.0 < a < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {a!r}")
    lo, hi = 0.0, max(1.0, float(dof))
    while chi2_cdf(hi, dof) < a:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, dof) < a:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def mahalanobis_sq(innovation, S) -> float:
    """``nu^T S^-1 nu`` with a conditioning check on ``S``."""
    if type(innovation) is not np.ndarray or innovation.ndim != 1:
        innovation = np.atleast_1d(np.asarray(innovation, dtype=float))
    if type(S) is not np.ndarray or S.ndim != 2:
        S = np.atleast_2d(np.asarray(S, dtype=float))
    nu = innovation
    if S.shape != (nu.size, nu.size):
        raise ValueError(f"innovation of length {nu.size} with covariance of shape {S.shape}")
    if S.shape == (1, 1):
        s = S[0, 0]
        if not s > 0.0:
            raise NumericalError(f"innovation variance {s!r} is not positive")
        return float(nu[0] * nu[0] / s)
    if np.linalg.cond(S) > _COND_LIMIT:
        raise NumericalError("innovation covariance is singular")
    return float(nu @ np.linalg.solve(S, nu))


def gate_test(innovation, S, gamma: float) -> bool:
    """Accept (True) iff the squared Mahalanobis distance is below ``gamma``."""
    return mahalanobis_sq(innovation, S) < gamma


@dataclass(frozen=True)
class GateConfig:
    """Gate threshold at significance ``significance`` for ``dof`` degrees of freedom."""

    significance: float = 0.95
    dof: int = 1
    gamma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma", chi2_quantile(self.dof, self.significance))
