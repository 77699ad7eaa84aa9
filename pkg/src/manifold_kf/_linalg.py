"""Small dense helpers for the covariance checks on the filter hot path."""
from __future__ import annotations

import math

import numpy as np

# closed forms lose accuracy near repeated eigenvalues; below this fraction of
# the matrix scale the exact solver is consulted instead
_SCREEN = 1e-6


def min_eigenvalue(P: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    1x1 to 3x3 use closed forms as a fast screen; anything close to zero is
    re-evaluated with LAPACK.
    """
    n = P.shape[0]
    if n == 1:
        return float(P[0, 0])
    if n == 2:
        (a, b), (_, d) = P.tolist()
        lam = 0.5 * (a + d) - math.hypot(0.5 * (a - d), b)
        scale = abs(a) + abs(d)
    elif n == 3:
        (a, b, c), (_, d, e), (_, _, f) = P.tolist()
        p1 = b * b + c * c + e * e
        scale = abs(a) + abs(d) + abs(f)
        if p1 == 0.0:
            lam = min(a, d, f)
        else:
            q = (a + d + f) / 3.0
            aq, dq, fq = a - q, d - q, f - q
            p = math.sqrt((aq * aq + dq * dq + fq * fq + 2.0 * p1) / 6.0)
            det = aq * (dq * fq - e * e) - b * (b * fq - e * c) + c * (b * e - dq * c)
            r = max(-1.0, min(1.0, det / (2.0 * p**3)))
            phi = math.acos(r) / 3.0
            lam = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    else:
        return float(np.linalg.eigvalsh(P)[0])
    if not math.isfinite(lam) or lam < _SCREEN * scale:
        return float(np.linalg.eigvalsh(P)[0])
    return lam


def all_finite(a: np.ndarray) -> bool:
    """True when no entry is inf or nan.

    A single reduction; a sum that overflows to inf counts as non-finite,
    which only happens for entries near the float limit.
    """
    return math.isfinite(a.sum())
