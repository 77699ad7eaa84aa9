"""Classical EKF on R^n with angle wrapping on designated slots.

This is the heuristic baseline: the filter runs in plain vector space, the
innovation of angular measurement slots is passed through :func:`wrap_to_pi`
and angular state slots are re-wrapped after every prediction and correction.
The covariance update is the plain ``(I - K H) P`` form.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exceptions import NumericalError
from .gating import gate_test
from ._linalg import all_finite, min_eigenvalue
from .lgekf import COND_LIMIT, UpdateReport
from .lie import _wrap_scalar

__all__ = ["WrappedState", "ekf_predict", "ekf_update", "ekf_update_with_report", "normalize"]

_SYM_TOL = 1e-10


def _slots(mask: np.ndarray) -> tuple:
    return tuple(mask.nonzero()[0].tolist())


def _wrap_slots(x: np.ndarray, slots: tuple) -> np.ndarray:
    x = np.array(x, dtype=float)
    for i in slots:
        x[i] = _wrap_scalar(x[i])
    return x


def _checked_cov(P: np.ndarray) -> np.ndarray:
    P = 0.5 * (P + P.T)
    if not all_finite(P):
        raise NumericalError("covariance became non-finite")
    if P.size and min_eigenvalue(P) < -_SYM_TOL:
        raise NumericalError("covariance is not positive semi-definite")
    return P


def _vec(a) -> np.ndarray:
    if type(a) is np.ndarray and a.ndim == 1 and a.dtype == float:
        return a
    return np.atleast_1d(np.asarray(a, dtype=float)).reshape(-1)


def _mat(a) -> np.ndarray:
    if type(a) is np.ndarray and a.ndim == 2 and a.dtype == float:
        return a
    return np.atleast_2d(np.asarray(a, dtype=float))


def _trusted(x: np.ndarray, cov: np.ndarray, state: "WrappedState") -> "WrappedState":
    # internal constructor: inputs already shaped, cov already checked; mask taken from ``state``
    mask = state.angular_mask
    slots = state._angular_slots
    new = object.__new__(WrappedState)
    x = _wrap_slots(x, slots)
    x.setflags(write=False)
    cov.setflags(write=False)
    object.__setattr__(new, "x", x)
    object.__setattr__(new, "cov", cov)
    object.__setattr__(new, "angular_mask", mask)
    object.__setattr__(new, "_angular_slots", slots)
    return new


@dataclass(frozen=True)
class WrappedState:
    """Mean ``x``, covariance ``cov`` and a mask of the angular slots of ``x``.

    Angular slots are wrapped on construction; an indefinite covariance raises
    :class:`NumericalError`.
    """

    x: np.ndarray
    cov: np.ndarray
    angular_mask: np.ndarray
    _angular_slots: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        n = x.size
        mask = np.array(self.angular_mask, dtype=bool).reshape(-1)
        cov = np.atleast_2d(np.array(self.cov, dtype=float))
        if mask.size != n:
            raise ValueError(f"angular_mask has {mask.size} entries for a state of length {n}")
        if cov.shape != (n, n):
            raise ValueError(f"cov must be {n}x{n}, got shape {cov.shape}")
        if np.max(np.abs(cov - cov.T)) > _SYM_TOL * max(1.0, np.max(np.abs(cov))):
            raise ValueError("cov is not symmetric")
        if n and min_eigenvalue(cov) < -_SYM_TOL:
            raise NumericalError("cov is not positive semi-definite")
        slots = _slots(mask)
        x = _wrap_slots(x, slots)
        object.__setattr__(self, "_angular_slots", slots)
        for a in (x, cov, mask):
            a.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "angular_mask", mask)


def normalize(state: WrappedState) -> WrappedState:
    """Wrap every angular slot. Idempotent."""
    return replace(state, x=_wrap_slots(state.x, state._angular_slots))


def ekf_predict(
    state: WrappedState,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    Q,
    u=(),
) -> WrappedState:
    """``x <- wrap(f(x, u))``, ``P <- F P F^T + Q`` with ``F`` evaluated at the prior mean."""
    x, P = state.x, state.cov
    n = x.size
    Fk = _mat(F(x, u))
    Q = _mat(Q)
    if Fk.shape != (n, n) or Q.shape != (n, n):
        raise ValueError(f"transition Jacobian {Fk.shape} and noise {Q.shape} must both be {n}x{n}")
    x_new = _vec(f(x, u))
    if x_new.size != n:
        raise ValueError(f"f returned {x_new.size} values, expected {n}")
    if not all_finite(x_new):
        raise NumericalError("state transition returned non-finite values")
    return _trusted(x_new, _checked_cov(Fk @ P @ Fk.T + Q), state)


def ekf_update_with_report(
    state: WrappedState,
    z,
    h: Callable[[np.ndarray], np.ndarray],
    H: Callable[[np.ndarray], np.ndarray],
    R,
    z_mask=None,
    gate: Optional[float] = None,
) -> tuple[WrappedState, UpdateReport]:
    """Like :func:`ekf_update` but also returns gain, innovation and gate outcome."""
    x, P = state.x, state.cov
    z = _vec(z)
    q = z.size
    if z_mask is None:
        slots = ()
    else:
        mask = np.asarray(z_mask, dtype=bool).reshape(-1)
        if mask.size != q:
            raise ValueError(f"z_mask has {mask.size} entries for a measurement of length {q}")
        slots = _slots(mask)
    Hk = _mat(H(x))
    R = _mat(R)
    if Hk.shape != (q, x.size) or R.shape != (q, q):
        raise ValueError(f"H {Hk.shape} / R {R.shape} inconsistent with q={q}, n={x.size}")
    hx = _vec(h(x))
    if hx.size != q:
        raise ValueError(f"h returned {hx.size} values, expected {q}")
    nu = z - hx
    for i in slots:
        nu[i] = _wrap_scalar(nu[i])
    PHt = P @ Hk.T
    S = Hk @ P @ Hk.T + R
    if q == 1:
        if not S[0, 0] > 0.0:
            raise NumericalError(f"innovation variance {S[0, 0]!r} is not positive")
        K = PHt / S[0, 0]
    else:
        if np.linalg.cond(S) > COND_LIMIT:
            raise NumericalError("innovation covariance is singular")
        K = PHt @ np.linalg.inv(S)
    dx = K @ nu
    if gate is not None and not gate_test(nu, S, gate):
        return state, UpdateReport(K, nu, dx, S, True)
    I_KH = -(K @ Hk)
    I_KH.flat[:: x.size + 1] += 1.0
    P_new = _checked_cov(I_KH @ P)
    return _trusted(x + dx, P_new, state), UpdateReport(K, nu, dx, S, False)


def ekf_update(state, z, h, H, R, z_mask=None, gate=None) -> WrappedState:
    """Correct with measurement ``z``; angular entries of ``z`` are flagged by ``z_mask``.

    The innovation ``z - h(x)`` has its angular entries wrapped and the
    corrected state is re-wrapped. Rejected (gated) measurements leave the
    state unchanged.
    """
    return ekf_update_with_report(state, z, h, H, R, z_mask, gate)[0]
