"""Extended Kalman filter on matrix Lie groups.

The state is a concentrated Gaussian: a mean on the group and a covariance
on the tangent space at that mean.  Prediction composes the mean with
``exp(Omega(mu, u))``; correction composes it with ``exp(K r)`` where ``r``
is the measurement residual ``log(h(mu)^-1 z)``.

For abelian groups ``Ad`` is the identity and ``Phi`` is the identity, so the
step reduces to ``F = I + C``.  Passing ``generic=True`` evaluates the full
expressions through the adjoint machinery instead, which is useful as a
cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ContractError, NumericalError
from .gating import gate_test
from ._linalg import all_finite, min_eigenvalue
from .lie import DEFAULT_PHI_ORDER, GroupElement, LieGroup, compose, inverse, wrap_to_pi

__all__ = [
    "ConcentratedGaussian",
    "SystemModel",
    "MeasurementModel",
    "UpdateReport",
    "compute_C",
    "compute_H",
    "predict",
    "update",
    "omega_from_f",
    "FD_STEP",
]

FD_STEP = 1e-6
SYM_TOL = 1e-10
PSD_TOL = 1e-9
COND_LIMIT = 1e12

OmegaFn = Callable[[GroupElement, np.ndarray], np.ndarray]


def _as_matrix(m, p: int, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape != (p, p):
        raise ValueError(f"{name} must be {p}x{p}, got shape {m.shape}")
    return m


def _check_psd(m: np.ndarray, name: str, strict: bool = False) -> None:
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    if np.max(np.abs(m - m.T), initial=0.0) > SYM_TOL * max(1.0, np.max(np.abs(m))):
        raise ValueError(f"{name} is not symmetric")
    w = np.linalg.eigvalsh(m)
    if strict and w[0] <= 0.0:
        raise ValueError(f"{name} is not positive definite")
    if w[0] < -SYM_TOL:
        raise ValueError(f"{name} is not positive semi-definite (min eigenvalue {w[0]:.3g})")


def finalize_covariance(P: np.ndarray) -> np.ndarray:
    """Symmetrize and enforce PSD; small negative eigenvalues are clamped."""
    P = 0.5 * (P + P.T)
    if not all_finite(P):
        raise NumericalError("covariance became non-finite")
    lam = min_eigenvalue(P)
    if lam >= 0.0:
        return P
    if lam < -PSD_TOL:
        raise NumericalError(f"covariance lost positive semi-definiteness (min eigenvalue {lam:.3g})")
    w, V = np.linalg.eigh(P)
    P = (V * np.clip(w, 0.0, None)) @ V.T
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class ConcentratedGaussian:
    """Filter belief ``X ~ G(mean, cov)``."""

    mean: GroupElement
    cov: np.ndarray

    def __post_init__(self):
        cov = _as_matrix(self.cov, self.mean.group.dim, "cov").copy()
        _check_psd(cov, "cov")
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)

    @property
    def group(self) -> LieGroup:
        return self.mean.group

    @classmethod
    def _trusted(cls, mean: GroupElement, cov: np.ndarray) -> "ConcentratedGaussian":
        # internal constructor for covariances that already went through finalize_covariance
        obj = object.__new__(cls)
        cov.setflags(write=False)
        object.__setattr__(obj, "mean", mean)
        object.__setattr__(obj, "cov", cov)
        return obj


@dataclass(frozen=True)
class SystemModel:
    """Motion model ``X' = X exp(Omega(X, u) + n)``, ``n ~ N(0, process_noise)``.

    ``jacobian_C`` is the derivative of ``Omega(mu exp(eps), u)`` with respect
    to ``eps`` at zero. When absent it is obtained by central differences.
    """

    group: LieGroup
    omega: OmegaFn
    process_noise: np.ndarray
    jacobian_C: Optional[Callable[[GroupElement, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        Q = _as_matrix(self.process_noise, self.group.dim, "process_noise")
        _check_psd(Q, "process_noise")
        object.__setattr__(self, "process_noise", Q)


@dataclass(frozen=True)
class MeasurementModel:
    """Measurement ``z = h(X) exp(m)`` with ``m ~ N(0, meas_noise)`` on ``meas_group``."""

    state_group: LieGroup
    meas_group: LieGroup
    h: Callable[[GroupElement], GroupElement]
    meas_noise: np.ndarray
    jacobian_H: Optional[Callable[[GroupElement], np.ndarray]] = None

    def __post_init__(self):
        R = _as_matrix(self.meas_noise, self.meas_group.dim, "meas_noise")
        _check_psd(R, "meas_noise", strict=True)
        object.__setattr__(self, "meas_noise", R)


@dataclass(frozen=True)
class UpdateReport:
    kalman_gain: np.ndarray
    innovation_tangent: np.ndarray
    scaled_innovation: np.ndarray
    innovation_cov: np.ndarray
    gated: bool


def _fd_steps(mu: GroupElement, fd_step: float) -> np.ndarray:
    if not fd_step > 0.0:
        raise ValueError("finite-difference step must be positive")
    return fd_step * np.maximum(1.0, np.abs(mu.coords))


def _omega(model: SystemModel, mu: GroupElement, u) -> np.ndarray:
    out = model.omega(mu, u)
    if type(out) is not np.ndarray or out.ndim != 1:
        out = np.asarray(out, dtype=float).reshape(-1)
    if out.size != model.group.dim:
        raise ContractError(f"Omega returned {out.size} values, expected {model.group.dim}")
    return out


def compute_C(model: SystemModel, mu: GroupElement, u=(), fd_step: float = FD_STEP) -> np.ndarray:
    """Jacobian of the displacement with respect to a tangent perturbation of the mean."""
    p = model.group.dim
    if model.jacobian_C is not None:
        C = model.jacobian_C(mu, u)
        if type(C) is not np.ndarray or C.shape != (p, p):
            C = _as_matrix(C, p, "jacobian_C")
        return C
    steps = _fd_steps(mu, fd_step)
    G = model.group
    C = np.empty((p, p))
    for i in range(p):
        eps = np.zeros(p)
        eps[i] = steps[i]
        plus = _omega(model, compose(mu, G.exp(eps)), u)
        minus = _omega(model, compose(mu, G.exp(-eps)), u)
        if not (np.isfinite(plus).all() and np.isfinite(minus).all()):
            raise NumericalError("Omega is not finite near the mean", eps=eps)
        C[:, i] = (plus - minus) / (2.0 * steps[i])
    return C


def _h(meas: MeasurementModel, x: GroupElement) -> GroupElement:
    y = meas.h(x)
    if not isinstance(y, GroupElement) or (y.group is not meas.meas_group and y.group != meas.meas_group):
        raise ContractError(f"h must return an element of {meas.meas_group!r}, got {y!r}")
    return y


def compute_H(meas: MeasurementModel, mu_pred: GroupElement, fd_step: float = FD_STEP) -> np.ndarray:
    """Measurement Jacobian in tangent coordinates at the predicted mean."""
    p, q = meas.state_group.dim, meas.meas_group.dim
    if meas.jacobian_H is not None:
        H = meas.jacobian_H(mu_pred)
        if type(H) is not np.ndarray or H.ndim != 2:
            H = np.atleast_2d(np.asarray(H, dtype=float))
        if H.shape != (q, p):
            raise ContractError(f"jacobian_H must be {q}x{p}, got shape {H.shape}")
        return H
    steps = _fd_steps(mu_pred, fd_step)
    G, Gm = meas.state_group, meas.meas_group
    h0_inv = inverse(_h(meas, mu_pred))
    H = np.empty((q, p))
    for i in range(p):
        eps = np.zeros(p)
        eps[i] = steps[i]
        plus = Gm.log(compose(h0_inv, _h(meas, compose(mu_pred, G.exp(eps)))))
        minus = Gm.log(compose(h0_inv, _h(meas, compose(mu_pred, G.exp(-eps)))))
        H[:, i] = (plus - minus) / (2.0 * steps[i])
    return H


def predict(
    state: ConcentratedGaussian,
    model: SystemModel,
    u=(),
    generic: bool = False,
    fd_step: float = FD_STEP,
    phi_order: int = DEFAULT_PHI_ORDER,
) -> ConcentratedGaussian:
    """Propagate the belief one step through ``model``."""
    mu, P = state.mean, state.cov
    G = mu.group
    if model.group is not G and model.group != G:
        raise ValueError(f"model on {model.group!r} applied to a state on {G!r}")
    omega = _omega(model, mu, u)
    if not all_finite(omega):
        raise NumericalError("Omega is not finite at the mean")
    C = compute_C(model, mu, u, fd_step)
    Q = model.process_noise
    if G.is_abelian and not generic:
        F = G.eye + C
        P_new = F @ P @ F.T + Q
    else:
        Phi = G.phi(omega, phi_order, generic=True)
        F = G.Ad(G.exp(-omega), generic=True) + Phi @ C
        P_new = F @ P @ F.T + Phi @ Q @ Phi.T
    mean = GroupElement._owned(G, mu.coords + omega)
    return ConcentratedGaussian._trusted(mean, finalize_covariance(P_new))


def _solve_gain(PHt: np.ndarray, S: np.ndarray) -> np.ndarray:
    if S.shape == (1, 1):
        s = S[0, 0]
        if not s > 0.0 or not math.isfinite(s):
            raise NumericalError(f"innovation variance {s!r} is not positive")
        return PHt / s
    if np.linalg.cond(S) > COND_LIMIT:
        raise NumericalError("innovation covariance is singular")
    return np.linalg.solve(S, PHt.T).T


def update(
    state: ConcentratedGaussian,
    z: GroupElement,
    meas: MeasurementModel,
    gate: Optional[float] = None,
    generic: bool = False,
    fd_step: float = FD_STEP,
    phi_order: int = DEFAULT_PHI_ORDER,
) -> tuple[ConcentratedGaussian, UpdateReport]:
    """Correct the belief with measurement ``z``.

    If ``gate`` is given and ``r^T S^-1 r >= gate`` for the residual ``r``,
    the measurement is rejected and the prior is returned unchanged with
    ``report.gated`` set.
    """
    mu, P = state.mean, state.cov
    G, Gm = mu.group, meas.meas_group
    if meas.state_group is not G and meas.state_group != G:
        raise ValueError(f"measurement model on {meas.state_group!r} applied to a state on {G!r}")
    if not isinstance(z, GroupElement) or (z.group is not Gm and z.group != Gm):
        raise ValueError(f"measurement must be an element of {Gm!r}")
    r = Gm.log_between(_h(meas, mu), z)
    H = compute_H(meas, mu, fd_step)
    PHt = P @ H.T
    S = H @ P @ H.T + meas.meas_noise
    if S.shape[0] > 1:
        S = 0.5 * (S + S.T)
    K = _solve_gain(PHt, S)
    nu = K @ r
    if gate is not None and not gate_test(r, S, gate):
        return state, UpdateReport(K, r, nu, S, True)
    P_upd = (G.eye - K @ H) @ P
    if G.is_abelian and not generic:
        P_new = P_upd
    else:
        Phi = G.phi(nu, phi_order, generic=True)
        P_new = Phi @ P_upd @ Phi.T
    post = ConcentratedGaussian._trusted(GroupElement._owned(G, mu.coords + nu), finalize_covariance(P_new))
    return post, UpdateReport(K, r, nu, S, False)


def omega_from_f(f: Callable[[np.ndarray, np.ndarray], np.ndarray], group: LieGroup) -> OmegaFn:
    """Build a displacement function from a classical transition ``x' = f(x, u)``.

    The displacement is ``f(x, u) - x`` in exponential coordinates, with the
    angular slots of the difference wrapped so that an ``f`` that wraps its
    own output yields the short way round.
    """
    idx = np.flatnonzero(group.angular_mask)

    def omega(X: GroupElement, u=()) -> np.ndarray:
        x = group.log(X)
        d = np.asarray(f(x, u), dtype=float).reshape(-1) - x
        if idx.size:
            d[idx] = wrap_to_pi(d[idx])
        return d

    return omega
