"""Concrete system and measurement models for azimuth tracking.

Each Lie-group model has a classical twin (``*_ekf``) describing the same
dynamics on R^n for the wrapped EKF, so the two filters can be run side by
side on identical inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .lgekf import MeasurementModel, SystemModel
from .lie import SO2, GroupElement, LieGroup, Product, RealN, wrap_to_pi

__all__ = [
    "SO2_GROUP",
    "SO2_R1",
    "SO2_R2",
    "PendulumParams",
    "ConstAccelParams",
    "VectorModel",
    "VectorMeasurement",
    "stationary_model",
    "pendulum_model",
    "const_accel_model",
    "const_vel_model",
    "azimuth_measurement",
    "const_accel_transition",
    "const_vel_transition",
    "jerk_noise",
    "accel_noise",
    "stationary_ekf",
    "pendulum_ekf",
    "const_accel_ekf",
    "const_vel_ekf",
    "azimuth_ekf",
]

SO2_GROUP = SO2()
SO2_R1 = Product(SO2(), RealN(1))
SO2_R2 = Product(SO2(), RealN(2))


@dataclass(frozen=True)
class PendulumParams:
    """Rotary joint ``x' = x + c1 sin(x) + c2``: gravity gain and velocity offset (rad)."""

    c1: float = 0.1
    c2: float = 0.05

    def __post_init__(self):
        if not (math.isfinite(self.c1) and math.isfinite(self.c2)):
            raise ValueError("pendulum coefficients must be finite")


@dataclass(frozen=True)
class ConstAccelParams:
    T: float = 0.1

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise ValueError(f"sampling period T must be positive, got {self.T!r}")


def _noise(Q, p: int) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape != (p, p):
        raise ValueError(f"noise covariance must be {p}x{p}, got shape {Q.shape}")
    if np.any(np.diag(Q) < 0):
        raise ValueError("noise covariance has a negative variance")
    return Q


def const_accel_transition(T: float) -> np.ndarray:
    return np.array([[1.0, T, 0.5 * T**2], [0.0, 1.0, T], [0.0, 0.0, 1.0]])


def const_vel_transition(T: float) -> np.ndarray:
    return np.array([[1.0, T], [0.0, 1.0]])


def jerk_noise(T: float, q: float) -> np.ndarray:
    """Discretized continuous white jerk of spectral density ``q`` (state ``[theta, omega, alpha]``)."""
    return q * np.array(
        [
            [T**5 / 20, T**4 / 8, T**3 / 6],
            [T**4 / 8, T**3 / 3, T**2 / 2],
            [T**3 / 6, T**2 / 2, T],
        ]
    )


def accel_noise(T: float, q: float) -> np.ndarray:
    """Discretized continuous white acceleration of spectral density ``q`` (state ``[theta, omega]``)."""
    return q * np.array([[T**3 / 3, T**2 / 2], [T**2 / 2, T]])


# -- Lie group models ------------------------------------------------------


def stationary_model(Q) -> SystemModel:
    """Random walk on SO(2): zero displacement, ``C = 0``."""
    zero = np.zeros(1)
    return SystemModel(
        SO2_GROUP,
        omega=lambda X, u=(): zero,
        process_noise=_noise(Q, 1),
        jacobian_C=lambda X, u=(): np.zeros((1, 1)),
    )


def pendulum_model(params: PendulumParams, Q) -> SystemModel:
    c1, c2 = params.c1, params.c2

    def omega(X: GroupElement, u=()):
        return np.array([c1 * math.sin(X.coords[0]) + c2])

    def jac(X: GroupElement, u=()):
        return np.array([[c1 * math.cos(X.coords[0])]])

    return SystemModel(SO2_GROUP, omega, _noise(Q, 1), jac)


def const_accel_model(params: ConstAccelParams, Q=None, q: float = 1.0) -> SystemModel:
    """Constant angular acceleration on SO(2) x R^2, state ``(R_theta, omega, alpha)``.

    ``Q`` defaults to :func:`jerk_noise` with spectral density ``q``.
    """
    T = params.T
    Q = jerk_noise(T, q) if Q is None else _noise(Q, 3)
    C = const_accel_transition(T) - np.eye(3)

    def omega(X: GroupElement, u=()):
        _, w, a = X.coords
        return np.array([T * w + 0.5 * T**2 * a, T * a, 0.0])

    return SystemModel(SO2_R2, omega, Q, lambda X, u=(): C)


def const_vel_model(params: ConstAccelParams, Q=None, q: float = 1.0) -> SystemModel:
    """Constant angular velocity on SO(2) x R, state ``(R_theta, omega)``."""
    T = params.T
    Q = accel_noise(T, q) if Q is None else _noise(Q, 2)
    C = const_vel_transition(T) - np.eye(2)

    def omega(X: GroupElement, u=()):
        return np.array([T * X.coords[1], 0.0])

    return SystemModel(SO2_R1, omega, Q, lambda X, u=(): C)


def azimuth_measurement(R, state_group: LieGroup = SO2_GROUP) -> MeasurementModel:
    """Observe the rotation component of the state directly on SO(2)."""
    idx = np.flatnonzero(state_group.angular_mask)
    if idx.size != 1:
        raise ValueError(f"{state_group!r} must have exactly one SO(2) slot")
    i = int(idx[0])
    H = np.zeros((1, state_group.dim))
    H[0, i] = 1.0

    def h(X: GroupElement) -> GroupElement:
        return GroupElement(SO2_GROUP, X.coords[i:i + 1])

    return MeasurementModel(state_group, SO2_GROUP, h, _noise(R, 1), lambda X: H)


# -- classical twins ---------------------------------------------------------


@dataclass(frozen=True)
class VectorModel:
    """Transition ``x' = f(x, u) + n`` with Jacobian ``F`` for the wrapped EKF."""

    f: Callable
    F: Callable
    Q: np.ndarray
    angular_mask: np.ndarray


@dataclass(frozen=True)
class VectorMeasurement:
    h: Callable
    H: Callable
    R: np.ndarray
    z_mask: Optional[np.ndarray] = None


def stationary_ekf(Q) -> VectorModel:
    return VectorModel(
        f=lambda x, u=(): np.array(x, dtype=float),
        F=lambda x, u=(): np.eye(1),
        Q=_noise(Q, 1),
        angular_mask=np.array([True]),
    )


def pendulum_ekf(params: PendulumParams, Q) -> VectorModel:
    c1, c2 = params.c1, params.c2
    return VectorModel(
        f=lambda x, u=(): np.array([x[0] + c1 * math.sin(x[0]) + c2]),
        F=lambda x, u=(): np.array([[1.0 + c1 * math.cos(x[0])]]),
        Q=_noise(Q, 1),
        angular_mask=np.array([True]),
    )


def const_accel_ekf(params: ConstAccelParams, Q=None, q: float = 1.0) -> VectorModel:
    F = const_accel_transition(params.T)
    return VectorModel(
        f=lambda x, u=(): F @ x,
        F=lambda x, u=(): F,
        Q=jerk_noise(params.T, q) if Q is None else _noise(Q, 3),
        angular_mask=np.array([True, False, False]),
    )


def const_vel_ekf(params: ConstAccelParams, Q=None, q: float = 1.0) -> VectorModel:
    F = const_vel_transition(params.T)
    return VectorModel(
        f=lambda x, u=(): F @ x,
        F=lambda x, u=(): F,
        Q=accel_noise(params.T, q) if Q is None else _noise(Q, 2),
        angular_mask=np.array([True, False]),
    )


def azimuth_ekf(R, n: int = 1) -> VectorMeasurement:
    """Observe slot 0 of an n-vector state; the measurement is angular."""
    H = np.zeros((1, n))
    H[0, 0] = 1.0
    return VectorMeasurement(
        h=lambda x: np.array([wrap_to_pi(float(x[0]))]),
        H=lambda x: H,
        R=_noise(R, 1),
        z_mask=np.array([True]),
    )
