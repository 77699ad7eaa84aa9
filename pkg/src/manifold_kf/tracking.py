"""Single-target azimuth tracking with validation gating.

:func:`run_tracker` drives either the Lie group filter or the wrapped EKF
over a timestamped measurement sequence. Missing measurements produce
predict-only steps and gated measurements leave the prior untouched.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import lgekf, models, wrapped_ekf
from .gating import GateConfig, chi2_quantile, gate_test
from .lie import GroupElement, wrap_to_pi

__all__ = [
    "Measurement",
    "TruthSample",
    "TrackRecord",
    "TrackerConfig",
    "DivergenceReport",
    "FILTER_KINDS",
    "MODEL_KINDS",
    "run_tracker",
    "track_steps",
    "compare_filters",
    "angular_rmse",
    "rmse",
    "chi2_quantile",
    "gate_test",
    "GateConfig",
]

log = logging.getLogger(__name__)

FILTER_KINDS = ("lgekf", "wrapped-ekf")
MODEL_KINDS = ("stationary", "pendulum", "const-accel", "const-vel")
_STATE_DIM = {"stationary": 1, "pendulum": 1, "const-accel": 3, "const-vel": 2}
_LIE_GROUPS = {
    "stationary": models.SO2_GROUP,
    "pendulum": models.SO2_GROUP,
    "const-accel": models.SO2_R2,
    "const-vel": models.SO2_R1,
}


@dataclass(frozen=True)
class Measurement:
    """Azimuth ``z`` (rad) at time ``t`` (s); ``z is None`` marks a dropout."""

    t: float
    z: Optional[float]

    @property
    def valid(self) -> bool:
        return self.z is not None


@dataclass(frozen=True)
class TruthSample:
    t: float
    theta: float
    omega: float
    alpha: float


@dataclass(frozen=True)
class TrackRecord:
    t: float
    z: Optional[float]
    gated: bool
    mean: tuple
    cov_diag: tuple
    truth: Optional[tuple] = None


@dataclass(frozen=True)
class TrackerConfig:
    """Filter set-up shared by both filter kinds.

    ``process_noise`` is the per-step variance for the SO(2) models
    (stationary, pendulum) and the spectral density of the white noise
    driving the highest derivative for const-accel and const-vel.
    ``gate_alpha=None`` disables gating. After ``reset_after`` consecutive
    gated measurements the track is considered lost and is re-initialized
    from the latest one; ``None`` disables the reset.
    """

    model: str = "const-accel"
    sigma_r: float = 0.1
    process_noise: float = 0.01
    c1: float = 0.1
    c2: float = 0.05
    gate_alpha: Optional[float] = 0.95
    rate_var: float = 1.0
    reset_after: Optional[int] = 5

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {', '.join(MODEL_KINDS)}")
        if not self.sigma_r > 0:
            raise ValueError("sigma_r must be positive")
        if not self.process_noise >= 0:
            raise ValueError("process_noise must be non-negative")
        if self.gate_alpha is not None and not 0 < self.gate_alpha < 1:
            raise ValueError("gate_alpha must lie in (0, 1)")
        if not self.rate_var > 0:
            raise ValueError("rate_var must be positive")
        if self.reset_after is not None and (isinstance(self.reset_after, bool) or not isinstance(self.reset_after, int) or self.reset_after < 1):
            raise ValueError("reset_after must be a positive integer or None")

    @property
    def state_dim(self) -> int:
        return _STATE_DIM[self.model]

    @property
    def gamma(self) -> Optional[float]:
        return None if self.gate_alpha is None else chi2_quantile(1, self.gate_alpha)

    def initial_cov(self) -> np.ndarray:
        return np.diag([self.sigma_r**2] + [self.rate_var] * (self.state_dim - 1))

    def uninformed_cov(self) -> np.ndarray:
        # variance of a uniform angle, used when the sequence opens with a dropout
        return np.diag([math.pi**2 / 3] + [self.rate_var] * (self.state_dim - 1))


class _LieFilter:
    def __init__(self, cfg: TrackerConfig, q_scale: float = 1.0):
        self.cfg = cfg
        self.q_scale = q_scale
        self._cache: dict = {}
        self.group = _LIE_GROUPS[cfg.model]
        self.meas = models.azimuth_measurement(cfg.sigma_r**2, self.group)

    def _system(self, dt: float) -> lgekf.SystemModel:
        m = self._cache.get(dt)
        if m is None:
            cfg, s = self.cfg, self.q_scale
            if cfg.model == "stationary":
                m = models.stationary_model(s * cfg.process_noise)
            elif cfg.model == "pendulum":
                m = models.pendulum_model(models.PendulumParams(cfg.c1, cfg.c2), s * cfg.process_noise)
            elif cfg.model == "const-accel":
                m = models.const_accel_model(models.ConstAccelParams(dt), q=s * cfg.process_noise)
            else:
                m = models.const_vel_model(models.ConstAccelParams(dt), q=s * cfg.process_noise)
            self._cache[dt] = m
        return m

    def init(self, theta: float, cov: np.ndarray):
        x = np.zeros(self.group.dim)
        x[0] = theta
        return lgekf.ConcentratedGaussian(GroupElement(self.group, x), cov)

    def predict(self, state, dt):
        return lgekf.predict(state, self._system(dt))

    def update(self, state, z, gamma):
        post, report = lgekf.update(state, GroupElement(models.SO2_GROUP, [z]), self.meas, gate=gamma)
        return post, report.gated

    @staticmethod
    def moments(state):
        return state.mean.coords, state.cov


class _WrappedFilter:
    def __init__(self, cfg: TrackerConfig, q_scale: float = 1.0):
        self.cfg = cfg
        self.q_scale = q_scale
        self._cache: dict = {}
        self.meas = models.azimuth_ekf(cfg.sigma_r**2, cfg.state_dim)

    def _system(self, dt: float) -> models.VectorModel:
        m = self._cache.get(dt)
        if m is None:
            cfg, s = self.cfg, self.q_scale
            if cfg.model == "stationary":
                m = models.stationary_ekf(s * cfg.process_noise)
            elif cfg.model == "pendulum":
                m = models.pendulum_ekf(models.PendulumParams(cfg.c1, cfg.c2), s * cfg.process_noise)
            elif cfg.model == "const-accel":
                m = models.const_accel_ekf(models.ConstAccelParams(dt), q=s * cfg.process_noise)
            else:
                m = models.const_vel_ekf(models.ConstAccelParams(dt), q=s * cfg.process_noise)
            self._cache[dt] = m
        return m

    def init(self, theta: float, cov: np.ndarray):
        x = np.zeros(self.cfg.state_dim)
        x[0] = theta
        mask = np.zeros(self.cfg.state_dim, dtype=bool)
        mask[0] = True
        return wrapped_ekf.WrappedState(x, cov, mask)

    def predict(self, state, dt):
        m = self._system(dt)
        return wrapped_ekf.ekf_predict(state, m.f, m.F, m.Q)

    def update(self, state, z, gamma):
        m = self.meas
        post, report = wrapped_ekf.ekf_update_with_report(state, [z], m.h, m.H, m.R, m.z_mask, gate=gamma)
        return post, report.gated

    @staticmethod
    def moments(state):
        return state.x, state.cov


def _make_filter(filter_kind: str, cfg: TrackerConfig, q_scale: float = 1.0):
    if filter_kind == "lgekf":
        return _LieFilter(cfg, q_scale)
    if filter_kind == "wrapped-ekf":
        return _WrappedFilter(cfg, q_scale)
    raise ValueError(f"unknown filter {filter_kind!r}; expected one of {', '.join(FILTER_KINDS)}")


def _check_sequence(measurements: Sequence[Measurement]) -> None:
    if not measurements:
        raise ValueError("measurement sequence is empty")
    ts = [m.t for m in measurements]
    if not all(math.isfinite(t) for t in ts):
        raise ValueError("timestamps must be finite")
    for k in range(1, len(ts)):
        if not ts[k] > ts[k - 1]:
            raise ValueError(f"timestamps must be strictly increasing (row {k}: {ts[k]!r} after {ts[k - 1]!r})")


def track_steps(
    filter_kind: str,
    cfg: TrackerConfig,
    measurements: Sequence[Measurement],
    q_scale: float = 1.0,
) -> Iterator[tuple]:
    """Yield ``(measurement, gated, mean, cov)`` per timestep with the full covariance.

    ``mean`` is in exponential coordinates (azimuth first). ``q_scale``
    multiplies the process noise.
    """
    _check_sequence(measurements)
    filt = _make_filter(filter_kind, cfg, q_scale)
    gamma = cfg.gamma
    limit = cfg.reset_after if gamma is not None else None
    state = None
    prev_t = None
    run = 0
    for m in measurements:
        gated = False
        if state is None:
            if m.valid:
                state = filt.init(m.z, cfg.initial_cov())
            else:
                log.debug("sequence opens with a dropout; starting from an uninformed azimuth")
                state = filt.init(0.0, cfg.uninformed_cov())
        else:
            # round so equal sampling periods share one cached model
            state = filt.predict(state, round(m.t - prev_t, 9))
            if m.valid:
                state, gated = filt.update(state, m.z, gamma)
                run = run + 1 if gated else 0
                if limit is not None and run >= limit:
                    log.info("t=%g: %d consecutive measurements gated; re-initializing", m.t, run)
                    state = filt.init(m.z, cfg.initial_cov())
                    gated, run = False, 0
        prev_t = m.t
        mean, cov = filt.moments(state)
        yield m, gated, mean, cov


def run_tracker(
    filter_kind: str,
    config: TrackerConfig,
    measurements: Sequence[Measurement],
    truth: Optional[Sequence[TruthSample]] = None,
) -> list[TrackRecord]:
    """Track the azimuth over ``measurements``; one :class:`TrackRecord` per step.

    The first valid measurement initializes the azimuth with rates at zero
    and covariance ``diag(sigma_r^2, rate_var, rate_var)``. If ``truth`` is
    given it must align one-to-one with ``measurements``.
    """
    if truth is not None and len(truth) != len(measurements):
        raise ValueError(f"{len(truth)} truth samples for {len(measurements)} measurements")
    out = []
    for k, (m, gated, mean, cov) in enumerate(track_steps(filter_kind, config, measurements)):
        tr = None
        if truth is not None:
            s = truth[k]
            tr = (s.theta, s.omega, s.alpha)[: config.state_dim]
        out.append(
            TrackRecord(
                t=m.t,
                z=m.z,
                gated=gated,
                mean=tuple(float(v) for v in mean),
                cov_diag=tuple(float(v) for v in np.diag(cov)),
                truth=tr,
            )
        )
    return out


@dataclass(frozen=True)
class DivergenceReport:
    """Per-step disagreement between the Lie group filter and the wrapped EKF."""

    mean_divergence: np.ndarray
    cov_divergence: np.ndarray
    gate_mismatches: int = 0

    @property
    def max_mean(self) -> float:
        return float(np.max(self.mean_divergence))

    @property
    def max_cov(self) -> float:
        return float(np.max(self.cov_divergence))

    @property
    def max_divergence(self) -> float:
        return max(self.max_mean, self.max_cov)


def compare_filters(
    config: TrackerConfig,
    measurements: Sequence[Measurement],
    wrapped_q_scale: float = 1.0,
) -> DivergenceReport:
    """Run both filters on the same data and measure how far apart they drift.

    Mean divergence is the max-abs difference with the azimuth slot wrapped;
    covariance divergence is the Frobenius norm of the difference.
    ``wrapped_q_scale`` perturbs the wrapped filter's process noise and exists
    only to exercise the failure path.
    """
    lie = track_steps("lgekf", config, measurements)
    wrapped = track_steps("wrapped-ekf", config, measurements, q_scale=wrapped_q_scale)
    m1s, m2s, P1s, P2s = [], [], [], []
    mismatches = 0
    for (_, g1, m1, P1), (_, g2, m2, P2) in zip(lie, wrapped):
        m1s.append(m1)
        m2s.append(m2)
        P1s.append(P1)
        P2s.append(P2)
        mismatches += g1 != g2
    d = np.array(m1s) - np.array(m2s)
    d[:, 0] = wrap_to_pi(d[:, 0])
    D = np.array(P1s) - np.array(P2s)
    mean_div = np.abs(d).max(axis=1)
    cov_div = np.sqrt((D * D).sum(axis=(1, 2)))
    return DivergenceReport(mean_div, cov_div, mismatches)


def angular_rmse(estimates, truth) -> float:
    """Root mean square of the wrapped differences ``estimates - truth``."""
    e = np.atleast_1d(np.asarray(estimates, dtype=float))
    t = np.atleast_1d(np.asarray(truth, dtype=float))
    if e.shape != t.shape:
        raise ValueError(f"length mismatch: {e.size} estimates vs {t.size} truth values")
    if e.size == 0:
        raise ValueError("need at least one sample")
    d = wrap_to_pi(e - t)
    return float(np.sqrt(np.mean(np.square(d))))


def rmse(estimates, truth) -> float:
    e = np.atleast_1d(np.asarray(estimates, dtype=float))
    t = np.atleast_1d(np.asarray(truth, dtype=float))
    if e.shape != t.shape:
        raise ValueError(f"length mismatch: {e.size} estimates vs {t.size} truth values")
    if e.size == 0:
        raise ValueError("need at least one sample")
    return float(np.sqrt(np.mean(np.square(e - t))))
