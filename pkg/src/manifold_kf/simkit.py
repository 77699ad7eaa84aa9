"""Synthetic azimuth scenarios and CSV logs.

A scenario samples a ground-truth azimuth profile at a fixed period and
emits noisy azimuth readings, a fraction of which are replaced by clutter
drawn uniformly on the circle (spurious beamformer peaks) or dropped.
All randomness comes from ``ScenarioConfig.seed``.

CSV files are UTF-8, comma separated, LF terminated, with a header row.
Three schemas are recognised by their header:

* measurements: ``t,z,valid``
* truth: ``t,theta,omega,alpha``
* results: ``t,z,gated,theta,omega,alpha,p00,p11,p22,truth_theta,truth_omega,truth_alpha``

Empty cells stand for absent values.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .lie import wrap_to_pi
from .tracking import Measurement, TrackRecord, TruthSample

__all__ = [
    "Constant",
    "Ramp",
    "Sinusoid",
    "Waypoints",
    "ScenarioConfig",
    "CsvFormatError",
    "gen_truth",
    "gen_measurements",
    "read_csv",
    "write_csv",
    "MEASUREMENT_HEADER",
    "TRUTH_HEADER",
    "RESULT_HEADER",
]

MEASUREMENT_HEADER = ("t", "z", "valid")
TRUTH_HEADER = ("t", "theta", "omega", "alpha")
RESULT_HEADER = (
    "t", "z", "gated", "theta", "omega", "alpha", "p00", "p11", "p22",
    "truth_theta", "truth_omega", "truth_alpha",
)


# -- truth profiles ---------------------------------------------------------
# Each profile returns the unwrapped angle and its first two derivatives.


@dataclass(frozen=True)
class Constant:
    theta: float = 0.0

    def evaluate(self, t: np.ndarray):
        z = np.zeros_like(t)
        return z + self.theta, z, z.copy()


@dataclass(frozen=True)
class Ramp:
    omega: float
    theta0: float = 0.0

    def evaluate(self, t: np.ndarray):
        z = np.zeros_like(t)
        return self.theta0 + self.omega * t, z + self.omega, z


@dataclass(frozen=True)
class Sinusoid:
    """``offset + amplitude * sin(2 pi frequency t + phase)``."""

    amplitude: float
    frequency: float
    offset: float = 0.0
    phase: float = 0.0

    def evaluate(self, t: np.ndarray):
        w = 2.0 * math.pi * self.frequency
        arg = w * t + self.phase
        return (
            self.offset + self.amplitude * np.sin(arg),
            self.amplitude * w * np.cos(arg),
            -self.amplitude * w * w * np.sin(arg),
        )


@dataclass(frozen=True)
class Waypoints:
    """Piecewise-linear azimuth through ``(times[i], angles[i])``, held constant outside.

    Angles are unwrapped, so a segment from 3.0 to 3.4 rad crosses the seam
    the short way.
    """

    times: tuple
    angles: tuple

    def __post_init__(self):
        ts = tuple(float(v) for v in self.times)
        if len(ts) < 1 or len(ts) != len(self.angles):
            raise ValueError("waypoints need matching, non-empty times and angles")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "angles", tuple(float(v) for v in self.angles))

    def evaluate(self, t: np.ndarray):
        ts, th = np.array(self.times), np.array(self.angles)
        theta = np.interp(t, ts, th)
        if ts.size == 1:
            return theta, np.zeros_like(t), np.zeros_like(t)
        slopes = np.diff(th) / np.diff(ts)
        seg = np.searchsorted(ts, t, side="right") - 1
        inside = (seg >= 0) & (seg < slopes.size)
        omega = np.where(inside, slopes[np.clip(seg, 0, slopes.size - 1)], 0.0)
        return theta, omega, np.zeros_like(t)


Profile = Union[Constant, Ramp, Sinusoid, Waypoints]


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 60.0
    period: float = 0.1
    profile: Profile = field(default_factory=lambda: Sinusoid(amplitude=1.0, frequency=0.05))
    sigma_r: float = 0.1
    outlier_prob: float = 0.0
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError(f"period must be positive, got {self.period!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"duration must be positive, got {self.duration!r}")
        if not (math.isfinite(self.sigma_r) and self.sigma_r >= 0):
            raise ValueError(f"sigma_r must be non-negative, got {self.sigma_r!r}")
        for name in ("outlier_prob", "dropout_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.duration / self.period)))


def gen_truth(cfg: ScenarioConfig) -> list[TruthSample]:
    t = np.arange(cfg.n_steps) * cfg.period
    theta, omega, alpha = cfg.profile.evaluate(t)
    theta = wrap_to_pi(np.asarray(theta, dtype=float))
    return [
        TruthSample(float(a), float(b), float(c), float(d))
        for a, b, c, d in zip(t, theta, omega, alpha)
    ]


def gen_measurements(truth: Sequence[TruthSample], cfg: ScenarioConfig) -> list[Measurement]:
    n = len(truth)
    rng = np.random.default_rng(int(cfg.seed))
    # draw every stream in full so each one is independent of the others' probabilities
    noise = rng.normal(0.0, 1.0, n) * cfg.sigma_r
    is_outlier = rng.random(n) < cfg.outlier_prob
    clutter = rng.uniform(-math.pi, math.pi, n)
    dropped = rng.random(n) < cfg.dropout_prob
    out = []
    for k, s in enumerate(truth):
        if dropped[k]:
            z = None
        elif is_outlier[k]:
            z = float(clutter[k])
        else:
            z = wrap_to_pi(s.theta + float(noise[k]))
        out.append(Measurement(s.t, z))
    return out


# -- CSV --------------------------------------------------------------------


class CsvFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _cells(values, width):
    values = list(values or ())
    return [_fmt(v) for v in values] + [""] * (width - len(values))


def write_csv(path: Union[str, os.PathLike], records: Sequence) -> None:
    """Write measurements, truth samples or track records; the schema follows the record type."""
    records = list(records)
    kinds = {type(r) for r in records}
    if len(kinds) > 1:
        raise TypeError("cannot mix record types in one file")
    kind = kinds.pop() if kinds else Measurement
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if kind is Measurement:
            w.writerow(MEASUREMENT_HEADER)
            for m in records:
                w.writerow([_fmt(m.t), _fmt(m.z), "1" if m.valid else "0"])
        elif kind is TruthSample:
            w.writerow(TRUTH_HEADER)
            for s in records:
                w.writerow([_fmt(s.t), _fmt(s.theta), _fmt(s.omega), _fmt(s.alpha)])
        elif kind is TrackRecord:
            w.writerow(RESULT_HEADER)
            for r in records:
                if len(r.mean) > 3:
                    raise ValueError("results schema holds at most three state slots")
                w.writerow(
                    [_fmt(r.t), _fmt(r.z), "1" if r.gated else "0"]
                    + _cells(r.mean, 3) + _cells(r.cov_diag, 3) + _cells(r.truth, 3)
                )
        else:
            raise TypeError(f"don't know how to write {kind.__name__} records")


def _float(cell: str, path, line: int, name: str, optional: bool = False):
    cell = cell.strip()
    if cell == "":
        if optional:
            return None
        raise CsvFormatError(path, line, f"missing value for {name!r}")
    try:
        v = float(cell)
    except ValueError:
        raise CsvFormatError(path, line, f"cannot parse {name!r} value {cell!r}") from None
    if not math.isfinite(v):
        raise CsvFormatError(path, line, f"non-finite {name!r} value {cell!r}")
    return v


def _flag(cell: str, path, line: int, name: str) -> bool:
    cell = cell.strip()
    if cell not in ("0", "1"):
        raise CsvFormatError(path, line, f"{name!r} must be 0 or 1, got {cell!r}")
    return cell == "1"


def _slots(cells, path, line, names):
    vals = [_float(c, path, line, n, optional=True) for c, n in zip(cells, names)]
    k = 0
    while k < len(vals) and vals[k] is not None:
        k += 1
    if any(v is not None for v in vals[k:]):
        raise CsvFormatError(path, line, f"gap in {', '.join(names)}")
    return tuple(vals[:k])


def read_csv(path: Union[str, os.PathLike]) -> list:
    """Read a measurement, truth or results file, chosen by its header.

    Returns a list of :class:`Measurement`, :class:`TruthSample` or
    :class:`TrackRecord`. Malformed rows raise :class:`CsvFormatError`
    naming the line.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError(path, 1, "file is empty (no header)")
    header = tuple(c.strip() for c in rows[0])
    if header not in (MEASUREMENT_HEADER, TRUTH_HEADER, RESULT_HEADER):
        raise CsvFormatError(path, 1, f"unrecognised header {','.join(header)!r}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvFormatError(path, i, f"expected {len(header)} fields, got {len(row)}")
        if header == MEASUREMENT_HEADER:
            t = _float(row[0], path, i, "t")
            valid = _flag(row[2], path, i, "valid")
            z = _float(row[1], path, i, "z") if valid else None
            out.append(Measurement(t, z))
        elif header == TRUTH_HEADER:
            out.append(TruthSample(*(_float(c, path, i, n) for c, n in zip(row, header))))
        else:
            truth = _slots(row[9:12], path, i, RESULT_HEADER[9:12])
            out.append(
                TrackRecord(
                    t=_float(row[0], path, i, "t"),
                    z=_float(row[1], path, i, "z", optional=True),
                    gated=_flag(row[2], path, i, "gated"),
                    mean=_slots(row[3:6], path, i, RESULT_HEADER[3:6]),
                    cov_diag=_slots(row[6:9], path, i, RESULT_HEADER[6:9]),
                    truth=truth or None,
                )
            )
    return out
