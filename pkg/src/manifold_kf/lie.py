"""Matrix Lie groups SO(2), R^n and their direct products.

Every tangent slot of a supported group owns one 2x2 block of the matrix
representation: an SO(2) slot is a rotation ``[[c, -s], [s, c]]`` and a real
slot is the unipotent embedding ``[[1, v], [0, 1]]``.  The algebra blocks are
``[[0, -theta], [theta, 0]]`` and ``[[0, v], [0, 0]]`` respectively, so a group
of tangent dimension ``p`` is represented by ``2p x 2p`` block-diagonal
matrices.

Elements are stored as a flat coordinate vector with SO(2) slots canonicalized
to ``[-pi, pi)``.  The matrix form is only materialized on request.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "wrap_to_pi",
    "LieGroup",
    "SO2",
    "RealN",
    "Product",
    "GroupElement",
    "compose",
    "inverse",
    "phi_series",
]

_TWO_PI = 2.0 * math.pi
VEE_TOLERANCE = 1e-9
DEFAULT_PHI_ORDER = 10


def wrap_to_pi(x):
    """Map angles to the half-open interval ``[-pi, pi)``.

    Accepts a scalar or an array. Scalars come back as ``float``.

    >>> wrap_to_pi(3 * math.pi / 2)
    -1.5707963267948966
    """
    if isinstance(x, (float, int)) and not isinstance(x, bool):
        return _wrap_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    if not np.isfinite(arr).all():
        raise ValueError("cannot wrap non-finite angles")
    if arr.ndim == 0:
        return _wrap_scalar(float(arr))
    out = arr.copy()
    # canonical entries pass through untouched
    bad = (out < -math.pi) | (out >= math.pi)
    if bad.any():
        w = np.mod(out[bad] + math.pi, _TWO_PI) - math.pi
        # rounding can land exactly on +pi; that belongs to -pi
        w[w >= math.pi] -= _TWO_PI
        out[bad] = w
    return out


def _wrap_scalar(x: float) -> float:
    if -math.pi <= x < math.pi:
        return x
    if not math.isfinite(x):
        raise ValueError(f"cannot wrap non-finite angle {x!r}")
    out = math.fmod(x + math.pi, _TWO_PI)
    if out < 0.0:
        out += _TWO_PI
    out -= math.pi
    if out >= math.pi:
        out -= _TWO_PI
    return out


def phi_series(ad_matrix, order=DEFAULT_PHI_ORDER):
    """Truncated series ``sum_{m=0}^{order} (-1)^m ad^m / (m+1)!``."""
    if order < 1:
        raise ValueError("truncation order must be >= 1")
    A = np.asarray(ad_matrix, dtype=float)
    p = A.shape[0]
    term = np.eye(p)
    total = term.copy()
    for m in range(1, order + 1):
        term = -term @ A / (m + 1)
        total = total + term
    return total


class LieGroup:
    """Common machinery for the abelian groups built from SO(2) and R."""

    #: All groups in this module commute; Ad is the identity and ad vanishes.
    is_abelian = True

    #: Atomic factors (SO2 or RealN) in slot order.
    factors: tuple

    @cached_property
    def angular_mask(self) -> np.ndarray:
        mask = []
        for f in self.factors:
            mask.extend([True] if isinstance(f, SO2) else [False] * f.n)
        out = np.array(mask, dtype=bool)
        out.setflags(write=False)
        return out

    @cached_property
    def _angular_idx(self) -> np.ndarray:
        return np.flatnonzero(self.angular_mask)

    @cached_property
    def _angular_slots(self) -> tuple:
        return tuple(int(i) for i in self._angular_idx)

    @cached_property
    def dim(self) -> int:
        """Tangent dimension ``p``."""
        return int(self.angular_mask.size)

    @property
    def tangent_dim(self) -> int:
        return self.dim

    @cached_property
    def eye(self) -> np.ndarray:
        """``p x p`` identity, shared and read-only."""
        out = np.eye(self.dim)
        out.setflags(write=False)
        return out

    @property
    def matrix_size(self) -> int:
        return 2 * self.dim

    # -- construction -----------------------------------------------------

    def element(self, coords) -> "GroupElement":
        return GroupElement(self, coords)

    def identity(self) -> "GroupElement":
        return GroupElement(self, np.zeros(self.dim))

    def random(self, rng: np.random.Generator, scale: float = 1.0) -> "GroupElement":
        """Draw angles uniformly on the circle and real slots from N(0, scale^2)."""
        coords = rng.normal(0.0, scale, self.dim)
        k = self._angular_idx.size
        if k:
            coords[self._angular_idx] = rng.uniform(-math.pi, math.pi, k)
        return GroupElement(self, coords)

    # -- exponential coordinates --------------------------------------------

    def _check_tangent(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != self.dim:
            raise ValueError(f"tangent vector of length {v.size} for a group of dimension {self.dim}")
        return v

    def exp(self, v) -> "GroupElement":
        """Exponential map from R^p (through the algebra) to the group."""
        v = self._check_tangent(v)
        if not np.isfinite(v).all():
            raise ValueError("tangent vector must be finite")
        return GroupElement(self, v)

    def log(self, x: "GroupElement") -> np.ndarray:
        """Logarithm on the principal branch, returned as a vector in R^p."""
        self._check_member(x)
        return np.array(x.coords)

    def log_between(self, a: "GroupElement", b: "GroupElement") -> np.ndarray:
        """``log(a^-1 b)`` as a vector, without materializing the intermediate elements."""
        self._check_member(a)
        self._check_member(b)
        d = b.coords - a.coords
        for i in self._angular_slots:
            d[i] = _wrap_scalar(d[i])
        return d

    def hat(self, v) -> np.ndarray:
        v = self._check_tangent(v)
        m = np.zeros((self.matrix_size, self.matrix_size))
        for i, (value, angular) in enumerate(zip(v, self.angular_mask)):
            r = 2 * i
            m[r, r + 1] = -value if angular else value
            if angular:
                m[r + 1, r] = value
        return m

    def vee(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        n = self.matrix_size
        if m.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} algebra matrix, got shape {m.shape}")
        v = np.empty(self.dim)
        for i, angular in enumerate(self.angular_mask):
            r = 2 * i
            v[i] = m[r + 1, r] if angular else m[r, r + 1]
        residual = np.max(np.abs(m - self.hat(v)))
        if residual > VEE_TOLERANCE:
            raise ValueError(f"matrix is not in the Lie algebra (residual {residual:.3g})")
        return v

    # -- matrix view ------------------------------------------------------

    def matrix(self, x: "GroupElement") -> np.ndarray:
        self._check_member(x)
        m = np.zeros((self.matrix_size, self.matrix_size))
        for i, (value, angular) in enumerate(zip(x.coords, self.angular_mask)):
            r = 2 * i
            if angular:
                c, s = math.cos(value), math.sin(value)
                m[r:r + 2, r:r + 2] = [[c, -s], [s, c]]
            else:
                m[r:r + 2, r:r + 2] = [[1.0, value], [0.0, 1.0]]
        return m

    def from_matrix(self, m) -> "GroupElement":
        m = np.asarray(m, dtype=float)
        coords = np.empty(self.dim)
        for i, angular in enumerate(self.angular_mask):
            r = 2 * i
            coords[i] = math.atan2(m[r + 1, r], m[r, r]) if angular else m[r, r + 1]
        return GroupElement(self, coords)

    # -- adjoints ---------------------------------------------------------

    def Ad(self, x: "GroupElement", generic: bool = False) -> np.ndarray:
        """Adjoint of the group on R^p.

        With ``generic=True`` the matrix is built column by column from the
        conjugation ``X hat(e_i) X^-1``; otherwise the abelian identity is
        returned directly.
        """
        self._check_member(x)
        if self.is_abelian and not generic:
            return np.eye(self.dim)
        X = self.matrix(x)
        X_inv = self.matrix(x.inverse())
        eye = np.eye(self.dim)
        return np.column_stack([self.vee(X @ self.hat(e) @ X_inv) for e in eye])

    def ad(self, v, generic: bool = False) -> np.ndarray:
        """Adjoint of the algebra on R^p (matrix commutator)."""
        v = self._check_tangent(v)
        if self.is_abelian and not generic:
            return np.zeros((self.dim, self.dim))
        A = self.hat(v)
        eye = np.eye(self.dim)
        cols = []
        for e in eye:
            B = self.hat(e)
            cols.append(self.vee(A @ B - B @ A))
        return np.column_stack(cols)

    def phi(self, v, order: int = DEFAULT_PHI_ORDER, generic: bool = False) -> np.ndarray:
        if order < 1:
            raise ValueError("truncation order must be >= 1")
        if self.is_abelian and not generic:
            self._check_tangent(v)
            return np.eye(self.dim)
        return phi_series(self.ad(v, generic=True), order)

    def _check_member(self, x: "GroupElement") -> None:
        if x.group is not self and x.group != self:
            raise ValueError(f"element of {x.group} used with {self}")


@dataclass(frozen=True)
class SO2(LieGroup):
    """Planar rotations, parameterized by angle."""

    @property
    def factors(self) -> tuple:
        return (self,)

    def __repr__(self):
        return "SO2()"


@dataclass(frozen=True)
class RealN(LieGroup):
    """The additive group R^n in its unipotent matrix embedding."""

    n: int

    @property
    def factors(self) -> tuple:
        return (self,)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"RealN needs a positive integer dimension, got {self.n!r}")


@dataclass(frozen=True, init=False)
class Product(LieGroup):
    """Direct product. Nested products are flattened on construction."""

    factors: tuple

    def __init__(self, *groups: LieGroup):
        flat = []
        for g in groups:
            if not isinstance(g, LieGroup):
                raise TypeError(f"{g!r} is not a LieGroup")
            flat.extend(g.factors)
        if not flat:
            raise ValueError("a product group needs at least one factor")
        object.__setattr__(self, "factors", tuple(flat))

    def __repr__(self):
        return "Product(" + ", ".join(map(repr, self.factors)) + ")"


class GroupElement:
    """Immutable point on a :class:`LieGroup`.

    ``coords`` holds the exponential coordinates with every SO(2) slot in
    ``[-pi, pi)``.
    """

    __slots__ = ("group", "coords")

    def __init__(self, group: LieGroup, coords: Sequence[float] | np.ndarray):
        c = np.array(coords, dtype=float)
        if c.ndim != 1:
            c = c.reshape(-1)
        if c.size != group.dim:
            raise ValueError(f"{c.size} coordinates for a group of dimension {group.dim}")
        for i in group._angular_slots:
            c[i] = _wrap_scalar(c[i])
        c.setflags(write=False)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "coords", c)

    @classmethod
    def _owned(cls, group: LieGroup, c: np.ndarray) -> "GroupElement":
        # internal constructor taking ownership of a fresh float vector of the right size
        for i in group._angular_slots:
            c[i] = _wrap_scalar(c[i])
        c.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "group", group)
        object.__setattr__(obj, "coords", c)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    def __repr__(self):
        return f"GroupElement({self.group!r}, {self.coords.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.group == other.group and np.array_equal(self.coords, other.coords)

    __hash__ = None

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def inverse(self) -> "GroupElement":
        return inverse(self)

    def matrix(self) -> np.ndarray:
        return self.group.matrix(self)

    @property
    def angle(self) -> float:
        """Angle of the first SO(2) slot."""
        idx = self.group._angular_idx
        if not idx.size:
            raise AttributeError(f"{self.group!r} has no rotation slot")
        return float(self.coords[idx[0]])


def compose(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product ``a b``; slotwise sum with angles re-wrapped."""
    if a.group is not b.group and a.group != b.group:
        raise ValueError(f"cannot compose elements of {a.group} and {b.group}")
    return GroupElement(a.group, a.coords + b.coords)


def inverse(a: GroupElement) -> GroupElement:
    return GroupElement(a.group, -a.coords)
