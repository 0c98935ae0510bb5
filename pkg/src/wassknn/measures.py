"""
Finitely supported measures, staircase quantile functions and rational
measures on factorial grids.

All types are immutable after construction: the backing numpy arrays are
flagged read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WEIGHT_TOL = 1e-9
DEFAULT_LEVELS = 53


class ValidationError(ValueError):
    """Raised when raw measure data violates a type invariant."""


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def validate(points, weights):
    """Return a checked ``(points, weights)`` pair.

    Duplicate points (exact bitwise equality) are merged by adding their
    weights, zero-weight atoms are dropped and the weights are renormalised
    when the total is within ``1e-9`` of one.

    Raises
    ------
    ValidationError
        On negative weights, mismatched lengths or a total mass away from 1.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float).ravel()
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[0] != w.shape[0]:
        raise ValidationError(f"{pts.shape[0]} points but {w.shape[0]} weights")
    if w.size == 0:
        raise ValidationError("empty support")
    if not np.all(np.isfinite(w)) or not np.all(np.isfinite(pts)):
        raise ValidationError("non-finite entries")
    if np.any(w < 0):
        raise ValidationError("negative weight")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValidationError(f"weights sum to {total!r}, expected 1")

    # -0.0 and 0.0 compare equal; normalise so np.unique merges them
    pts = pts + 0.0
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inverse.ravel(), w)
    keep = merged > 0
    uniq, merged = uniq[keep], merged[keep]
    merged = merged / merged.sum()
    return uniq, merged


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure ``sum_i w_i delta_{x_i}``.

    Build instances with :meth:`from_atoms` (or :func:`dirac`); the bare
    constructor trusts its input and is meant for internal use.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=float)))

    @classmethod
    def from_atoms(cls, points, weights) -> "DiscreteMeasure":
        pts, w = validate(points, weights)
        return cls(pts, w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def quantile_steps(self):
        """Right endpoints and values of the quantile step function (1D only)."""
        if self.dim != 1:
            raise ValueError("quantile function needs a one-dimensional measure")
        order = np.argsort(self.points[:, 0], kind="stable")
        values = self.points[order, 0]
        ends = np.cumsum(self.weights[order])
        ends[-1] = 1.0
        return ends, values

    def __repr__(self):
        return f"DiscreteMeasure(size={self.size}, dim={self.dim})"


def dirac(x) -> DiscreteMeasure:
    return DiscreteMeasure.from_atoms(np.atleast_1d(np.asarray(x, dtype=float))[None, :], [1.0])


def _dyadic_ends(levels: int) -> np.ndarray:
    # right endpoints of I_1, ..., I_{L-1}; the last interval runs to 1
    i = np.arange(1, levels, dtype=float)
    return np.concatenate([1.0 - 2.0**-i, [1.0]])


@dataclass(frozen=True, eq=False)
class StaircaseQuantile:
    """Quantile function constant on the dyadic intervals
    ``I_i = [1 - 2**(1-i), 1 - 2**-i)``.

    ``values[i-1]`` is the value on ``I_i``; the last value also covers the
    tail ``[1 - 2**(1-L), 1)`` where ``L = len(values)``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValidationError("staircase needs at least one level")
        if v.size > 1000:
            raise ValidationError("truncation level too large")
        if np.any(np.diff(v) < 0):
            raise ValidationError("staircase values must be non-decreasing")
        if np.any(v <= 0) or np.any(v >= 1):
            raise ValidationError("staircase values must lie in (0, 1)")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def levels(self) -> int:
        return self.values.shape[0]

    def quantile_steps(self):
        return _dyadic_ends(self.levels), self.values

    def to_discrete(self) -> DiscreteMeasure:
        """The measure whose quantile function is this staircase."""
        L = self.levels
        w = 2.0 ** -np.arange(1, L + 1, dtype=float)
        w[-1] = 2.0 ** -(L - 1)
        return DiscreteMeasure.from_atoms(self.values[:, None], w)


def gqf_eval(m: StaircaseQuantile, q):
    """Value of the staircase at ``q`` in ``[0, 1)``; vectorised over ``q``."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0) or np.any(q_arr >= 1) or np.any(np.isnan(q_arr)):
        raise ValueError("quantile level outside [0, 1)")
    ends = _dyadic_ends(m.levels)[:-1]
    idx = np.searchsorted(ends, q_arr, side="right")
    out = m.values[idx]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class RationalMeasure:
    """Measure ``sum_i (a_i / n!) delta_{x_i}`` with grid points ``x_i``
    whose coordinates are integer numerators over ``n!``.

    ``atoms`` maps a tuple of coordinate numerators to the mass numerator.
    """

    level: int
    atoms: tuple = field(default=())

    def __post_init__(self):
        if self.level < 1:
            raise ValidationError("level must be a positive integer")
        scale = math.factorial(self.level)
        merged: dict = {}
        dims = set()
        for pt, a in self.atoms:
            pt = tuple(int(c) for c in pt)
            a = int(a)
            if a < 0 or a > scale:
                raise ValidationError(f"numerator {a} outside [0, {scale}]")
            dims.add(len(pt))
            merged[pt] = merged.get(pt, 0) + a
        if len(dims) > 1:
            raise ValidationError("grid points of mixed dimension")
        if sum(merged.values()) != scale:
            raise ValidationError(f"numerators sum to {sum(merged.values())}, expected {scale}")
        atoms = tuple(sorted((pt, a) for pt, a in merged.items() if a > 0))
        object.__setattr__(self, "atoms", atoms)

    @property
    def denominator(self) -> int:
        return math.factorial(self.level)

    def to_discrete(self) -> DiscreteMeasure:
        s = float(self.denominator)
        pts = np.array([pt for pt, _ in self.atoms], dtype=float) / s
        w = np.array([a for _, a in self.atoms], dtype=float) / s
        return DiscreteMeasure.from_atoms(pts, w)

    def __eq__(self, other):
        return isinstance(other, RationalMeasure) and (self.level, self.atoms) == (other.level, other.atoms)

    def __hash__(self):
        return hash((self.level, self.atoms))
