"""
Metric-dimension tooling: closed-ball families, multiplicity, factorial
grids with their separation bound, the greedy weak cover and the Nagata
check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .measures import RationalMeasure
from .transport import wp_discrete

MAX_GRID_POINTS = 10**7
NAGATA_EXHAUSTIVE = 12


class GridTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class BallFamily:
    """Closed balls ``B(center_i, radius_i)`` over an opaque point set.

    ``dist(x, y)`` gives the distance between two points (ids, tuples,
    measures... anything the callback understands).
    """

    centers: tuple
    radii: tuple
    scale: float
    dist: Callable

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(self.centers))
        object.__setattr__(self, "radii", tuple(self.radii))
        if len(self.centers) != len(self.radii):
            raise ValueError("one radius per center")
        if any(not r > 0 for r in self.radii):
            raise ValueError("radii must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __len__(self):
        return len(self.centers)

    def subfamily(self, idx):
        return BallFamily([self.centers[i] for i in idx], [self.radii[i] for i in idx], self.scale, self.dist)


def euclidean_family(centers, radii, scale) -> BallFamily:
    """Ball family in R^d; points are coordinate tuples."""
    pts = [tuple(map(float, np.atleast_1d(c))) for c in centers]
    return BallFamily(pts, [float(r) for r in radii], scale, math.dist)


def is_disconnected(f: BallFamily) -> bool:
    if any(not (0 < r < f.scale) for r in f.radii):
        return False
    for i, ci in enumerate(f.centers):
        for j, cj in enumerate(f.centers):
            if i != j and not f.dist(ci, cj) > f.radii[j]:
                return False
    return True


def multiplicity(f: BallFamily, probes: Sequence) -> int:
    """Largest number of balls containing a single probe point."""
    if len(probes) == 0:
        raise ValueError("need at least one probe")
    return max(sum(1 for c, r in zip(f.centers, f.radii) if f.dist(x, c) <= r) for x in probes)


def intersection_probes(centers, radii):
    """Pairwise boundary-circle intersection points of planar balls; these
    are where planar ball arrangements reach their depth."""
    out = []
    C = np.asarray(centers, dtype=float)
    R = np.asarray(radii, dtype=float)
    for i in range(len(C)):
        for j in range(i + 1, len(C)):
            dvec = C[j] - C[i]
            dd = float(np.hypot(*dvec))
            if dd == 0 or dd > R[i] + R[j] or dd < abs(R[i] - R[j]):
                continue
            a = (R[i] ** 2 - R[j] ** 2 + dd**2) / (2 * dd)
            h = math.sqrt(max(R[i] ** 2 - a**2, 0.0))
            base = C[i] + a * dvec / dd
            perp = np.array([-dvec[1], dvec[0]]) / dd
            out.append(tuple(base + h * perp))
            out.append(tuple(base - h * perp))
    return out


def random_disconnected_family(rng, n_candidates, d=2, scale=1.0, radius_levels=None) -> BallFamily:
    """Greedy disconnected family in the unit cube.

    Radii are drawn from ``radius_levels`` when given (all must be below
    ``scale``), otherwise uniformly from ``(0, scale)``.
    """
    pts = rng.random((n_candidates, d))
    if radius_levels is None:
        rad = rng.uniform(0.05 * scale, scale, n_candidates)
        rad = np.minimum(rad, np.nextafter(scale, 0))
    else:
        rad = rng.choice(np.asarray(radius_levels, dtype=float), n_candidates)
    keep = []
    for i in range(n_candidates):
        ok = True
        for j in keep:
            dij = math.dist(pts[i], pts[j])
            if not (dij > rad[j] and dij > rad[i]):
                ok = False
                break
        if ok:
            keep.append(i)
    return euclidean_family(pts[keep], rad[keep], scale)


def max_common_point_family(d, trials, rng, candidates=48, chunk=20000):
    """Sizes of greedily grown disconnected families through a common point.

    Candidate centers have uniformly random directions and log-uniform
    norms; each radius is the distance to the common point (the origin).
    Returns an array of family sizes, one per trial.
    """
    sizes = []
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        g = rng.standard_normal((t, candidates, d))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        g *= np.exp(rng.uniform(0.0, np.log(4.0), (t, candidates, 1)))
        sizes.append(_kernels.greedy_disconnected_sizes(np.ascontiguousarray(g)))
        done += t
    return np.concatenate(sizes)


# ------------------------------------------------------- factorial grid ---


@dataclass(frozen=True, eq=False)
class FactorialGrid:
    """Points ``(a_1/n!, ..., a_d/n!)`` inside a box, stored as integer
    numerators over ``n!``."""

    level: int
    dim: int
    box: tuple
    numerators: np.ndarray

    @property
    def denominator(self) -> int:
        return math.factorial(self.level)

    @property
    def spacing(self) -> Fraction:
        return Fraction(1, self.denominator)

    def points(self) -> np.ndarray:
        return self.numerators / float(self.denominator)

    def as_fraction_set(self):
        n = self.denominator
        return {tuple(Fraction(int(a), n) for a in row) for row in self.numerators}

    def issubset(self, other: "FactorialGrid") -> bool:
        """Exact set inclusion of the grid points."""
        if other.denominator % self.denominator:
            return self.as_fraction_set() <= other.as_fraction_set()
        factor = other.denominator // self.denominator
        theirs = {tuple(row) for row in other.numerators.tolist()}
        return all(tuple(a * factor for a in row) in theirs for row in self.numerators.tolist())

    def __len__(self):
        return self.numerators.shape[0]


def factorial_grid(n: int, d: int, box=(0, 1)) -> FactorialGrid:
    """Level-``n`` factorial grid clipped to ``box``.

    ``box`` is either one ``(lo, hi)`` pair used in every coordinate or a
    sequence of ``d`` pairs. Bounds are taken as exact rationals.
    """
    if n < 1 or d < 1:
        raise ValueError("level and dimension must be positive")
    if len(box) == 2 and np.ndim(box[0]) == 0:
        box = (tuple(box),) * d
    if len(box) != d:
        raise ValueError("box needs one (lo, hi) pair per coordinate")
    scale = math.factorial(n)
    axes = []
    for lo, hi in box:
        lo, hi = Fraction(lo), Fraction(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
            raise ValueError("box must be finite and non-empty")
        axes.append(np.arange(math.ceil(lo * scale), math.floor(hi * scale) + 1, dtype=np.int64))
    count = math.prod(len(a) for a in axes)
    if count > MAX_GRID_POINTS:
        raise GridTooLarge(f"grid would hold {count} points")
    mesh = np.meshgrid(*axes, indexing="ij")
    nums = np.stack([m.ravel() for m in mesh], axis=1)
    return FactorialGrid(n, d, tuple((Fraction(lo), Fraction(hi)) for lo, hi in box), nums)


def random_rational_measure(rng, grid: FactorialGrid, max_atoms=4) -> RationalMeasure:
    """Random element of the level-n rational family on ``grid``."""
    n_atoms = int(rng.integers(1, max_atoms + 1))
    idx = rng.choice(len(grid), size=min(n_atoms, len(grid)), replace=False)
    total = grid.denominator
    cuts = np.sort(rng.integers(0, total + 1, size=len(idx) - 1))
    mass = np.diff(np.concatenate([[0], cuts, [total]]))
    atoms = tuple((tuple(grid.numerators[i].tolist()), int(a)) for i, a in zip(idx, mass))
    return RationalMeasure(grid.level, atoms)


def rational_separation(mu: RationalMeasure, nu: RationalMeasure, p=1.0):
    """Exact W_p and the separation bound ``Delta_n / n! = 1 / (n!)**2``.

    For ``mu != nu`` the distance is never below the bound.
    """
    if mu.level != nu.level:
        raise ValueError(f"level mismatch: {mu.level} vs {nu.level}")
    if mu == nu:
        return 0.0, 1.0 / mu.denominator**2
    dist = wp_discrete(mu.to_discrete(), nu.to_discrete(), p).distance
    return dist, 1.0 / mu.denominator**2


# ------------------------------------------------------------ covering ---


def weak_cover(f: BallFamily) -> list:
    """Greedy subfamily covering every center, built level by level.

    Radii are grouped into their decreasing sequence of distinct values.
    At each level the kept set is a maximal subset of the still-uncovered
    centers with that radius whose pairwise distances exceed the radius;
    candidates are scanned by ascending index. Returns kept indices.
    """
    if any(not r < f.scale for r in f.radii):
        raise ValueError("all radii must be below the scale")
    chosen: list = []
    for level in sorted(set(f.radii), reverse=True):
        picked: list = []
        for i, (c, r) in enumerate(zip(f.centers, f.radii)):
            if r != level:
                continue
            if any(f.dist(c, f.centers[j]) <= f.radii[j] for j in chosen):
                continue
            if all(f.dist(c, f.centers[j]) > level for j in picked):
                picked.append(i)
        chosen.extend(picked)
    return sorted(chosen)


def covers_all_centers(f: BallFamily, idx) -> bool:
    return all(any(f.dist(c, f.centers[j]) <= f.radii[j] for j in idx) for c in f.centers)


def nagata_check(points, metric, a, m, rng=None, samples=20000) -> bool:
    """True when every ``m + 1`` of ``points`` contain a pair ``y_i, y_j``
    with ``d(y_i, y_j) <= max(d(a, y_i), d(a, y_j))``.

    Subsets are enumerated for up to 12 points and sampled beyond that,
    so a ``True`` for large inputs is only as strong as the sample.
    """
    pts = list(points)
    size = m + 1
    if size > len(pts):
        return True
    da = [metric(a, y) for y in pts]
    n = len(pts)
    good = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            good[i, j] = good[j, i] = metric(pts[i], pts[j]) <= max(da[i], da[j])

    def has_good_pair(sub):
        return any(good[i, j] for i, j in itertools.combinations(sub, 2))

    if n <= NAGATA_EXHAUSTIVE:
        return all(has_good_pair(sub) for sub in itertools.combinations(range(n), size))
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(samples):
        sub = rng.choice(n, size=size, replace=False)
        if not has_good_pair(sub):
            return False
    return True
