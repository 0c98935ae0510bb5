"""
Constant-speed geodesics in Wasserstein space and the curvature gaps used to
check the comparison inequality (WPC) and the positively-curved quadruple
inequality (PC).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure
from .transport import GaussianMeasure, psd_sqrt, w2_gaussian, wp_discrete

SINGULAR_EPS = 1e-10


def _check_t(t):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")


@dataclass(frozen=True)
class GeodesicSample:
    start: int
    end: int
    t: float
    measure: object

    def __post_init__(self):
        _check_t(self.t)


def mixture_geodesic(m1: DiscreteMeasure, m2: DiscreteMeasure, t: float) -> DiscreteMeasure:
    """``(1-t) m1 + t m2``; a constant-speed geodesic for W_1."""
    _check_t(t)
    if m1.dim != m2.dim:
        raise ValueError("measures live in different dimensions")
    pts = np.concatenate([m1.points, m2.points])
    w = np.concatenate([(1.0 - t) * m1.weights, t * m2.weights])
    return DiscreteMeasure.from_atoms(pts, w)


def displacement_geodesic(m1: DiscreteMeasure, m2: DiscreteMeasure, t: float, p=2.0) -> DiscreteMeasure:
    """Push an optimal W_p plan forward under ``(x, y) -> (1-t) x + t y``."""
    _check_t(t)
    plan = wp_discrete(m1, m2, p).plan.matrix
    i, j = np.nonzero(plan > 0)
    pts = (1.0 - t) * m1.points[i] + t * m2.points[j]
    return DiscreteMeasure.from_atoms(pts, plan[i, j])


def bures_map(S1, S2):
    """Optimal linear map ``T`` pushing N(0, S1) onto N(0, S2)."""
    S1 = np.asarray(S1, dtype=float)
    w = np.linalg.eigvalsh(S1)
    if w.min() <= SINGULAR_EPS:
        S1 = S1 + SINGULAR_EPS * np.eye(S1.shape[0])
    r1 = psd_sqrt(S1)
    w1, V1 = np.linalg.eigh(r1)
    r1_inv = (V1 / w1) @ V1.T
    mid = psd_sqrt(r1 @ S2 @ r1)
    T = r1_inv @ mid @ r1_inv
    return 0.5 * (T + T.T), S1


def gaussian_geodesic(g1: GaussianMeasure, g2: GaussianMeasure, t: float) -> GaussianMeasure:
    """McCann interpolation between Gaussians (the Bures geodesic)."""
    _check_t(t)
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    T, S1 = bures_map(g1.cov, g2.cov)
    A = (1.0 - t) * np.eye(g1.dim) + t * T
    cov = A @ S1 @ A
    mean = (1.0 - t) * g1.mean + t * g2.mean
    try:
        return GaussianMeasure(mean, 0.5 * (cov + cov.T))
    except ValueError as exc:
        raise ArithmeticError(f"interpolated covariance left the PSD cone: {exc}") from exc


def w2(a, b) -> float:
    """W_2 for a pair of Gaussian or discrete measures."""
    if isinstance(a, GaussianMeasure) and isinstance(b, GaussianMeasure):
        return w2_gaussian(a, b)
    if isinstance(a, DiscreteMeasure) and isinstance(b, DiscreteMeasure):
        return wp_discrete(a, b, 2.0).distance
    raise TypeError("w2 needs two Gaussian or two discrete measures")


def w1(a, b) -> float:
    return wp_discrete(a, b, 1.0).distance


def geodesic_samples(m1, m2, ts, geodesic, start=1, end=2):
    return [GeodesicSample(start, end, float(t), geodesic(m1, m2, t)) for t in ts]


def comparison_gap(dist, x1, x2, x3, geodesic, t: float) -> float:
    """``d(x^t_{12}, x^t_{13}) - t d(x2, x3)``; non-negative when the
    comparison inequality holds."""
    _check_t(t)
    return dist(geodesic(x1, x2, t), geodesic(x1, x3, t)) - t * dist(x2, x3)


def pc_gap(m1, m2, m3, geodesic, t: float, dist=w2) -> float:
    """Slack in the quadruple inequality for squared W_2 along ``geodesic``
    from ``m1`` to ``m2``, seen from ``m3``."""
    _check_t(t)
    lhs = dist(geodesic(m1, m2, t), m3) ** 2
    rhs = (1.0 - t) * dist(m1, m3) ** 2 + t * dist(m2, m3) ** 2 - t * (1.0 - t) * dist(m1, m2) ** 2
    return lhs - rhs
