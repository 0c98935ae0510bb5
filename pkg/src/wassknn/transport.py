"""
Wasserstein distances: the 1D quantile formula, exact discrete transport,
the Gaussian closed form and the coordinate embedding of measures on a
fixed finite set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import _kernels
from .measures import DiscreteMeasure, StaircaseQuantile

MARGINAL_TOL = 1e-10
SYM_TOL = 1e-12
EIG_CLAMP = -1e-10


class TransportError(RuntimeError):
    """The exact solver failed to certify an optimal vertex."""


def _check_p(p):
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p!r}")


def euclidean(X, Y):
    """Default ground metric: pairwise Euclidean distances."""
    return cdist(X, Y)


def metric_from_matrix(D):
    """Ground metric on the finite space ``{0, ..., len(D)-1}``.

    Points are encoded as one-dimensional coordinates holding the integer
    index; the callback looks distances up in ``D``.
    """
    D = np.asarray(D, dtype=float)

    def ground(X, Y):
        i = np.asarray(X, dtype=float)[:, 0].astype(np.int64)
        j = np.asarray(Y, dtype=float)[:, 0].astype(np.int64)
        return D[np.ix_(i, j)]

    return ground


# ---------------------------------------------------------------- 1D -----


def _steps(m):
    if isinstance(m, (DiscreteMeasure, StaircaseQuantile)):
        ends, vals = m.quantile_steps()
        return np.ascontiguousarray(ends, dtype=float), np.ascontiguousarray(vals, dtype=float)
    raise TypeError(f"unsupported one-dimensional measure: {type(m).__name__}")


def wp_one_dim(mu, nu, p=1.0):
    """W_p between two measures on the line via their quantile functions.

    Both quantile functions are step functions, so the integral of
    ``|f_mu - f_nu|**p`` over [0, 1) is an exact finite sum.
    """
    _check_p(p)
    e1, v1 = _steps(mu)
    e2, v2 = _steps(nu)
    return float(_kernels.quantile_lp(e1, v1, e2, v2, float(p)) ** (1.0 / p))


# ---------------------------------------------------------- discrete -----


@dataclass(frozen=True)
class Coupling:
    """Transport plan between two discrete measures, rows index ``mu``."""

    matrix: np.ndarray
    row_potential: np.ndarray
    col_potential: np.ndarray

    def marginal_error(self, mu, nu):
        return max(
            np.abs(self.matrix.sum(axis=1) - mu.weights).max(),
            np.abs(self.matrix.sum(axis=0) - nu.weights).max(),
        )


@dataclass(frozen=True)
class TransportResult:
    distance: float
    plan: Coupling
    cost: float
    cost_matrix: np.ndarray

    def __iter__(self):
        # allows ``dist, plan = wp_discrete(...)``
        yield self.distance
        yield self.plan

    def duality_gap(self):
        """Relative primal/dual gap and the most negative reduced cost."""
        u = self.plan.row_potential
        v = self.plan.col_potential
        a = self.plan.matrix.sum(axis=1)
        b = self.plan.matrix.sum(axis=0)
        dual = float(u @ a + v @ b)
        gap = abs(self.cost - dual) / max(1.0, abs(self.cost))
        reduced = self.cost_matrix - u[:, None] - v[None, :]
        return gap, float(reduced.min())


def solve_transport(a, b, C, max_iter=None):
    """Exact optimal plan for marginals ``a``, ``b`` and cost matrix ``C``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    m, n = C.shape
    if m == 0 or n == 0:
        raise ValueError("empty support")
    scale = float(np.abs(C).max()) if C.size else 0.0
    tol = 1e-13 * max(scale, 1e-300)
    if max_iter is None:
        max_iter = 50 * (m + n) * max(m, n) + 1000
    bi, bj, bx, u, v, status, _ = _kernels.transport_simplex(a, b, C, tol, max_iter)
    if status != 0:
        raise TransportError(f"transport simplex did not converge (status {status})")
    plan = np.zeros((m, n))
    np.add.at(plan, (bi, bj), bx)
    return plan, u, v


def wp_discrete(mu: DiscreteMeasure, nu: DiscreteMeasure, p=1.0, ground=euclidean) -> TransportResult:
    """Exact W_p between finitely supported measures.

    ``ground(X, Y)`` must return the matrix of pairwise ground distances
    between the rows of ``X`` and ``Y``. The plan is an optimal vertex of
    the transportation polytope; potentials are kept for certification.
    Unpacks as ``distance, plan``.
    """
    _check_p(p)
    if mu.size == 0 or nu.size == 0:
        raise ValueError("empty support")
    D = np.asarray(ground(mu.points, nu.points), dtype=float)
    if D.shape != (mu.size, nu.size):
        raise ValueError(f"ground metric returned shape {D.shape}")
    if np.any(D < 0):
        raise ValueError("ground metric returned negative distances")
    C = D**p
    plan, u, v = solve_transport(mu.weights, nu.weights, C)
    cost = float(np.sum(plan * C))
    dist = max(cost, 0.0) ** (1.0 / p)
    return TransportResult(dist, Coupling(plan, u, v), cost, C)


def wp(mu, nu, p=1.0, ground=euclidean) -> float:
    """Distance only; dispatches to the 1D formula when both inputs allow it."""
    if isinstance(mu, StaircaseQuantile) or isinstance(nu, StaircaseQuantile):
        return wp_one_dim(mu, nu, p)
    return wp_discrete(mu, nu, p, ground).distance


# ---------------------------------------------------------- Gaussian -----


def _symmetrize_psd(S, name="matrix"):
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.abs(S - S.T).max(initial=0.0) > SYM_TOL * max(1.0, np.abs(S).max(initial=0.0)):
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (S + S.T)


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float)).ravel()
        S = _symmetrize_psd(self.cov, "covariance")
        if S.shape[0] != m.shape[0]:
            raise ValueError("mean and covariance dimensions differ")
        w, V = np.linalg.eigh(S)
        if w.min() < EIG_CLAMP * max(1.0, abs(w).max()):
            raise ValueError(f"covariance not PSD (min eigenvalue {w.min():.3e})")
        if w.min() < 0:
            S = (V * np.clip(w, 0.0, None)) @ V.T
            S = 0.5 * (S + S.T)
        m.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", S)

    @property
    def dim(self):
        return self.mean.shape[0]


def psd_sqrt(S):
    """Symmetric PSD square root via eigendecomposition; negative
    eigenvalues from roundoff are clamped to zero."""
    S = _symmetrize_psd(S)
    w, V = np.linalg.eigh(S)
    R = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (R + R.T)


def bures_trace_term(S1, S2):
    """``Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})``.

    Evaluated as ``min_U |S1^{1/2} - U S2^{1/2}|_F^2`` over orthogonal ``U``
    (the maximiser comes from an SVD of ``S2^{1/2} S1^{1/2}``), which avoids
    the cancellation of the trace form when ``S1`` and ``S2`` are close.
    """
    r1 = psd_sqrt(S1)
    r2 = psd_sqrt(S2)
    W, _, Vt = np.linalg.svd(r2 @ r1)
    U = Vt.T @ W.T
    diff = r1 - U @ r2
    return float(np.sum(diff * diff))


def w2_gaussian(g1: GaussianMeasure, g2: GaussianMeasure) -> float:
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    dm = g1.mean - g2.mean
    return float(np.sqrt(dm @ dm + bures_trace_term(g1.cov, g2.cov)))


def gaussian_trace_gap(g1: GaussianMeasure, g2: GaussianMeasure) -> float:
    """``|Tr(S1)^{1/2} - Tr(S2)^{1/2}|``, a lower bound for ``w2_gaussian``."""
    return abs(np.sqrt(max(np.trace(g1.cov), 0.0)) - np.sqrt(max(np.trace(g2.cov), 0.0)))


# ------------------------------------------------------- finite space -----


def finite_support_embed(mu: DiscreteMeasure, X) -> np.ndarray:
    """Weight vector of ``mu`` in the coordinates of the point list ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    out = np.zeros(X.shape[0])
    for pt, w in zip(mu.points, mu.weights):
        hit = np.flatnonzero(np.all(X == pt, axis=1))
        if hit.size == 0:
            raise ValueError(f"atom {pt} is not in the point list")
        out[hit[0]] += w
    return out


def finite_support_bounds(mu, nu, D):
    """Two-sided comparison of W_1 with the embedding distance on a finite
    metric space with distance matrix ``D``.

    Returns ``(lower, w1, upper)`` with ``lower = delta * |phi(mu)-phi(nu)|``
    and ``upper = sqrt(d) * M * |phi(mu)-phi(nu)|``, where ``delta`` and ``M``
    are the smallest and largest off-diagonal distances. Measures are given
    as weight vectors over ``{0, ..., d-1}``.
    """
    D = np.asarray(D, dtype=float)
    d = D.shape[0]
    off = D[~np.eye(d, dtype=bool)]
    delta, M = off.min(), off.max()
    a = np.asarray(mu, dtype=float)
    b = np.asarray(nu, dtype=float)
    plan, _, _ = solve_transport(a, b, D)
    w1 = float(np.sum(plan * D))
    diff = np.linalg.norm(a - b)
    return delta * diff, w1, np.sqrt(d) * M * diff
