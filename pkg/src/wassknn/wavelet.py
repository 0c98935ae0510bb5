"""
Densities on [0, 1] given as finite Daubechies wavelet series.

``f = sum_k alpha_k phi_{lk} + sum_{j=l..N} sum_k beta_{jk} psi_{jk}`` with
``phi_{lk}(x) = 2**(l/2) phi(2**l x - k)`` and ``psi_{jk}`` likewise. The
scaling function and wavelet are tabulated on dyadic grids by the cascade
algorithm; coefficients are indexed symmetrically, ``k`` in ``[-K_j, K_j]``,
with ``K_j`` large enough that every translate touching [0, 1] is present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .measures import ValidationError

SUPPORTED_ORDERS = (2, 3, 4)
NEGATIVE_TOL = 1e-6


@lru_cache(maxsize=None)
def _filter(order: int) -> tuple:
    # spectral factorisation of |m0|^2 = cos^{2N}(w/2) P(sin^2(w/2)),
    # keeping the roots outside the unit circle (minimum phase)
    N = order
    P = [math.comb(N - 1 + k, k) for k in range(N)]
    y_roots = np.roots(P[::-1]) if N > 1 else np.array([])
    z_roots = []
    for y in y_roots:
        c = 2.0 - 4.0 * y
        disc = np.sqrt(c * c - 4.0 + 0j)
        z1, z2 = (c + disc) / 2.0, (c - disc) / 2.0
        z_roots.append(z1 if abs(z1) > 1 else z2)
    coeffs = np.poly(np.concatenate([-np.ones(N), np.array(z_roots, dtype=complex)]))
    h = np.real(coeffs)[::-1]
    h = h * (math.sqrt(2.0) / h.sum())
    if h[0] < 0:
        h = h[::-1]
    return tuple(float(x) for x in h)


def scaling_filter(order: int) -> np.ndarray:
    """Daubechies low-pass filter with ``order`` vanishing moments
    (D4, D6, D8 for orders 2, 3, 4), normalised to sum ``sqrt(2)``."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported order {order}; choose from {SUPPORTED_ORDERS}")
    return np.array(_filter(order))


def wavelet_filter(order: int) -> np.ndarray:
    h = scaling_filter(order)
    L = h.shape[0]
    return np.array([(-1) ** k * h[L - 1 - k] for k in range(L)])


def orthonormality_residual(h) -> float:
    """``max_m |sum_k h_k h_{k+2m} - delta_{m0}|``."""
    h = np.asarray(h, dtype=float)
    L = h.shape[0]
    worst = 0.0
    for m in range(-(L // 2), L // 2 + 1):
        s = sum(h[k] * h[k + 2 * m] for k in range(L) if 0 <= k + 2 * m < L)
        worst = max(worst, abs(s - (1.0 if m == 0 else 0.0)))
    return worst


@lru_cache(maxsize=32)
def cascade(order: int, J: int):
    """``phi`` and ``psi`` at the points ``i / 2**J`` of their support
    ``[0, 2*order - 1]``. Returned arrays are read-only and shared."""
    h = scaling_filter(order)
    g = wavelet_filter(order)
    L = h.shape[0]
    s2 = math.sqrt(2.0)

    # values at the integers: eigenvector of [sqrt2 h_{2i-j}] for eigenvalue 1
    A = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            if 0 <= 2 * i - j < L:
                A[i, j] = s2 * h[2 * i - j]
    w, V = np.linalg.eig(A)
    v = np.real(V[:, np.argmin(np.abs(w - 1.0))])
    phi = v / v.sum()

    for level in range(J):
        step = 2**level
        size = (L - 1) * 2 * step + 1
        new = np.zeros(size)
        for j in range(L):
            off = j * step
            new[off : off + phi.shape[0]][: size - off] += s2 * h[j] * phi[: size - off]
        phi = new

    step = 2**J
    size = phi.shape[0]
    psi = np.zeros(size)
    idx = 2 * np.arange(size)
    for j in range(L):
        src = idx - j * step
        ok = (src >= 0) & (src < size)
        psi[ok] += s2 * g[j] * phi[src[ok]]
    phi.setflags(write=False)
    psi.setflags(write=False)
    return phi, psi


def coef_range(order: int, j: int) -> int:
    """``K_j``: translates ``k`` outside ``[-K_j, K_j]`` vanish on [0, 1]."""
    return max(2 * order - 2, 2**j - 1)


def interior_range(order: int, j: int):
    """Translates whose support lies inside [0, 1]."""
    return range(0, 2**j - (2 * order - 1) + 1)


@dataclass(frozen=True, eq=False)
class WaveletDensity:
    order: int
    base_level: int
    top_level: int
    alpha: np.ndarray
    betas: tuple

    def __post_init__(self):
        if self.order not in SUPPORTED_ORDERS:
            raise ValueError(f"unsupported order {self.order}")
        if self.top_level < self.base_level or self.base_level < 0:
            raise ValueError("need 0 <= base_level <= top_level")
        a = np.array(self.alpha, dtype=float)
        if a.shape != (2 * coef_range(self.order, self.base_level) + 1,):
            raise ValueError("alpha has the wrong length")
        bs = tuple(np.array(b, dtype=float) for b in self.betas)
        if len(bs) != self.top_level - self.base_level + 1:
            raise ValueError("one beta vector per level")
        for j, b in zip(self.levels, bs):
            if b.shape != (2 * coef_range(self.order, j) + 1,):
                raise ValueError(f"beta at level {j} has the wrong length")
            b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "betas", bs)

    @property
    def levels(self):
        return range(self.base_level, self.top_level + 1)

    @classmethod
    def zeros(cls, order=3, base_level=3, top_level=5):
        a = np.zeros(2 * coef_range(order, base_level) + 1)
        bs = tuple(np.zeros(2 * coef_range(order, j) + 1) for j in range(base_level, top_level + 1))
        return cls(order, base_level, top_level, a, bs)

    @classmethod
    def uniform(cls, order=3, base_level=3, top_level=5):
        """The constant density 1, from the partition of unity."""
        w = cls.zeros(order, base_level, top_level)
        a = np.full(w.alpha.shape, 2.0 ** (-base_level / 2))
        return cls(order, base_level, top_level, a, w.betas)

    def _same_basis(self, other):
        if (self.order, self.base_level, self.top_level) != (other.order, other.base_level, other.top_level):
            raise ValueError("densities use different wavelet bases")

    def __add__(self, other):
        self._same_basis(other)
        return WaveletDensity(
            self.order,
            self.base_level,
            self.top_level,
            self.alpha + other.alpha,
            tuple(a + b for a, b in zip(self.betas, other.betas)),
        )

    def __rmul__(self, c):
        return WaveletDensity(
            self.order, self.base_level, self.top_level, c * self.alpha, tuple(c * b for b in self.betas)
        )

    def __sub__(self, other):
        return self + (-1.0) * other


def _add_translates(out, table, coefs, K, j, R):
    # coefs[k + K] * 2^{j/2} * table((2^j x - k)) on x = i / 2^R
    stride = 2 ** (R - j)
    scale = 2.0 ** (j / 2)
    size = out.shape[0]
    for pos, c in enumerate(coefs):
        if c == 0.0:
            continue
        k = pos - K
        start = k * stride
        lo = max(start, 0)
        hi = min(start + table.shape[0], size)
        if lo >= hi:
            continue
        out[lo:hi] += c * scale * table[lo - start : hi - start]


def render(w: WaveletDensity, R: int) -> np.ndarray:
    """Values of the series at ``x_i = i / 2**R``, ``i = 0..2**R``."""
    if R < w.top_level + 4:
        raise ValueError(f"resolution 2**{R} too coarse for top level {w.top_level}")
    phi, psi = cascade(w.order, R - w.base_level)
    out = np.zeros(2**R + 1)
    _add_translates(out, phi, w.alpha, coef_range(w.order, w.base_level), w.base_level, R)
    for j, b in zip(w.levels, w.betas):
        sub = 2 ** (j - w.base_level)
        _add_translates(out, psi[::sub], b, coef_range(w.order, j), j, R)
    return out


def grid(R: int) -> np.ndarray:
    return np.arange(2**R + 1) / 2.0**R


def trapezoid(y, R):
    h = 2.0**-R
    return float(h * (y.sum() - 0.5 * (y[0] + y[-1])))


def cumulative(y, R):
    h = 2.0**-R
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return out


def single_wavelet(order, j, k, base_level=None, top_level=None):
    base_level = j if base_level is None else base_level
    top_level = j if top_level is None else top_level
    w = WaveletDensity.zeros(order, base_level, top_level)
    betas = [b.copy() for b in w.betas]
    betas[j - base_level][k + coef_range(order, j)] = 1.0
    return WaveletDensity(order, base_level, top_level, w.alpha, tuple(betas))


def psi_l1(order: int, j: int, k: int, R: int) -> float:
    """``||psi_{jk}||_{L1[0,1]}`` by trapezoidal quadrature."""
    if not -coef_range(order, j) <= k <= coef_range(order, j):
        raise ValueError("translate does not meet [0, 1]")
    vals = render(single_wavelet(order, j, k), max(R, j + 4))
    return trapezoid(np.abs(vals), max(R, j + 4))


def check_density(w: WaveletDensity, R: int):
    """Rendered values after checking nonnegativity and unit mass."""
    y = render(w, R)
    if y.min() < -NEGATIVE_TOL:
        raise ValidationError(f"density dips to {y.min():.3e}")
    mass = trapezoid(y, R)
    if abs(mass - 1.0) > NEGATIVE_TOL:
        raise ValidationError(f"density integrates to {mass!r}")
    return y


def w1_density(f: WaveletDensity, g: WaveletDensity, R: int) -> float:
    """``int_0^1 |F_f - F_g|`` with trapezoidal CDFs of the rendered
    densities; equals W_1 when both are probability densities."""
    yf = render(f, R)
    yg = render(g, R)
    for y in (yf, yg):
        if y.min() < -NEGATIVE_TOL:
            raise ValidationError(f"density dips to {y.min():.3e}")
    return trapezoid(np.abs(cumulative(yf, R) - cumulative(yg, R)), R)


def embed(w: WaveletDensity) -> np.ndarray:
    """Coefficients flattened as ``(alpha, beta_l, ..., beta_N)``."""
    return np.concatenate([w.alpha, *w.betas])


def embed_dim(order, base_level, top_level) -> int:
    return sum(2 * coef_range(order, j) + 1 for j in [base_level, *range(base_level, top_level + 1)])


def coefficient_terms(f: WaveletDensity, g: WaveletDensity):
    """``(sum |d alpha|, [2^{-3j/2} sum_k |d beta_jk| for each level])``."""
    f._same_basis(g)
    da = float(np.abs(f.alpha - g.alpha).sum())
    per_level = [2.0 ** (-1.5 * j) * float(np.abs(a - b).sum()) for j, a, b in zip(f.levels, f.betas, g.betas)]
    return da, per_level


def bound_ratios(f: WaveletDensity, g: WaveletDensity, R: int = 12):
    """``W_1`` divided by the sum-form and by the max-form coefficient
    expressions; returns ``(upper_ratio, lower_ratio)``."""
    da, per_level = coefficient_terms(f, g)
    upper_den = da + sum(per_level)
    lower_den = da + max(per_level)
    if upper_den == 0.0:
        raise ZeroDivisionError("identical coefficients: ratio undefined")
    dist = w1_density(f, g, R)
    return dist / upper_den, dist / lower_den


def random_density(rng, order=3, base_level=3, top_level=5, floor=0.01, density=1.0):
    """Constant density plus interior perturbations, kept above ``floor``.

    Only translates supported inside [0, 1] are perturbed (scaling-function
    moves are paired to keep the mass), and the amplitudes are bounded so
    that the sup-norm of the perturbation stays below ``1 - floor``.
    """
    base = WaveletDensity.uniform(order, base_level, top_level)
    phi, psi = cascade(order, 8)
    L = 2 * order
    overlap = L - 1
    n_terms = top_level - base_level + 2
    budget = (1.0 - floor) / n_terms

    alpha = base.alpha.copy()
    inner = list(interior_range(order, base_level))
    if len(inner) >= 2:
        amp = budget / (2.0 ** (base_level / 2) * np.abs(phi).max() * overlap)
        delta = rng.uniform(-amp, amp, len(inner))
        delta -= delta.mean()
        delta *= 0.5
        alpha[np.array(inner) + coef_range(order, base_level)] += delta

    betas = []
    for j in range(base_level, top_level + 1):
        b = np.zeros(2 * coef_range(order, j) + 1)
        inner = np.array(list(interior_range(order, j)))
        if inner.size:
            eps = budget / (2.0 ** (j / 2) * np.abs(psi).max() * overlap)
            vals = rng.uniform(-eps, eps, inner.size)
            vals[rng.random(inner.size) > density] = 0.0
            b[inner + coef_range(order, j)] = vals
        betas.append(b)
    return WaveletDensity(order, base_level, top_level, alpha, tuple(betas))
