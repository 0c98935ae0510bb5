"""
The staircase family on W_p((0,1)) where k_n-NN fails to be consistent.

``mu_0`` has quantile function ``sum_i a_i 1{I_i}``; ``mu_m`` widens the
m-th step to ``a_{m+1}``. Distances within the family have closed forms,
which are evaluated in exact rational arithmetic whenever ``p`` is an
integer so that strict inequalities survive far down the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.stats import binom

from .dimension import BallFamily
from .knn import GenerativeModel, classify_indexed
from .measures import DEFAULT_LEVELS, StaircaseQuantile


def dyadic_sequence(i: int) -> Fraction:
    """Default ``a_i = 1 - 2**-i``."""
    return 1 - Fraction(1, 2**i)


@dataclass(frozen=True)
class StaircaseFamilyConfig:
    sequence: Callable = dyadic_sequence
    p: float = 1.0
    max_index: int = 64
    levels: int = DEFAULT_LEVELS
    _terms: tuple = field(init=False, repr=False, default=())

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("p must be >= 1")
        if self.max_index < 1:
            raise ValueError("max_index must be positive")
        # a_1 .. a_{max(M, L) + 1}, kept exact when the rule allows it
        top = max(self.max_index, self.levels) + 1
        terms = []
        for i in range(1, top + 1):
            a = self.sequence(i)
            terms.append(a if isinstance(a, Fraction) else Fraction(float(a)))
        for i, a in enumerate(terms):
            if not 0 < a < 1:
                raise ValueError(f"a_{i + 1} = {float(a)!r} is outside (0, 1)")
            if i and not a > terms[i - 1]:
                raise ValueError(f"sequence not strictly increasing at index {i + 1}")
        object.__setattr__(self, "_terms", tuple(terms))

    def a(self, i: int) -> Fraction:
        return self._terms[i - 1]

    @property
    def exact(self) -> bool:
        return float(self.p).is_integer()


def staircase(cfg: StaircaseFamilyConfig, m: int) -> StaircaseQuantile:
    """Quantile function of ``mu_m``, truncated at ``cfg.levels`` steps."""
    if not 0 <= m <= cfg.max_index:
        raise ValueError(f"index {m} outside [0, {cfg.max_index}]")
    if m >= cfg.levels:
        raise ValueError(f"index {m} needs more than {cfg.levels} truncation levels")
    vals = [float(cfg.a(i)) for i in range(1, cfg.levels + 1)]
    if m >= 1:
        vals[m - 1] = float(cfg.a(m + 1))
    return StaircaseQuantile(np.array(vals))


def step_cost(cfg: StaircaseFamilyConfig, i: int):
    """``(a_{i+1} - a_i)**p * 2**-i``: what widening step ``i`` costs in W_p^p."""
    gap = cfg.a(i + 1) - cfg.a(i)
    if cfg.exact:
        return gap ** int(cfg.p) * Fraction(1, 2**i)
    return float(gap) ** cfg.p * 2.0**-i


def wp_closed_power(cfg: StaircaseFamilyConfig, j: int, m: int):
    """``W_p(mu_j, mu_m)**p``; a Fraction when ``p`` is an integer."""
    for x in (j, m):
        if not 0 <= x <= cfg.max_index:
            raise ValueError(f"index {x} outside [0, {cfg.max_index}]")
    if j == m:
        return Fraction(0) if cfg.exact else 0.0
    if j == 0 or m == 0:
        return step_cost(cfg, j or m)
    return step_cost(cfg, j) + step_cost(cfg, m)


def wp_closed(cfg: StaircaseFamilyConfig, j: int, m: int) -> float:
    return float(wp_closed_power(cfg, j, m)) ** (1.0 / cfg.p)


def distance_ranks(cfg: StaircaseFamilyConfig) -> np.ndarray:
    """Matrix of dense ranks of the exact distances among ``mu_0..mu_M``.

    k-NN only looks at the order of distances, so the ranks reproduce the
    classifier exactly while avoiding float ties between values that differ
    below double precision.
    """
    M = cfg.max_index
    vals = {}
    for j in range(M + 1):
        for m in range(j, M + 1):
            vals[(j, m)] = wp_closed_power(cfg, j, m)
    order = {v: r for r, v in enumerate(sorted(set(vals.values())))}
    R = np.zeros((M + 1, M + 1))
    for (j, m), v in vals.items():
        R[j, m] = R[m, j] = order[v]
    return R


def label(m: int) -> int:
    return 1 if m == 0 else 0


def sample_index(rng, size=None, max_index=64):
    """Draw from rho: 0 with probability 1/2, m >= 1 with probability 2**-(m+1).

    Each draw is the number of trailing one bits of a uniform 64-bit word,
    which is exactly geometric; the (probability 2**-64) all-ones word and
    anything above ``max_index`` are folded into ``max_index``.
    """
    n = 1 if size is None else int(np.prod(size))
    words = rng.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)
    inv = ~words
    low = inv & (~inv + np.uint64(1))
    safe = np.where(inv == 0, np.uint64(1), low)
    out = np.where(inv == 0, 64, np.log2(safe.astype(np.float64)).astype(np.int64))
    out = np.minimum(out, max_index)
    return int(out[0]) if size is None else out.reshape(size)


def family_model(cfg: StaircaseFamilyConfig) -> GenerativeModel:
    """Atomic model over the indices ``0..M`` with the deterministic labels."""
    M = cfg.max_index
    probs = [0.5] + [2.0 ** -(m + 1) for m in range(1, M + 1)]
    probs[-1] += 2.0**-(M + 1)
    return GenerativeModel(atoms=tuple((m, probs[m], float(label(m))) for m in range(M + 1)))


def hoeffding_bound(n: int) -> float:
    """``1 - exp(-2 (sqrt(n)/2 - 1)**2)``, a lower bound on P(X_n > sqrt n)."""
    if n < 4:
        raise ValueError("Hoeffding bound needs n >= 4")
    return 1.0 - math.exp(-2.0 * (math.sqrt(n) / 2.0 - 1.0) ** 2)


def exact_tail(n: int) -> float:
    """P(Binomial(n, 1/2) > sqrt n)."""
    return float(binom.sf(math.isqrt(n), n, 0.5))


def counting_oracle(train_ids, query_ids, k):
    """Predictions from copy counts alone.

    Around ``mu_m`` (m >= 1) the neighbour list is its own copies, then the
    copies of ``mu_0``, then everything else (all labelled 0). Around
    ``mu_0`` it is its own copies followed by label-0 atoms.
    """
    train_ids = np.asarray(train_ids)
    x = int(np.count_nonzero(train_ids == 0))
    counts = np.bincount(train_ids)
    out = np.empty(len(query_ids), np.int64)
    for t, m in enumerate(np.asarray(query_ids)):
        if m == 0:
            ones = min(x, k)
        else:
            own = int(counts[m]) if m < counts.size else 0
            ones = min(x, max(k - own, 0))
        out[t] = 1 if 2 * ones >= k else 0
    return out


@dataclass(frozen=True)
class SimRecord:
    n: int
    k: int
    trial: int
    x_n: int
    emp_risk: float
    exact_tail: float
    hoeffding_bound: float
    mismatches: int = 0


def simulate(cfg: StaircaseFamilyConfig, n: int, k: int, T: int, rng, trial: int = 0, ranks=None) -> SimRecord:
    """One draw of D_n and ``T`` test queries from rho, classified by k-NN
    on the closed-form distances and cross-checked against the counting
    oracle."""
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    R = distance_ranks(cfg) if ranks is None else ranks
    train = sample_index(rng, n, cfg.max_index)
    queries = sample_index(rng, T, cfg.max_index)
    labels = (train == 0).astype(np.int64)
    pred = classify_indexed(R, train, labels, queries, k)
    oracle = counting_oracle(train, queries, k)
    truth = (queries == 0).astype(np.int64)
    return SimRecord(
        n=n,
        k=k,
        trial=trial,
        x_n=int(np.count_nonzero(train == 0)),
        emp_risk=float(np.mean(pred != truth)),
        exact_tail=exact_tail(n),
        hoeffding_bound=hoeffding_bound(n) if n >= 4 else float("nan"),
        mismatches=int(np.count_nonzero(pred != oracle)),
    )


def ball_family(cfg: StaircaseFamilyConfig, indices, scale_index=1):
    """``{B(mu_m, W_p(mu_m, mu_0))}`` over ``indices`` at scale
    ``W_p(mu_{scale_index}, mu_0)``.

    Distances are expressed as ``W_p**p`` (exact when p is an integer);
    every ball predicate only compares distances, and ``x -> x**p`` is
    increasing, so membership and disconnectedness are unchanged.
    """
    def dist(j, m):
        return wp_closed_power(cfg, j, m)

    radii = [dist(m, 0) for m in indices]
    return BallFamily(list(indices), radii, dist(scale_index, 0), dist)
