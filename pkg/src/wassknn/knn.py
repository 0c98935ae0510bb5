"""
Brute-force k-NN over arbitrary measure collections.

Distance ties go to the training point that comes first; vote ties go to
label 1, matching the Bayes rule ``1{eta >= 1/2}``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from ._rng import ordered_map, substream


@dataclass(frozen=True)
class LabeledDataset:
    items: tuple
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64).ravel()
        if len(self.items) != lab.shape[0]:
            raise ValueError("one label per item")
        if np.any((lab != 0) & (lab != 1)):
            raise ValueError("labels must be binary")
        lab.setflags(write=False)
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class GenerativeModel:
    """Either a finite list of ``(measure, probability, eta)`` atoms or a
    sampler ``rng -> measure`` paired with an ``eta(measure)`` callback."""

    atoms: Optional[tuple] = None
    sampler: Optional[Callable] = None
    eta: Optional[Callable] = None
    probs: np.ndarray = field(init=False, repr=False, default=None)
    etas: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.atoms is None:
            if self.sampler is None or self.eta is None:
                raise ValueError("need atoms or a sampler with an eta callback")
            return
        atoms = tuple(self.atoms)
        probs = np.array([a[1] for a in atoms], dtype=float)
        etas = np.array([a[2] for a in atoms], dtype=float)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("atom probabilities must sum to 1")
        if np.any((etas < 0) | (etas > 1)):
            raise ValueError("eta values must lie in [0, 1]")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs / probs.sum())
        object.__setattr__(self, "etas", etas)

    @property
    def is_atomic(self):
        return self.atoms is not None

    def measures(self):
        return [a[0] for a in self.atoms]


def neighbors(train: LabeledDataset, query, k: int, dist) -> np.ndarray:
    """Indices of the ``k`` nearest training items, sorted by
    (distance, index)."""
    if not 1 <= k <= len(train):
        raise ValueError(f"k={k} outside [1, {len(train)}]")
    d = np.array([dist(query, x) for x in train.items], dtype=float)
    return _kernels.knn_select(d, k)


def vote(labels) -> int:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("no votes")
    ones = int(np.count_nonzero(labels == 1))
    return 1 if ones >= labels.size - ones else 0


def classify(train: LabeledDataset, query, k: int, dist) -> int:
    return vote(train.labels[neighbors(train, query, k, dist)])


def classify_indexed(D, train_ids, train_labels, query_ids, k):
    """k-NN predictions when every point is one of finitely many atoms.

    ``D`` is the atom-by-atom distance matrix; each distinct query atom is
    classified once against the full training sequence.
    """
    train_ids = np.asarray(train_ids, dtype=np.int64)
    labels = np.asarray(train_labels, dtype=np.int64)
    if not 1 <= k <= train_ids.shape[0]:
        raise ValueError(f"k={k} outside [1, {train_ids.shape[0]}]")
    q = np.asarray(query_ids, dtype=np.int64)
    uniq, inv = np.unique(q, return_inverse=True)
    rows = np.ascontiguousarray(np.asarray(D, dtype=float)[np.ix_(uniq, train_ids)])
    pred = _kernels.knn_predict_rows(rows, labels, k)
    return pred[inv.ravel()]


def bayes_risk(model: GenerativeModel) -> float:
    """``E[min(eta, 1 - eta)]``, exact for atomic models."""
    if not model.is_atomic:
        raise ValueError("exact Bayes risk needs an atomic model; use bayes_risk_mc")
    return float(np.sum(model.probs * np.minimum(model.etas, 1.0 - model.etas)))


def bayes_risk_mc(model: GenerativeModel, rng, samples=100_000):
    """Monte Carlo Bayes risk with a 95% half-width."""
    vals = np.array([min(e, 1.0 - e) for e in (model.eta(model.sampler(rng)) for _ in range(samples))])
    return float(vals.mean()), float(1.96 * vals.std(ddof=1) / math.sqrt(samples))


_POW = re.compile(r"pow\(\s*([0-9.eE+-]+(?:\s*/\s*[0-9.eE+-]+)?)\s*\)")


def _ceil_close(x):
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def k_schedule(name: str, n: int, alpha: Optional[float] = None) -> int:
    """Neighbour count for sample size ``n``.

    ``sqrt`` gives ceil(sqrt n), ``pow(a)`` (or ``pow`` with ``alpha``) gives
    ceil(n**a) for 0 < a < 1, ``logsq`` gives ceil((log n)**2). Results are
    clipped to ``[1, n]``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    name = name.strip()
    if name == "sqrt":
        k = math.isqrt(n - 1) + 1
    elif name == "logsq":
        k = _ceil_close(math.log(n) ** 2)
    else:
        m = _POW.fullmatch(name)
        if m:
            num, _, den = m.group(1).partition("/")
            alpha = float(num) / float(den) if den else float(num)
        elif name != "pow" or alpha is None:
            raise ValueError(f"unknown schedule {name!r}")
        if not 0 < alpha < 1:
            raise ValueError("pow schedule needs 0 < alpha < 1")
        k = _ceil_close(n**alpha)
    return int(min(max(k, 1), n))


# ------------------------------------------------------------- risk ----


def _draw_atoms(model, rng, size):
    ids = rng.choice(len(model.atoms), size=size, p=model.probs)
    labels = (rng.random(size) < model.etas[ids]).astype(np.int64)
    return ids, labels


def atom_distance_matrix(model: GenerativeModel, dist) -> np.ndarray:
    ms = model.measures()
    K = len(ms)
    D = np.zeros((K, K))
    for i in range(K):
        for j in range(i + 1, K):
            D[i, j] = D[j, i] = dist(ms[i], ms[j])
    return D


def trial_risk(model, n, k, T, D, rng, exact=False):
    """0-1 risk of one k-NN classifier trained on ``n`` draws.

    For atomic models ``exact=True`` returns the conditional risk given the
    training sample by enumerating atoms; otherwise ``T`` test draws are
    classified.
    """
    train_ids, train_labels = _draw_atoms(model, rng, n)
    if exact:
        pred = classify_indexed(D, train_ids, train_labels, np.arange(len(model.atoms)), k)
        wrong = np.where(pred == 1, 1.0 - model.etas, model.etas)
        return float(np.sum(model.probs * wrong))
    test_ids, test_labels = _draw_atoms(model, rng, T)
    pred = classify_indexed(D, train_ids, train_labels, test_ids, k)
    return float(np.mean(pred != test_labels))


def _trial_risk_sampler(model, n, k, T, dist, rng):
    items = [model.sampler(rng) for _ in range(n)]
    labels = (rng.random(n) < np.array([model.eta(x) for x in items])).astype(np.int64)
    train = LabeledDataset(items, labels)
    wrong = 0
    for _ in range(T):
        q = model.sampler(rng)
        y = int(rng.random() < model.eta(q))
        wrong += classify(train, q, k, dist) != y
    return wrong / T


def estimate_risk(model, n, schedule, trials, T, dist, rng=0, exact=False, D=None, workers=None):
    """Mean k-NN risk across ``trials`` independent training samples and
    its standard error.

    ``rng`` is an integer seed; trial ``t`` draws from its own substream so
    results do not depend on the worker count. ``D`` may carry a
    precomputed atom distance matrix.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    k = k_schedule(schedule, n) if isinstance(schedule, str) else int(schedule(n))
    if model.is_atomic and D is None:
        D = atom_distance_matrix(model, dist)

    def one(t):
        g = substream(rng, "risk", n, t)
        if model.is_atomic:
            return trial_risk(model, n, k, T, D, g, exact)
        return _trial_risk_sampler(model, n, k, T, dist, g)

    risks = np.array(ordered_map(one, range(trials), workers))
    se = float(risks.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(risks.mean()), se
