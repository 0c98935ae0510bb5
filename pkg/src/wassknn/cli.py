"""
Experiment driver.

``wassknn run --suite NAME [--config FILE] [--n 64,256] [--seed 7] ...``
writes one CSV per run; ``wassknn summarize FILE`` aggregates risk CSVs
per sample size. Configuration is a flat ``key = value`` file; command
line flags override it. Every row carries the config hash and the seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import counterexample as cx
from . import dimension as dm
from . import geometry as geo
from . import knn
from . import wavelet as wv
from ._rng import ordered_map, substream
from .measures import DiscreteMeasure
from .transport import GaussianMeasure, w2_gaussian, wp_discrete

EXIT_OK, EXIT_IO, EXIT_USAGE = 0, 1, 2

RISK_N = (100, 400, 1600, 6400)

DEFAULTS = {
    "counterexample": {"n": tuple(2**e for e in range(6, 15)), "trials": 100, "T": 1000, "p": 1.0, "max_index": 64},
    "finite-support": {"n": RISK_N, "trials": 50, "T": 1000},
    "gaussian": {"n": RISK_N, "trials": 50, "T": 1000},
    "wavelet": {"n": RISK_N, "trials": 50, "T": 1000, "R": 10},
    "rational-grid": {"n": (3,), "trials": 200, "dim": 1, "p": 1.0},
    "geometry": {"n": (), "trials": 500},
    "dimension": {"n": (), "trials": 100, "search_trials": 100000},
}
SUITES = tuple(DEFAULTS)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    suite: str
    seed: int
    n: tuple = ()
    schedule: str = "sqrt"
    trials: int = 1
    T: int = 1000
    out: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise ConfigError("n grid must be strictly increasing")
        if any(x < 1 for x in self.n):
            raise ConfigError("sample sizes must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")

    def canonical(self) -> str:
        items = {"suite": self.suite, "seed": self.seed, "n": ",".join(map(str, self.n)), "schedule": self.schedule,
                 "trials": self.trials, "T": self.T, **self.params}
        return "".join(f"{k}={items[k]}\n" for k in sorted(items))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def param(self, key, cast=float):
        return cast(self.params[key])


def read_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            out[key.strip()] = value.strip()
    return out


def _parse_n(text):
    text = str(text).strip()
    if not text:
        return ()
    return tuple(int(x) for x in text.replace(" ", "").split(","))


def build_config(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    suite = raw.pop("suite", None)
    if suite is None:
        raise ConfigError("no suite given")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if "seed" not in raw:
        raise ConfigError("a seed is required")
    merged = {k: v for k, v in DEFAULTS[suite].items()}
    merged.update(raw)
    try:
        n = merged.pop("n")
        n = _parse_n(n) if isinstance(n, str) else tuple(n)
        return ExperimentConfig(
            suite=suite,
            seed=int(merged.pop("seed")),
            n=n,
            schedule=str(merged.pop("schedule", "sqrt")),
            trials=int(merged.pop("trials")),
            T=int(merged.pop("T", 1000)),
            out=str(merged.pop("out", "")),
            params={k: str(v) for k, v in merged.items()},
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


# --------------------------------------------------------------- suites ---


def _counterexample(cfg: ExperimentConfig):
    fam = cx.StaircaseFamilyConfig(p=cfg.param("p"), max_index=cfg.param("max_index", int))
    ranks = cx.distance_ranks(fam)
    tasks = [(n, t) for n in cfg.n for t in range(cfg.trials)]

    def one(task):
        n, t = task
        k = knn.k_schedule(cfg.schedule, n)
        return cx.simulate(fam, n, k, cfg.T, substream(cfg.seed, cfg.suite, n, t), trial=t, ranks=ranks)

    recs = ordered_map(one, tasks)
    bad = sum(r.mismatches for r in recs)
    if bad:
        print(f"warning: {bad} predictions disagree with the counting oracle", file=sys.stderr)
    header = ["n", "k", "trial", "x_n", "emp_risk", "exact_tail", "hoeffding_bound"]
    rows = [[r.n, r.k, r.trial, r.x_n, r.emp_risk, r.exact_tail, r.hoeffding_bound] for r in recs]
    return header, rows


def finite_support_model():
    """Five measures on the metric space {0, 1, 3} with fixed eta."""
    X = np.array([[0.0], [1.0], [3.0]])
    weights = [(1, 0, 0), (0.5, 0.5, 0), (0, 1, 0), (0.2, 0.3, 0.5), (0, 0, 1)]
    probs = (0.3, 0.2, 0.2, 0.15, 0.15)
    etas = (0.1, 0.8, 0.3, 0.9, 0.6)
    atoms = tuple((DiscreteMeasure.from_atoms(X, w), p, e) for w, p, e in zip(weights, probs, etas))
    return knn.GenerativeModel(atoms=atoms), (lambda a, b: wp_discrete(a, b, 1.0).distance)


def gaussian_model():
    """Six 1D Gaussians ``N(m, s^2)`` in two loose classes."""
    table = [
        ((0.0, 1.0), 0.2, 0.15),
        ((0.5, 1.0), 0.2, 0.3),
        ((0.2, 2.0), 0.1, 0.2),
        ((1.0, 1.2), 0.2, 0.75),
        ((1.5, 0.8), 0.15, 0.85),
        ((2.0, 1.5), 0.15, 0.9),
    ]
    atoms = tuple((GaussianMeasure([m], [[s * s]]), p, e) for (m, s), p, e in table)
    return knn.GenerativeModel(atoms=atoms), w2_gaussian


def wavelet_model(seed, R=10):
    rng = substream(seed, "wavelet-model")
    dens = [wv.random_density(rng) for _ in range(5)]
    probs = (0.25, 0.25, 0.2, 0.15, 0.15)
    etas = (0.2, 0.85, 0.35, 0.7, 0.1)
    atoms = tuple(zip(dens, probs, etas))
    return knn.GenerativeModel(atoms=atoms), (lambda f, g: wv.w1_density(f, g, R))


def _risk_suite(cfg: ExperimentConfig, model, dist):
    D = knn.atom_distance_matrix(model, dist)
    bayes = knn.bayes_risk(model)
    exact = cfg.params.get("exact", "0") not in ("0", "false", "no")
    tasks = [(n, t) for n in cfg.n for t in range(cfg.trials)]

    def one(task):
        n, t = task
        k = knn.k_schedule(cfg.schedule, n)
        g = substream(cfg.seed, cfg.suite, n, t)
        return [n, k, t, knn.trial_risk(model, n, k, cfg.T, D, g, exact), bayes]

    return ["n", "k", "trial", "risk", "bayes_risk"], ordered_map(one, tasks)


def _finite_support(cfg):
    return _risk_suite(cfg, *finite_support_model())


def _gaussian(cfg):
    return _risk_suite(cfg, *gaussian_model())


def _wavelet(cfg):
    return _risk_suite(cfg, *wavelet_model(cfg.seed, cfg.param("R", int)))


def _rational_grid(cfg):
    d = cfg.param("dim", int)
    p = cfg.param("p")
    tasks = [(level, t) for level in cfg.n for t in range(cfg.trials)]
    grids = {level: dm.factorial_grid(level, d) for level in cfg.n}

    def one(task):
        level, t = task
        g = substream(cfg.seed, cfg.suite, level, t)
        mu = dm.random_rational_measure(g, grids[level])
        nu = dm.random_rational_measure(g, grids[level])
        while nu == mu:
            nu = dm.random_rational_measure(g, grids[level])
        w, bound = dm.rational_separation(mu, nu, p)
        return [t, level, d, p, w, bound, w >= bound * (1 - 1e-12)]

    return ["pair", "level", "dim", "p", "wp", "bound", "holds"], ordered_map(one, tasks)


def random_discrete(rng, atoms=4, d=2):
    k = int(rng.integers(1, atoms + 1))
    return DiscreteMeasure.from_atoms(rng.random((k, d)), rng.dirichlet(np.ones(k)))


def random_gaussian(rng, d=2):
    A = rng.standard_normal((d, d))
    return GaussianMeasure(rng.standard_normal(d), A @ A.T + 0.1 * np.eye(d))


def geometry_checks(rng):
    """Gaps for one random triple: W1 mixture comparison, PC and WPC for
    displacement and Bures geodesics."""
    t = float(rng.uniform(0.05, 0.95))
    m1, m2, m3 = (random_discrete(rng) for _ in range(3))
    g1, g2, g3 = (random_gaussian(rng) for _ in range(3))
    return {
        "w1_mixture_equality": geo.comparison_gap(geo.w1, m1, m2, m3, geo.mixture_geodesic, t),
        "pc_displacement": geo.pc_gap(m1, m2, m3, geo.displacement_geodesic, t),
        "pc_gaussian": geo.pc_gap(g1, g2, g3, geo.gaussian_geodesic, t),
        "wpc_displacement": geo.comparison_gap(geo.w2, m1, m2, m3, geo.displacement_geodesic, t),
        "wpc_gaussian": geo.comparison_gap(geo.w2, g1, g2, g3, geo.gaussian_geodesic, t),
    }


GEOMETRY_TOL = {
    "w1_mixture_equality": ("abs", 1e-9),
    "pc_displacement": ("min", 1e-9),
    "pc_gaussian": ("min", 1e-9),
    "wpc_displacement": ("min", 1e-8),
    "wpc_gaussian": ("min", 1e-8),
}


def _geometry(cfg):
    res = ordered_map(lambda i: geometry_checks(substream(cfg.seed, cfg.suite, i)), range(cfg.trials))
    rows = []
    for name, (kind, tol) in GEOMETRY_TOL.items():
        gaps = np.array([r[name] for r in res])
        fails = np.abs(gaps) > tol if kind == "abs" else gaps < -tol
        rows.append([name, gaps.size, int(fails.sum()), gaps.min(), np.abs(gaps).max()])
    return ["check", "instances", "failures", "min_gap", "max_abs_gap"], rows


def cover_check(rng):
    """Weak cover of a random dyadic-radius family in the plane:
    (covers every center, multiplicity of the chosen subfamily)."""
    fam = dm.euclidean_family(*_random_dyadic_balls(rng))
    idx = dm.weak_cover(fam)
    sub = fam.subfamily(idx)
    probes = list(sub.centers) + dm.intersection_probes(sub.centers, sub.radii) + list(fam.centers)
    return dm.covers_all_centers(fam, idx), dm.multiplicity(sub, probes)


def _random_dyadic_balls(rng, count=80):
    centers = rng.random((count, 2))
    radii = rng.choice([2.0**-e for e in range(2, 6)], count)
    return centers, radii, 0.5


def _dimension(cfg):
    search = cfg.param("search_trials", int)
    rows = []
    for d in (1, 2, 3):
        sizes = dm.max_common_point_family(d, search, substream(cfg.seed, cfg.suite, "packing", d))
        bound = 3**d - 1
        rows.append([f"packing_d{d}", search, int(np.sum(sizes > bound)), int(sizes.max()), bound])
    res = ordered_map(lambda i: cover_check(substream(cfg.seed, cfg.suite, "cover", i)), range(cfg.trials))
    mult = np.array([m for _, m in res])
    rows.append(["weak_cover_covers", len(res), sum(1 for c, _ in res if not c), 1, 1])
    rows.append(["weak_cover_multiplicity", len(res), int(np.sum(mult > 8)), int(mult.max()), 8])
    return ["check", "instances", "failures", "max_value", "bound"], rows


RUNNERS = {
    "counterexample": _counterexample,
    "finite-support": _finite_support,
    "gaussian": _gaussian,
    "wavelet": _wavelet,
    "rational-grid": _rational_grid,
    "geometry": _geometry,
    "dimension": _dimension,
}


def run(cfg: ExperimentConfig) -> str:
    """CSV text for ``cfg``; rows are already in (n, trial) order."""
    header, rows = RUNNERS[cfg.suite](cfg)
    h = cfg.hash
    lines = [",".join(header + ["config_hash", "seed"])]
    for r in rows:
        lines.append(",".join(fmt(x) for x in list(r) + [h, cfg.seed]))
    return "\n".join(lines) + "\n"


def summarize(text: str):
    """Per-n mean risk and standard error from a risk CSV.

    Returns rows ``(n, trials, mean, se, bayes_risk)``.
    """
    reader = csv.DictReader(text.splitlines())
    fields = reader.fieldnames or []
    col = "emp_risk" if "emp_risk" in fields else "risk" if "risk" in fields else None
    if "n" not in fields or col is None:
        raise ConfigError("CSV has no n and risk columns")
    groups: dict = {}
    bayes: dict = {}
    for row in reader:
        try:
            n = int(row["n"])
            r = float(row[col])
            b = float(row["bayes_risk"]) if "bayes_risk" in fields else 0.0
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed row: {row}") from exc
        groups.setdefault(n, []).append(r)
        bayes[n] = b
    if not groups:
        raise ConfigError("CSV has no rows")
    out = []
    for n in sorted(groups):
        v = np.array(groups[n])
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out.append((n, v.size, float(v.mean()), se, bayes[n]))
    return out


def _parser():
    ap = argparse.ArgumentParser(prog="wassknn", description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run one experiment suite and write a CSV")
    r.add_argument("--config", help="key = value file")
    r.add_argument("--suite")
    r.add_argument("--n", help="comma-separated sample sizes")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--out", help="CSV path (default: stdout)")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="extra config entries")
    s = sub.add_parser("summarize", help="per-n mean and SE of a risk CSV")
    s.add_argument("csv")
    s.add_argument("--plot", help="write two-column (n, risk) data here")
    return ap


def _cmd_run(args) -> int:
    raw = {}
    try:
        if args.config:
            raw.update(read_config_file(args.config))
        for item in args.set:
            k, sep, v = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            raw[k.strip()] = v.strip()
        for key in ("suite", "n", "seed", "trials", "out"):
            val = getattr(args, key)
            if val is not None:
                raw[key] = str(val)
        cfg = build_config(raw)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = run(cfg)
    if not cfg.out or cfg.out == "-":
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _cmd_summarize(args) -> int:
    try:
        with open(args.csv, encoding="utf-8") as fh:
            rows = summarize(fh.read())
        print(f"{'n':>8} {'trials':>7} {'mean':>12} {'se':>12} {'bayes_risk':>12}")
        for n, cnt, mean, se, b in rows:
            print(f"{n:>8d} {cnt:>7d} {mean:>12.6f} {se:>12.6f} {b:>12.6f}")
        if args.plot:
            with open(args.plot, "w", encoding="utf-8", newline="") as fh:
                fh.write("".join(f"{n} {'%.17g' % mean}\n" for n, _, mean, _, _ in rows))
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return _cmd_run(args) if args.cmd == "run" else _cmd_summarize(args)
