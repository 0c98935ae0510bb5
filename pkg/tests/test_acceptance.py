"""
Acceptance suite: twelve end-to-end criteria, each checked at its stated
tolerance and time budget. Every test prints one PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from wassknn import cli
from wassknn import counterexample as cx
from wassknn import dimension as dm
from wassknn import geometry as geo
from wassknn import knn
from wassknn import wavelet as wv
from wassknn._rng import substream
from wassknn.dimension import is_disconnected, multiplicity
from wassknn.measures import DiscreteMeasure
from wassknn.transport import (
    GaussianMeasure,
    finite_support_bounds,
    gaussian_trace_gap,
    w2_gaussian,
    wp_discrete,
    wp_one_dim,
)

SEED = 20240607


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(num, title, ok, budget, detail="", extra=()):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and (budget is None or elapsed < budget)
        limit = f" < {budget:g}s" if budget is not None else ""
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] AC{num:02d} {title}: {detail} ({elapsed:.2f}s{limit})")
            for line in extra:
                print(f"       {line}")
        return ok

    return emit


def test_ac01_solver_matches_quantile_formula(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        pair = []
        for _ in range(2):
            k = int(rng.integers(1, 9))
            pair.append(DiscreteMeasure.from_atoms(rng.normal(size=(k, 1)), rng.dirichlet(np.ones(k))))
        for p in (1, 2):
            worst = max(worst, abs(wp_discrete(*pair, p).distance - wp_one_dim(*pair, p)))
    assert report(1, "exact solver vs 1D formula", worst <= 1e-8, 5, f"max |diff| = {worst:.2e} over 400 cases")


def test_ac02_staircase_geometry(report):
    ok = True
    facts = []
    for p in (1.0, 2.0):
        cfg = cx.StaircaseFamilyConfig(p=p)
        strict = all(
            cx.wp_closed_power(cfg, j, m) > max(cx.wp_closed_power(cfg, j, 0), cx.wp_closed_power(cfg, m, 0))
            for j in range(1, 21)
            for m in range(j + 1, 21)
        )
        disc = is_disconnected(cx.ball_family(cfg, range(2, 21)))
        mult = multiplicity(cx.ball_family(cfg, range(1, 21)), [0])
        ok &= strict and disc and mult == 20
        facts.append(f"p={p:g}: strict={strict} disconnected={disc} multiplicity={mult}")
    assert report(2, "staircase witness", ok, 1, "; ".join(facts))


def test_ac03_binomial_tail(report):
    ns = (16, 64, 256, 1024, 4096)
    dominated = all(cx.exact_tail(n) >= cx.hoeffding_bound(n) for n in ns)
    rng = substream(SEED, "ac03")
    n, trials = 1024, 10_000
    x = np.array([np.count_nonzero(cx.sample_index(rng, n) == 0) for _ in range(trials)])
    mc = float(np.mean(x > math.sqrt(n)))
    exact = cx.exact_tail(n)
    ok = dominated and abs(mc - exact) <= 0.02
    assert report(3, "binomial tail", ok, 10, f"exact >= Hoeffding: {dominated}; MC {mc:.4f} vs exact {exact:.4f}")


def test_ac04_simulation_integrity(report):
    cfg = cx.StaircaseFamilyConfig()
    ranks = cx.distance_ranks(cfg)
    mismatches = 0
    lines = []
    for e in range(6, 15):
        n = 2**e
        k = knn.k_schedule("sqrt", n)
        recs = [cx.simulate(cfg, n, k, 1000, substream(SEED, "ac04", n, t), trial=t, ranks=ranks) for t in range(100)]
        mismatches += sum(r.mismatches for r in recs)
        risk = np.mean([r.emp_risk for r in recs])
        hb = cx.hoeffding_bound(n)
        lines.append(f"n={n}: E[R_n]~{risk:.4f}, claimed path 0.5*tail={0.5 * recs[0].exact_tail:.4f}, 0.5*hoeffding={0.5 * hb:.4f}")
    assert report(4, "simulation vs counting oracle", mismatches == 0, 300, f"{mismatches} mismatches", lines)


def _random_disc(rng, atoms=4, d=2):
    k = int(rng.integers(1, atoms + 1))
    return DiscreteMeasure.from_atoms(rng.random((k, d)), rng.dirichlet(np.ones(k)))


def _random_gauss(rng, d=2):
    A = rng.normal(size=(d, d))
    return GaussianMeasure(rng.normal(size=d), A @ A.T + 0.1 * np.eye(d))


def test_ac05_geodesic_inequalities(report):
    rng = np.random.default_rng(SEED)
    worst = {"w1_eq": 0.0, "pc_disc": 0.0, "pc_gauss": 0.0, "wpc": 0.0}
    for _ in range(500):
        t = float(rng.uniform(0, 1))
        m = [_random_disc(rng) for _ in range(3)]
        g = [_random_gauss(rng) for _ in range(3)]
        worst["w1_eq"] = max(worst["w1_eq"], abs(geo.comparison_gap(geo.w1, *m, geo.mixture_geodesic, t)))
        worst["pc_disc"] = min(worst["pc_disc"], geo.pc_gap(*m, geo.displacement_geodesic, t))
        worst["pc_gauss"] = min(worst["pc_gauss"], geo.pc_gap(*g, geo.gaussian_geodesic, t))
        worst["wpc"] = min(
            worst["wpc"],
            geo.comparison_gap(geo.w2, *m, geo.displacement_geodesic, t),
            geo.comparison_gap(geo.w2, *g, geo.gaussian_geodesic, t),
        )
    ok = worst["w1_eq"] <= 1e-9 and worst["pc_disc"] >= -1e-9 and worst["pc_gauss"] >= -1e-9 and worst["wpc"] >= -1e-8
    detail = ", ".join(f"{k}={v:.2e}" for k, v in worst.items())
    assert report(5, "geodesic comparison inequalities", ok, 120, detail)


def test_ac06_gaussian_closed_form(report):
    rng = np.random.default_rng(SEED)
    trace_worst = eq_worst = speed_worst = 0.0
    for _ in range(500):
        d = int(rng.integers(1, 7))
        A, B = rng.normal(size=(2, d, d))
        g1 = GaussianMeasure(rng.normal(size=d), A @ A.T + 1e-3 * np.eye(d))
        g2 = GaussianMeasure(rng.normal(size=d), B @ B.T + 1e-3 * np.eye(d))
        trace_worst = max(trace_worst, gaussian_trace_gap(g1, g2) - w2_gaussian(g1, g2))
        c = float(rng.uniform(0.1, 3.0))
        h = GaussianMeasure(g1.mean, c * c * g1.cov)
        eq_worst = max(eq_worst, abs(w2_gaussian(g1, h) - abs(c - 1) * math.sqrt(np.trace(g1.cov))))
        s, t = np.sort(rng.uniform(0, 1, 2))
        mid = w2_gaussian(geo.gaussian_geodesic(g1, g2, s), geo.gaussian_geodesic(g1, g2, t))
        speed_worst = max(speed_worst, abs(mid - (t - s) * w2_gaussian(g1, g2)))
    ok = trace_worst <= 1e-9 and eq_worst <= 1e-8 and speed_worst <= 1e-7
    detail = f"trace slack {trace_worst:.2e}, equality err {eq_worst:.2e}, speed err {speed_worst:.2e}"
    assert report(6, "Gaussian closed form", ok, 30, detail)


def test_ac07_finite_support_bounds(report):
    rng = np.random.default_rng(SEED)
    low_fail = up_fail = 0
    worst_ratio = np.inf
    for _ in range(500):
        d = int(rng.integers(2, 11))
        X = rng.random((d, 2))
        D = cdist(X, X)
        a, b = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
        lower, w1, upper = finite_support_bounds(a, b, D)
        low_fail += lower > w1
        up_fail += w1 > upper
        worst_ratio = min(worst_ratio, w1 / lower)
    ok = low_fail == 0 and up_fail == 0
    detail = f"lower-bound violations {low_fail}/500 (min W1/lower = {worst_ratio:.4f}), upper violations {up_fail}/500"
    assert report(7, "finite-support embedding bounds", ok, 30, detail)


def test_ac08_rational_separation(report):
    rng = np.random.default_rng(SEED)
    combos = [(n, d) for n in (1, 2, 3, 4) for d in (1, 2)]
    grids = {c: dm.factorial_grid(*c) for c in combos}
    fails = tested = 0
    tightest = np.inf
    for i in range(200):
        n, d = combos[i % len(combos)]
        p = (1.0, 2.0)[(i // len(combos)) % 2]
        g = grids[(n, d)]
        mu = dm.random_rational_measure(rng, g)
        nu = dm.random_rational_measure(rng, g)
        while nu == mu:
            nu = dm.random_rational_measure(rng, g)
        w, bound = dm.rational_separation(mu, nu, p)
        tested += 1
        fails += w < bound * (1 - 1e-12)
        tightest = min(tightest, w / bound)
    assert report(8, "rational grid separation", fails == 0, 60, f"{fails}/{tested} below bound, min W_p/bound = {tightest:.3f}")


def _trend(model, dist, label):
    D = knn.atom_distance_matrix(model, dist)
    means, ses = [], []
    for n in (100, 400, 1600, 6400):
        # exact conditional risk per training sample: no test-set noise
        mean, se = knn.estimate_risk(model, n, "sqrt", 50, 1000, dist, rng=SEED, D=D, exact=True)
        means.append(mean)
        ses.append(se)
    mono = all(m1 <= m0 + 2 * math.hypot(s0, s1) for m0, m1, s0, s1 in zip(means, means[1:], ses, ses[1:]))
    gap = means[-1] - knn.bayes_risk(model)
    text = f"{label}: risks {', '.join(f'{m:.4f}' for m in means)}, final gap {gap:.4f}"
    return mono and abs(gap) <= 0.05, text


def test_ac09_consistency_trend(report):
    ok1, t1 = _trend(*cli.finite_support_model(), "finite-support")
    ok2, t2 = _trend(*cli.gaussian_model(), "gaussian")
    assert report(9, "risk trend toward Bayes", ok1 and ok2, 600, f"{t1}; {t2}")


def _discretize(w, R=12, cells=256):
    y = wv.render(w, R)
    F = wv.cumulative(y, R)
    idx = np.arange(cells + 1) * (2**R // cells)
    mass = np.diff(F[idx])
    return DiscreteMeasure.from_atoms(((np.arange(cells) + 0.5) / cells)[:, None], mass / mass.sum())


def test_ac10_wavelet(report):
    ratios = [wv.psi_l1(3, j + 1, 2, 14) / wv.psi_l1(3, j, 2, 14) for j in range(3, 7)]
    ratio_ok = all(abs(r / 2**-0.5 - 1) <= 0.02 for r in ratios)
    rng = substream(SEED, "ac10")
    ordered = True
    worst = 0.0
    for _ in range(50):
        f, g = wv.random_density(rng), wv.random_density(rng)
        da, per = wv.coefficient_terms(f, g)
        ordered &= da + max(per) <= da + sum(per)
        ref = wp_discrete(_discretize(f), _discretize(g), 1).distance
        worst = max(worst, abs(wv.w1_density(f, g, 12) - ref))
    ok = ratio_ok and ordered and worst <= 1e-3
    detail = f"level ratios {', '.join(f'{r:.5f}' for r in ratios)}; denominators ordered={ordered}; max |W1 - OT| = {worst:.2e}"
    assert report(10, "wavelet densities", ok, 120, detail)


def test_ac11_weak_cover(report):
    rng = np.random.default_rng(SEED)
    uncovered = worst = 0
    for _ in range(100):
        k = int(rng.integers(10, 80))
        f = dm.euclidean_family(rng.random((k, 2)), rng.choice([2.0**-e for e in range(2, 6)], k), 0.5)
        idx = dm.weak_cover(f)
        uncovered += not dm.covers_all_centers(f, idx)
        sub = f.subfamily(idx)
        probes = list(f.centers) + dm.intersection_probes(sub.centers, sub.radii)
        worst = max(worst, dm.multiplicity(sub, probes))
    ok = uncovered == 0 and worst <= 8
    assert report(11, "greedy weak cover", ok, 10, f"{uncovered} families not covered, max multiplicity {worst}")


def test_ac12_determinism(report, monkeypatch):
    settings = {
        "counterexample": {"n": "64,1024", "trials": "8"},
        "finite-support": {"n": "100,400", "trials": "8"},
        "gaussian": {"n": "100,400", "trials": "8"},
        "wavelet": {"n": "100,400", "trials": "8"},
        "rational-grid": {"trials": "20"},
        "geometry": {"trials": "20"},
        "dimension": {"trials": "10", "search_trials": "500"},
    }
    same = []
    for suite, extra in settings.items():
        cfg = cli.build_config({"suite": suite, "seed": "7", **extra})
        outs = []
        for workers in ("1", "3", "8"):
            monkeypatch.setenv("WASSKNN_THREADS", workers)
            outs.append(cli.run(cfg).encode())
        same.append(len(set(outs)) == 1)
    detail = ", ".join(f"{s}={'identical' if ok else 'DIFFERENT'}" for s, ok in zip(settings, same))
    assert report(12, "byte-identical CSV across worker counts", all(same), None, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
