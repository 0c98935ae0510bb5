"""
Compare the numba kernels with the pure-Python fallback.

Each backend runs in its own interpreter, since the switch is read at
import time. JIT compile time is excluded by a warm-up call.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from wassknn import _kernels, JIT_ENABLED

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
cases = {}

def timed(name, fn, *args):
    fn(*args)  # warm-up (compiles under numba)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    cases[name] = best

for m in (10, 40, 100):
    a = rng.dirichlet(np.ones(m)); b = rng.dirichlet(np.ones(m)); C = rng.random((m, m))
    timed(f"transport_simplex {m}x{m}", _kernels.transport_simplex, a, b, C, 1e-13, 10**7)

e1 = np.sort(rng.random(2000)); e1[-1] = 1.0
e2 = np.sort(rng.random(2000)); e2[-1] = 1.0
timed("quantile_lp 2000 steps", _kernels.quantile_lp, e1, np.sort(rng.random(2000)), e2, np.sort(rng.random(2000)), 2.0)

D = rng.random((64, 4096)); lab = rng.integers(0, 2, 4096)
timed("knn_predict_rows 64x4096", _kernels.knn_predict_rows, D, lab, 64)

cand = rng.standard_normal((2000, 48, 2))
timed("greedy_disconnected 2000x48", _kernels.greedy_disconnected_sizes, cand)

print(json.dumps({"jit": JIT_ENABLED, "cases": cases}))
"""


def run_backend(disable, repeat):
    env = dict(os.environ, WASSKNN_DISABLE_JIT="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jit = run_backend(False, args.repeat)
    pure = run_backend(True, args.repeat)
    if not jit["jit"]:
        print("numba unavailable: both runs used the fallback", file=sys.stderr)
    print(f"{'kernel':<32} {'numba [ms]':>12} {'python [ms]':>12} {'speedup':>9}")
    for name, t_jit in jit["cases"].items():
        t_py = pure["cases"][name]
        print(f"{name:<32} {1e3 * t_jit:>12.3f} {1e3 * t_py:>12.3f} {t_py / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
