"""Compiled vs numpy SGD / SMD epoch kernels.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from transferlin import _kernels, _pykernels

try:
    from transferlin import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, d, repeat):
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.standard_normal((n, d)))
    y = rng.standard_normal(n)
    order = rng.permutation(n).astype(np.int64)
    step = 0.5 / np.max(np.einsum("ij,ij->i", X, X))
    rows = []
    for label, mod in (("python", _pykernels), ("cython", _ckernels)):
        if mod is None:
            continue
        w = np.zeros(d)
        t_sgd = _time(lambda: mod.sgd_epoch(X, y, w, order, step), repeat)
        z = np.zeros(d)
        w = np.zeros(d)
        t_smd = _time(lambda: mod.smd_epoch(X, y, z, w, order, step, _kernels.HYPERBOLIC, 1.0), repeat)
        rows.append((label, t_sgd, t_smd))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"default backend: {_kernels.BACKEND}")
    print(f"{'n':>5} {'d':>5} {'backend':>8} {'sgd epoch [ms]':>15} {'smd epoch [ms]':>15}")
    for n, d in ((100, 200), (400, 800), (1000, 2000)):
        rows = bench(n, d, args.repeat)
        for label, a, b in rows:
            print(f"{n:5d} {d:5d} {label:>8} {1e3 * a:15.3f} {1e3 * b:15.3f}")
        if len(rows) == 2:
            print(f"{'':11} speedup  {rows[0][1] / rows[1][1]:15.1f} {rows[0][2] / rows[1][2]:15.1f}")


if __name__ == "__main__":
    main()
