"""Timing comparison of the compiled and reference stepping kernels.

Both kernels run the same direct-solve IMEX step; the reference one pays a
Python-level loop for the Thomas sweep, which is the cost this benchmark
quantifies.  Outputs one row per grid size with wall times, the speedup,
and the worst discrepancy between the two final states (roundoff scale).

Usage:
    python benchmarks/bench_kernels.py [--sizes 501,2001,8001] [--steps 400]
"""

import argparse
import sys
from time import perf_counter

import numpy as np

from frontlab import kernels
from frontlab.kernels import reference


def _setup(n):
    dx = 40.0 / (n - 1)
    x = -10.0 + dx * np.arange(n)
    u0 = np.minimum(np.exp(-x / np.sqrt(2.0)), 1.0)
    a = np.ascontiguousarray(1.0 + 0.05 * np.sin(x[1:-1]))
    w = np.full(n - 2, 1.0 / dx**2)
    dt = min(16.0 * dx**2, 0.5)
    return u0, a, w, dt


def _time_loop(loop, u0, a, w, dt, n_steps):
    u = np.ascontiguousarray(u0.copy())
    bl = np.full(n_steps + 1, u[0])
    br = np.full(n_steps + 1, u[-1])
    out = np.empty((2, len(u)))
    t0 = perf_counter()
    loop(u, a, reference.KIND_CUBIC, 1.0, 1.0, dt, w, w.copy(), bl, br,
         n_steps, n_steps, out)
    return perf_counter() - t0, u


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="501,2001,8001",
                    help="comma-separated grid sizes")
    ap.add_argument("--steps", type=int, default=400,
                    help="time steps per measurement")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    if not kernels.HAVE_COMPILED:
        print("compiled kernel not built; timing the reference kernel alone")
    print(f"{'nodes':>7} {'steps':>6} {'compiled':>10} {'reference':>10} "
          f"{'speedup':>8} {'max|diff|':>10}")
    for n in sizes:
        u0, a, w, dt = _setup(n)
        t_ref, u_ref = _time_loop(reference.imex_loop, u0, a, w, dt, args.steps)
        if kernels.HAVE_COMPILED:
            from frontlab.kernels import _imex
            t_cmp, u_cmp = _time_loop(_imex.imex_loop, u0, a, w, dt, args.steps)
            diff = float(np.max(np.abs(u_ref - u_cmp)))
            print(f"{n:>7} {args.steps:>6} {t_cmp:>9.3f}s {t_ref:>9.3f}s "
                  f"{t_ref / t_cmp:>7.1f}x {diff:>10.2e}")
        else:
            print(f"{n:>7} {args.steps:>6} {'-':>10} {t_ref:>9.3f}s "
                  f"{'-':>8} {'-':>10}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
