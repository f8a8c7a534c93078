"""Compiled vs numpy stance kernel: throughput and agreement.

    python benchmarks/bench_stance.py --n 20000 --repeat 3
"""

import argparse
import time

import numpy as np

from metastable import kernels
from metastable.systems import HopperParams


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000, help="stances per batch")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = HopperParams()
    rng = np.random.default_rng(args.seed)
    # touchdown velocities across the analysis grid plus unit-variance noise
    y = rng.uniform(p.lo, p.hi, args.n)
    v0 = -np.sqrt(2 * p.gravity * (y - p.rest_length)) + rng.standard_normal(args.n) * np.sqrt(0.05)
    v0 = np.minimum(v0, 0.0)

    results = {}
    for backend in ("numpy", "cython"):
        try:
            fn = kernels.get_stance_batch(backend)
        except ImportError:
            print(f"{backend:>7}: not built")
            continue
        t, out = best_of(lambda: fn(*p.kernel_args(), v0), args.repeat)
        results[backend] = out
        print(f"{backend:>7}: {t:8.3f} s  {1e6 * t / args.n:8.2f} us/stance")

    if len(results) == 2:
        (va, sa), (vb, sb) = results["numpy"], results["cython"]
        same = np.array_equal(sa, sb) and np.array_equal(va, vb, equal_nan=True)
        diff = np.nanmax(np.abs(va - vb)) if va.size else 0.0
        print(f"bitwise identical: {same}  max |dv| = {diff:.3g}")


if __name__ == "__main__":
    main()
