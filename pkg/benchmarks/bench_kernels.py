"""Compiled vs numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dfskit import _kernels_py

try:
    from dfskit import _kernels as _compiled
except ImportError:
    _compiled = None


def stack(rng, k, d):
    return rng.standard_normal((k, d, d)) + 1j * rng.standard_normal((k, d, d))


def cases(rng):
    for k, d in [(3, 4), (4, 8), (4, 16), (8, 24)]:
        a, b = stack(rng, k, d), stack(rng, k, d)
        yield f"kron_sum k={k} D={d}", "kron_sum", (a, b)
    for d, bond, n in [(2, 2, 14), (2, 4, 12), (3, 3, 9), (4, 2, 8), (5, 6, 6)]:
        mats = stack(rng, d, bond) / np.sqrt(d * bond)
        yield f"expand_traces d={d} D={bond} n={n}", "expand_traces", (mats, n)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'case':36s} {'numpy [ms]':>11s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for label, fn, argv in cases(rng):
        py = min(timeit.repeat(lambda: getattr(_kernels_py, fn)(*argv), number=1, repeat=args.repeat))
        if _compiled is None:
            print(f"{label:36s} {py * 1e3:11.3f} {'n/a':>14s} {'':>8s}")
            continue
        cy = min(timeit.repeat(lambda: getattr(_compiled, fn)(*argv), number=1, repeat=args.repeat))
        ref = getattr(_kernels_py, fn)(*argv)
        got = getattr(_compiled, fn)(*argv)
        assert np.allclose(ref, got, rtol=1e-10, atol=1e-12), label
        print(f"{label:36s} {py * 1e3:11.3f} {cy * 1e3:14.3f} {py / cy:7.2f}x")


if __name__ == "__main__":
    main()
