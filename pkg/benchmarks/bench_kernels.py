"""Compare the compiled node-sum kernels with the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``.  Reports best-of-5 wall time
per backend and thread count, the maximum difference between backends, and
whether repeated compiled results are bitwise identical across thread counts.
"""

import argparse
import os
import time

import numpy as np

from quantding import kernels


def best_time(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--nodes", type=int, default=64 * 128)
    p.add_argument("--k", type=int, nargs="+", default=[4, 16, 32])
    p.add_argument("--threads", type=int, nargs="+", default=sorted({1, 2, os.cpu_count() or 1}))
    args = p.parse_args()

    rng = np.random.default_rng(0)
    print(f"backend available: {kernels.BACKEND}")
    print(f"{'N':>4} {'kernel':>14} {'backend':>9} {'threads':>7} {'seconds':>10}")
    for k in args.k:
        N = 2 * k + 1
        V = rng.normal(size=(args.nodes, N)) + 1j * rng.normal(size=(args.nodes, N))
        w = rng.random(args.nodes)
        A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        A = (A + A.conj().T) / 2

        t = best_time(lambda: kernels.py_weighted_gram(V, w))
        print(f"{N:>4} {'weighted_gram':>14} {'python':>9} {'-':>7} {t:>10.5f}")
        t = best_time(lambda: kernels.py_hermitian_diag(V, A))
        print(f"{N:>4} {'hermitian_diag':>14} {'python':>9} {'-':>7} {t:>10.5f}")
        if kernels.BACKEND != "compiled":
            continue
        results = []
        for n in args.threads:
            kernels.set_threads(n)
            t = best_time(lambda: kernels.weighted_gram(V, w))
            results.append(kernels.weighted_gram(V, w))
            print(f"{N:>4} {'weighted_gram':>14} {'compiled':>9} {n:>7} {t:>10.5f}")
            t = best_time(lambda: kernels.hermitian_diag(V, A))
            print(f"{N:>4} {'hermitian_diag':>14} {'compiled':>9} {n:>7} {t:>10.5f}")
        diff = np.max(np.abs(results[0] - kernels.py_weighted_gram(V, w))) / np.max(np.abs(results[0]))
        same = all(np.array_equal(results[0], r) for r in results[1:])
        print(f"     max relative difference vs python: {diff:.2e}; bitwise equal across threads: {same}")


if __name__ == "__main__":
    main()
