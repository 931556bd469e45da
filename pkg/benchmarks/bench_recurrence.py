"""Benchmark the compiled recurrence kernel against the pure scipy fallback.

Usage: python benchmarks/bench_recurrence.py [--subdivisions N] [--orders 2,4,8]
"""

import argparse
import time

import numpy as np

from specmesh import (
    estimate_lambda_max,
    generate_icosphere,
    lb_operator,
    normalize,
)
from specmesh.kernels import HAVE_EXT, _fallback, backend_name, recurrence_basis
from specmesh.poly import get_family


def run_ext(matrix, X, K, ak, bk, ck):
    return recurrence_basis(matrix, X, K, ak, bk, ck)


def run_fallback(matrix, X, K, ak, bk, ck):
    out = np.zeros((K,) + X.shape)
    out[0] = X
    _fallback.recurrence_basis(matrix, X, ak, bk, ck, out)
    return out


def best_of(fn, repeats, *args):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--subdivisions", type=int, default=4)
    parser.add_argument("--orders", default="2,4,8,16")
    parser.add_argument("--columns", type=int, default=32)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--family", default="chebyshev")
    args = parser.parse_args()

    mesh = generate_icosphere(args.subdivisions, 1.0)
    op = lb_operator(mesh)
    estimate_lambda_max(op)
    opn = normalize(op, args.family)
    fam = get_family(args.family)

    rng = np.random.default_rng(0)
    X = rng.standard_normal((op.n, args.columns))

    print(f"mesh: icosphere sub={args.subdivisions} "
          f"({op.n} vertices, nnz={op.C.nnz}), {args.columns} columns, "
          f"family={args.family}")
    print(f"active backend: {backend_name()}")
    if not HAVE_EXT:
        print("compiled extension unavailable; benchmarking fallback only")
    print(f"{'K':>4} {'fallback (ms)':>14} {'compiled (ms)':>14} {'speedup':>8}")

    for K in (int(k) for k in args.orders.split(",")):
        ak, bk, ck = fam.coeff_arrays(K)
        t_fb = best_of(run_fallback, args.repeats, opn.matrix, X, K, ak, bk, ck)
        if HAVE_EXT:
            t_ext = best_of(run_ext, args.repeats, opn.matrix, X, K, ak, bk, ck)
            a = run_ext(opn.matrix, X, K, ak, bk, ck)
            b = run_fallback(opn.matrix, X, K, ak, bk, ck)
            err = np.abs(a - b).max()
            assert err < 1e-12 * max(1.0, np.abs(b).max()), err
            print(f"{K:>4} {t_fb * 1e3:>14.2f} {t_ext * 1e3:>14.2f} "
                  f"{t_fb / t_ext:>7.2f}x")
        else:
            print(f"{K:>4} {t_fb * 1e3:>14.2f} {'-':>14} {'-':>8}")


if __name__ == "__main__":
    main()
