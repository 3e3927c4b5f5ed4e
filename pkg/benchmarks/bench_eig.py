"""Benchmark the cyclic Jacobi eigensolver backends against numpy.

Compares the compiled extension (if built), the pure-Python fallback, and
numpy.linalg.eigh on random Hermitian matrices of the small sizes this
package actually uses, and reports per-call timings plus the worst
reconstruction error of each route.

Run with: python benchmarks/bench_eig.py
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cqsw.kernels import BACKEND
from cqsw.kernels.jacobi_py import jacobi_cyclic as jacobi_py

try:
    from cqsw.kernels._jacobi import jacobi_cyclic as jacobi_compiled
except ImportError:
    jacobi_compiled = None

_TOL = 1e-13


def _random_hermitian(rng, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2.0


def _run_jacobi(solver, mats):
    worst = 0.0
    start = time.perf_counter()
    for a in mats:
        n = a.shape[0]
        diag, vec, _, converged = solver(a, 100 * n * n, _TOL)
        assert converged
        err = float(np.max(np.abs((vec * diag) @ vec.conj().T - a)))
        worst = max(worst, err)
    return time.perf_counter() - start, worst


def _run_numpy(mats):
    worst = 0.0
    start = time.perf_counter()
    for a in mats:
        w, v = np.linalg.eigh(a)
        err = float(np.max(np.abs((v * w) @ v.conj().T - a)))
        worst = max(worst, err)
    return time.perf_counter() - start, worst


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=2000,
                        help="matrices per size (default 2000)")
    parser.add_argument("--sizes", type=str, default="2,3,4,6,9",
                        help="comma separated matrix sizes")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = [int(t) for t in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)

    print(f"active backend: {BACKEND}")
    print(f"{'size':>4} {'route':>10} {'us/call':>10} {'max |VDV*-A|':>14}")
    for n in sizes:
        mats = [_random_hermitian(rng, n) for _ in range(args.reps)]
        routes = [("python", lambda m: _run_jacobi(jacobi_py, m))]
        if jacobi_compiled is not None:
            routes.append(("compiled",
                           lambda m: _run_jacobi(jacobi_compiled, m)))
        routes.append(("numpy", _run_numpy))
        for name, run in routes:
            elapsed, worst = run(mats)
            per_call = 1e6 * elapsed / args.reps
            print(f"{n:>4} {name:>10} {per_call:>10.2f} {worst:>14.2e}")


if __name__ == "__main__":
    main()
