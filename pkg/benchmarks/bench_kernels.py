"""Compare the numba and pure-numpy Monte Carlo kernels.

    python3 benchmarks/bench_kernels.py [--samples 100000] [--reps 5]

Shapes follow the 7-vertex, 20-step experiment: the structured kernel sees
(N, T, n) normals, the dense kernel (N, n*T).
"""
import argparse
import time

import numpy as np

from graphdp import _kernels


def best_of(fn, reps):
    fn()  # warm-up, also triggers JIT compilation
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--n", type=int, default=7)
    ap.add_argument("--T", type=int, default=20)
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    N, n, T = args.samples, args.n, args.T
    d = n * T
    z3 = rng.standard_normal((N, T, n))
    a3 = np.eye(n) + 0.01 * rng.standard_normal((n, n))
    b3 = 0.1 * rng.standard_normal((T, n))
    z2 = z3.reshape(N, d)
    a2 = np.eye(d) + 0.01 * rng.standard_normal((d, d))
    b2 = 0.1 * rng.standard_normal(d)
    losses = rng.standard_normal(N)
    grid = np.linspace(0.0, 1.0, 10)

    cases = [
        ("kron_losses", lambda k: k(z3, a3, b3, 0.0), _kernels.kron_losses_numpy, _kernels.kron_losses_numba),
        ("dense_losses", lambda k: k(z2, a2, b2, 0.0), _kernels.dense_losses_numpy, _kernels.dense_losses_numba),
        ("tail_counts", lambda k: k(losses, grid, True), _kernels.tail_counts_numpy, _kernels.tail_counts_numba),
    ]
    print(f"N={N} n={n} T={T}; active backend: {_kernels.BACKEND}")
    print(f"{'kernel':<14}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  max |diff|")
    for name, call, k_np, k_nb in cases:
        t_np = best_of(lambda: call(k_np), args.reps)
        t_nb = best_of(lambda: call(k_nb), args.reps)
        diff = float(np.max(np.abs(np.asarray(call(k_np), float) - np.asarray(call(k_nb), float))))
        print(f"{name:<14}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.2f}  {diff:.1e}")


if __name__ == "__main__":
    main()
