"""Compare the numba and pure-numpy loop kernels.

    python benchmarks/bench_kernels.py [--sizes 4 8 16 32] [--repeat 5]

For each matrix size the best-of-``repeat`` wall time of both paths is
printed together with the speedup and the largest difference between
their outputs (which should be exactly zero). The numba functions are
called once before timing so compilation is excluded.
"""
import argparse
import time

import numpy as np

from liouville_pt import _kernels as k


def best_time(fn, *args, repeat=5, number=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            out = fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best, out


def random_lower(rng, d):
    z = np.tril(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), -1)
    return z + np.diag(1.0 + rng.random(d))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not k.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    z = random_lower(rng, 3)
    k.z0_matrix_numba(z)
    k.pack_lower_numba(z)
    k.unpack_lower_numba(k.pack_lower_numba(z), 3)

    print(f"{'kernel':<12}{'d':>5}{'numba [s]':>14}{'numpy [s]':>14}{'speedup':>10}{'max diff':>12}")
    for d in args.sizes:
        zeta = random_lower(rng, d)
        h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        x = k.pack_lower_numpy(h)
        number = max(1, 2000 // (d * d))
        cases = [
            ("z0_matrix", k.z0_matrix_numba, k.z0_matrix_numpy, (zeta,), 1),
            ("pack", k.pack_lower_numba, k.pack_lower_numpy, (h,), number),
            ("unpack", k.unpack_lower_numba, k.unpack_lower_numpy, (x, d), number),
        ]
        for name, fast, slow, fargs, n in cases:
            t_fast, a = best_time(fast, *fargs, repeat=args.repeat, number=n)
            t_slow, b = best_time(slow, *fargs, repeat=args.repeat, number=n)
            diff = float(np.max(np.abs(a - b)))
            print(f"{name:<12}{d:>5}{t_fast:>14.3e}{t_slow:>14.3e}{t_slow / t_fast:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
