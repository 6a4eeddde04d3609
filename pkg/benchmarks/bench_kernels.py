"""Time the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--n 200000]
"""
import argparse
import time

import numpy as np

from phlab.core import AngleSpec
from phlab.kernels import get_backend


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(n):
    alphas = np.array([AngleSpec.golden().raw], dtype=np.uint64)
    torus = np.array([123456789, 987654321, 5], dtype=np.uint64)
    rng = np.random.default_rng(0)
    z0 = rng.random(n // 10)
    T = rng.integers(0, 1 << 64, size=(n, 3), dtype=np.uint64)
    Z = rng.random(n)
    F = np.array([(m, m, k) for m in (-1, 0, 1) for k in (-1, 0, 1)], dtype=np.int64)
    J = np.ones(len(F), dtype=np.int64)
    return {
        "orbit (torus only)": lambda K: K.orbit_chunk((2, 1, 1, 1), alphas, None, torus, 0.0, n, 1),
        "orbit (with center)": lambda K: K.orbit_chunk((2, 1, 1, 1), alphas, (3, 0.5, 0.0), torus,
                                                      0.1, n, 1),
        "classify_z": lambda K: K.classify_z(z0, 3, 0.5, 0.0, 10**5, 1e-9, 1e-9),
        "weyl_chunk (9 freqs)": lambda K: K.weyl_chunk(T, Z, F, J),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=200_000)
    args = ap.parse_args()
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        cy = None
        print("compiled extension not built; timing the python backend only")
    print(f"{'kernel':24s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, fn in cases(args.n).items():
        tp = best_of(args.repeat, lambda: fn(py))
        if cy is None:
            print(f"{name:24s} {tp:10.4f}")
            continue
        tc = best_of(args.repeat, lambda: fn(cy))
        print(f"{name:24s} {tp:10.4f} {tc:10.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
