"""Compare the numba and numpy backends of the hot kernels.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --points 200000 --repeat 5
"""
import argparse
import time

import numpy as np

from planar_kernels import _kernels
from planar_kernels.geometry import annulus
from planar_kernels.green import GreenEvaluator


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n, rng):
    z = 0.5 + 0.5 * rng.random(n)
    z = z * np.exp(2j * np.pi * rng.random(n))
    zeta = z * (0.7 + 0.1j)
    ladder = 0.25 ** np.arange(1, 30)
    centers = 1.3 * np.exp(2j * np.pi * np.arange(256) / 256)
    strengths = rng.standard_normal(256)
    return {
        "log_product_sum": lambda: _kernels.log_product_sum(zeta, ladder),
        "log_product_dsum": lambda: _kernels.log_product_dsum(zeta, ladder),
        "charge_potential": lambda: _kernels.charge_potential(z, centers, strengths),
        "charge_field": lambda: _kernels.charge_field(z, centers, strengths),
        "green_annulus": lambda: GreenEvaluator(annulus(0.5)).green(z, 0.7),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _kernels.NUMBA_AVAILABLE:
        print("numba not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    bench = cases(args.points, rng)
    times = {}
    for backend in ("numpy", "numba"):
        _kernels.set_backend(backend)
        for name, fn in bench.items():
            fn()  # jit warm-up
            times[backend, name] = best_time(fn, args.repeat)
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name in bench:
        a, b = times["numpy", name], times["numba", name]
        print(f"{name:<18}{1e3 * a:12.2f}{1e3 * b:12.2f}{a / b:10.1f}")


if __name__ == "__main__":
    main()
