"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_backends.py [--repeat 5]

The first numba call of each kernel includes compilation (or cache loading);
it is reported separately and excluded from the steady-state timings.
"""
import argparse
import time

import numpy as np

from unruh_fluid import _backend, limits
from unruh_fluid.dispersion import R0_MAX, CondensateParams, f_squared
from unruh_fluid.response import DetectorOrbit, transition_rate
from unruh_fluid.specfun import bessel_j


def rate_sweep():
    p = CondensateParams(R0_MAX, 3.0)
    for v in np.linspace(0.2, 0.95, 16):
        transition_rate(p, DetectorOrbit(30.0, 2.0, v))


def bessel_grid():
    m = np.repeat(np.arange(0, 400), 250)
    x = np.tile(np.linspace(0.1, 600.0, 250), 400)
    bessel_j(m, x)


def p0_sweep():
    for e in np.linspace(-3.0, 3.0, 40):
        limits.p0_rate(DetectorOrbit(1.0, e, 0.8), rel_tol=1e-12)


def dispersion_table():
    f_squared(CondensateParams(1.0, 2.0), np.linspace(0.0, 50.0, 200_000))


CASES = {
    "rate sweep (16 orbits, roton medium)": rate_sweep,
    "J_m grid (1e5 points)": bessel_grid,
    "P0 sweep (40 gaps)": p0_sweep,
    "f^2 table (2e5 points)": dispersion_table,
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'case':<40} {'first numba':>12} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, fn in CASES.items():
        _backend.USE_NUMBA = True
        t0 = time.perf_counter()
        fn()
        first = time.perf_counter() - t0
        fast = best_of(fn, args.repeat)
        _backend.USE_NUMBA = False
        slow = best_of(fn, args.repeat)
        print(f"{name:<40} {first:11.3f}s {fast:9.4f}s {slow:9.4f}s {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
