#!/usr/bin/env python3
"""Benchmark: compiled window kernel vs the NumPy fallback.

Times the windowed-sum kernel on a representative PMU workload (10
simulated minutes at 960 Hz, 60 fps reporting, order-70 window) and an
end-to-end PMU chain run under each backend.

Usage: python benchmarks/bench_kernels.py [--minutes 10] [--repeats 5]
"""

import argparse
import os
import time

import numpy as np

from measchain import kernels
from measchain.pmu_chain import make_filter, run_pmu_chain


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_kernel(minutes, repeats):
    spec = make_filter(60, 60)
    n = int(minutes * 60 * spec.sampling_freq)
    rng = np.random.default_rng(0)
    y_re = rng.normal(size=n)
    y_im = rng.normal(size=n)
    half = spec.half_order
    stride = spec.samples_per_frame
    centers = np.arange(half + stride, n - half, stride, dtype=np.int64)

    results = {}
    results["numpy"] = best_of(
        lambda: kernels.window_sums_numpy(y_re, y_im, spec.coefficients, centers, half),
        repeats,
    )
    if kernels._HAVE_EXT:
        results["cython"] = best_of(
            lambda: kernels.window_sums_cython(y_re, y_im, spec.coefficients, centers, half),
            repeats,
        )
    return len(centers), results


def bench_chain(minutes, repeats):
    spec = make_filter(60, 60)
    n = int(minutes * 60 * spec.sampling_freq)
    v2 = np.full(n, 1.0)
    i2 = np.full(n, 0.7)

    def run():
        run_pmu_chain(v2, 0.1, i2, -0.3, spec)

    results = {}
    os.environ["MEASCHAIN_FORCE_FALLBACK"] = "1"
    try:
        results["numpy"] = best_of(run, repeats)
    finally:
        del os.environ["MEASCHAIN_FORCE_FALLBACK"]
    if kernels._HAVE_EXT:
        results["cython"] = best_of(run, repeats)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--minutes", type=float, default=10.0)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"extension built: {kernels._HAVE_EXT}")
    print(f"active backend:  {kernels.active_backend()}")
    print()

    n_frames, kernel_times = bench_kernel(args.minutes, args.repeats)
    print(f"window kernel ({args.minutes:g} min at 960 Hz, {n_frames} frames, N=70):")
    for name, elapsed in kernel_times.items():
        print(f"  {name:<8} {elapsed * 1e3:8.2f} ms   "
              f"({n_frames / elapsed / 1e6:6.2f} Mframes/s)")
    if len(kernel_times) == 2:
        print(f"  speedup  {kernel_times['numpy'] / kernel_times['cython']:.2f}x")
    print()

    chain_times = bench_chain(args.minutes, max(2, args.repeats // 2))
    print(f"end-to-end PMU chain ({args.minutes:g} min):")
    for name, elapsed in chain_times.items():
        print(f"  {name:<8} {elapsed * 1e3:8.2f} ms")
    if len(chain_times) == 2:
        print(f"  speedup  {chain_times['numpy'] / chain_times['cython']:.2f}x")


if __name__ == "__main__":
    main()
