"""Benchmark the numba kernels against the pure-numpy reference backend.

Run: python benchmarks/bench_kernels.py [--particles N] [--steps S]
Both backends produce bit-identical outputs (asserted here); the point of
this script is the speed comparison on representative workloads.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from driftsearch.kernels import _reference

try:
    from driftsearch.kernels import _jit
except ImportError:  # pragma: no cover
    _jit = None


def timeit(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_advance(n, steps, rng):
    def field(nodes, times):
        return (
            rng.uniform(-80_000, 80_000, nodes),
            rng.uniform(-80_000, 80_000, nodes),
            np.linspace(-100, 60.0 * steps + 100, times),
            rng.normal(0, 1, (times, nodes)),
            rng.normal(0, 1, (times, nodes)),
        )

    cur = field(81, 8)
    wind = field(81, 8)
    x0 = rng.uniform(-40_000, 40_000, n)
    y0 = rng.uniform(-40_000, 40_000, n)
    times = np.linspace(0, 60.0 * steps, steps + 1)
    noise = [rng.normal(0, 0.2, (n, steps)) for _ in range(6)]
    signs = np.where(rng.random((n, steps)) < 0.5, 1.0, -1.0)
    args = (x0, y0, times, *cur, *wind, 1.17, 10.2, 0.04, 3.9, *noise, signs)
    return "advance_paths", args, lambda impl: impl.advance_paths


def bench_cpa(n, steps, rng):
    px = np.cumsum(rng.normal(0, 400, (n, steps + 1)), axis=1)
    py = np.cumsum(rng.normal(0, 400, (n, steps + 1)), axis=1)
    times = np.linspace(0, 60.0 * steps, steps + 1)
    legs = 40
    ta = rng.uniform(0, 0.6 * 60 * steps, legs)
    tb = ta + rng.uniform(20, 120, legs)
    ax, ay, bx, by = (rng.uniform(-30_000, 30_000, legs) for _ in range(4))
    k0 = np.maximum(0, np.searchsorted(times, ta, side="right") - 1).astype(np.int64)
    k1 = np.minimum(len(times) - 2, np.searchsorted(times, tb, side="left") - 1).astype(np.int64)
    args = (px, py, times, ax, ay, bx, by, ta, tb, k0, k1)
    return "cpa_ranges", args, lambda impl: impl.cpa_ranges


def bench_polyline(n, steps, rng):
    px = rng.uniform(-50_000, 50_000, n * 4)
    py = rng.uniform(-50_000, 50_000, n * 4)
    segs = 60
    args = (px, py, *(rng.uniform(-40_000, 40_000, segs) for _ in range(4)))
    return "min_polyline_distance", args, lambda impl: impl.min_polyline_distance


def bench_bins(n, steps, rng):
    flat = rng.integers(0, 10_000, n * 20)
    w = rng.random(n * 20)
    args = (flat, w, 10_000)
    return "accumulate_bins", args, lambda impl: impl.accumulate_bins


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--particles", type=int, default=4000)
    parser.add_argument("--steps", type=int, default=144)
    opts = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"workload: {opts.particles} particles, {opts.steps} steps")
    print(f"{'kernel':<24}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    for bench in (bench_advance, bench_cpa, bench_polyline, bench_bins):
        name, args, pick = bench(opts.particles, opts.steps, rng)
        t_np, out_np = timeit(pick(_reference), *args)
        if _jit is None:
            print(f"{name:<24}{t_np:>12.4f}{'n/a':>12}{'':>10}")
            continue
        pick(_jit)(*args)  # compile outside the timer
        t_nb, out_nb = timeit(pick(_jit), *args)
        a = out_np[0] if isinstance(out_np, tuple) else out_np
        b = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        assert np.array_equal(a, b), f"{name}: backends disagree"
        print(f"{name:<24}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
