#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py [--repeats 200]
The active default backend follows CHARTREC_NUMBA (1=numba when available).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from chartrec._kernels import backend_name, numba_kernels, numpy_kernels


def timeit(fn, *args, repeats: int) -> float:
    fn(*args)  # warmup / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats * 1e6  # microseconds


def bench_gru(kernels, repeats, batch=64, hidden=192):
    rng = np.random.default_rng(0)
    gi = rng.standard_normal((batch, 3 * hidden)).astype(np.float32)
    gh = rng.standard_normal((batch, 3 * hidden)).astype(np.float32)
    h = rng.standard_normal((batch, hidden)).astype(np.float32)
    fwd = timeit(kernels.gru_cell_fwd, gi, gh, h, repeats=repeats)
    _, r, u, n = kernels.gru_cell_fwd(gi, gh, h)
    d = rng.standard_normal((batch, hidden)).astype(np.float32)
    bwd = timeit(kernels.gru_cell_bwd, d, r, u, n, h, gh[:, 2 * hidden:], repeats=repeats)
    return {"gru_fwd": fwd, "gru_bwd": bwd}


def bench_adam(kernels, repeats, size=2_000_000):
    rng = np.random.default_rng(1)
    p = rng.standard_normal(size).astype(np.float32)
    g = rng.standard_normal(size).astype(np.float32)
    m = np.zeros(size, dtype=np.float32)
    v = np.zeros(size, dtype=np.float32)
    t = timeit(
        kernels.adamw_update, p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 0.01, 0.1, 0.001,
        repeats=max(repeats // 10, 3),
    )
    return {"adamw_2M": t}


def bench_stats(kernels, repeats, n=100_000):
    rng = np.random.default_rng(2)
    xs = rng.uniform(1, 1000, size=n)
    xs_sorted = np.sort(xs)
    return {
        "monotonic_conf": timeit(kernels.monotonic_conf, xs, repeats=repeats),
        "progression_conf": timeit(kernels.progression_conf, xs, repeats=repeats),
        "benford": timeit(kernels.benford_deviation, xs, repeats=repeats),
        "gini_sorted": timeit(kernels.gini_sorted, xs_sorted, repeats=repeats),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    backends = [("numpy", numpy_kernels)]
    if numba_kernels is not None:
        backends.append(("numba", numba_kernels))
    print(f"default backend: {backend_name()}")

    results: dict[str, dict[str, float]] = {}
    for name, kernels in backends:
        rows = {}
        rows.update(bench_gru(kernels, args.repeats))
        rows.update(bench_adam(kernels, args.repeats))
        rows.update(bench_stats(kernels, args.repeats))
        results[name] = rows

    kernels_order = list(results["numpy"])
    header = f"{'kernel':<18}" + "".join(f"{n:>14}" for n in results) + (
        f"{'speedup':>10}" if len(results) > 1 else ""
    )
    print(header)
    for k in kernels_order:
        row = f"{k:<18}" + "".join(f"{results[n][k]:>12.1f}us" for n in results)
        if len(results) > 1:
            row += f"{results['numpy'][k] / results['numba'][k]:>9.2f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
