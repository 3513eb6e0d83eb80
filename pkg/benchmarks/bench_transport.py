#!/usr/bin/env python3
"""Benchmark: compiled transport-simplex kernel vs the pure-Python fallback.

Random balanced instances at document-like sizes (square cost matrices,
uniform-ish marginals, Euclidean-scale costs). Both kernels implement the
same pivot rules, so objectives must agree bit for bit; the point of the
comparison is wall time.

The pure-Python side dominates the wall time (the compiled kernel runs
roughly two orders of magnitude faster), so keep sizes modest.

Usage: python benchmarks/bench_transport.py [--sizes 10,20,40] [--repeats 2]
"""

import argparse
import time

import numpy as np

from bidforge.transport_metrics import _simplex_py

try:
    from bidforge.transport_metrics import _simplex_cy
except ImportError:
    _simplex_cy = None


def make_instance(rng, size):
    supply = rng.uniform(0.2, 1.0, size)
    supply /= supply.sum()
    demand = rng.uniform(0.2, 1.0, size)
    demand /= demand.sum()
    points_a = rng.normal(size=(size, 16))
    points_b = rng.normal(size=(size, 16))
    cost = np.linalg.norm(points_a[:, None] - points_b[None, :], axis=2)
    return supply, demand, cost


def time_kernel(kernel, instances, repeats):
    best = float("inf")
    objective = None
    for _ in range(repeats):
        started = time.perf_counter()
        for supply, demand, cost in instances:
            _, objective, _ = kernel.solve_dense(supply, demand, cost)
        best = min(best, time.perf_counter() - started)
    return best, objective


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10,20,40,60")
    parser.add_argument("--repeats", type=int, default=2)
    parser.add_argument("--instances", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _simplex_cy is None:
        print("compiled kernel not built; benchmarking pure Python only\n")
    header = f"{'size':>6} {'python (ms)':>14} {'cython (ms)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(0)
    for size in sizes:
        instances = [make_instance(rng, size) for _ in range(args.instances)]
        t_py, obj_py = time_kernel(_simplex_py, instances, args.repeats)
        row = f"{size:>6} {1000 * t_py / args.instances:>14.3f}"
        if _simplex_cy is not None:
            t_cy, obj_cy = time_kernel(_simplex_cy, instances, args.repeats)
            assert obj_py == obj_cy, "kernels disagree"
            row += f" {1000 * t_cy / args.instances:>14.3f} {t_py / t_cy:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
