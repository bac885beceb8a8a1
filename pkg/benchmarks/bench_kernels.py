#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 500,1500] [--repeat 3]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from popscope.analytics import kernels


def time_call(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n: int, d: int, repeat: int) -> list[tuple[str, dict[str, float]]]:
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, d))
    Y = rng.normal(size=(n, 2))
    results = []
    for name in kernels.available_backends():
        backend = kernels.get_backend(name)
        D = backend.pairwise_sq_dists(X)
        P, _, _ = backend.perplexity_affinities(D, 30.0, 1e-4, 200)
        P = (P + P.T) / (2.0 * n)
        timings = {
            "pairwise": time_call(lambda: backend.pairwise_sq_dists(X), repeat),
            "affinities": time_call(
                lambda: backend.perplexity_affinities(D, 30.0, 1e-4, 200), repeat),
            "grad_kl": time_call(lambda: backend.tsne_grad_kl(P, Y), repeat),
        }
        results.append((name, timings))
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500,1500")
    parser.add_argument("--dim", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    available = kernels.available_backends()
    print(f"kernel backends: {', '.join(available)}")
    if "cython" not in available:
        print("note: compiled extension not built; benchmarking NumPy only")

    for n in (int(s) for s in args.sizes.split(",")):
        print(f"\nn={n}, d={args.dim} (best of {args.repeat})")
        rows = bench(n, args.dim, args.repeat)
        ops = ["pairwise", "affinities", "grad_kl"]
        header = f"{'backend':<10}" + "".join(f"{op:>14}" for op in ops)
        print(header)
        base: dict[str, float] = {}
        for name, timings in rows:
            line = f"{name:<10}"
            for op in ops:
                line += f"{timings[op] * 1e3:>12.1f}ms"
            print(line)
            if name == "numpy":
                base = timings
        for name, timings in rows:
            if name == "numpy" or not base:
                continue
            line = f"{name + ' vs np':<10}"
            for op in ops:
                line += f"{base[op] / timings[op]:>13.1f}x"
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
