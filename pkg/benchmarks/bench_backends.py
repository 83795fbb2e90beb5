"""Throughput comparison of the numba and numpy kernel backends.

Times the three hot paths on a realistic workload (the growth experiment's
shape): digesting elements, building a filter, and querying a binarized
view.  Run directly:

    python benchmarks/bench_backends.py [--elements 200000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from abloom import (CountingFilter, FilterParams, digest_many_u64,
                    element_block, set_backend)


def bench_once(backend: str, n_elements: int, m: int, k: int) -> dict[str, float]:
    set_backend(backend)
    params = FilterParams(m=m, k=k, seed=11)
    values = element_block(99, 0, n_elements)

    # warm up JIT / allocator on a small slice before timing
    digest_many_u64(values[:1000], params)

    t0 = time.perf_counter()
    digests = digest_many_u64(values, params)
    t_digest = time.perf_counter() - t0

    filt = CountingFilter(params)
    t0 = time.perf_counter()
    filt.insert_many(digests)
    t_insert = time.perf_counter() - t0

    view = filt.binarize(0, k)
    view.query_many(digests[:1000])
    t0 = time.perf_counter()
    view.query_many(digests)
    t_query = time.perf_counter() - t0

    return {"digest": n_elements / t_digest,
            "insert": n_elements / t_insert,
            "query": n_elements / t_query}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--elements", type=int, default=200000)
    parser.add_argument("--m", type=int, default=10000)
    parser.add_argument("--k", type=int, default=100)
    args = parser.parse_args()

    print(f"workload: {args.elements} elements, m={args.m}, k={args.k}")
    print(f"{'backend':<8} {'digest/s':>12} {'insert/s':>12} {'query/s':>12}")
    results = {}
    for backend in ("numpy", "numba"):
        try:
            rates = bench_once(backend, args.elements, args.m, args.k)
        except ImportError as exc:
            print(f"{backend:<8} unavailable: {exc}")
            continue
        results[backend] = rates
        print(f"{backend:<8} {rates['digest']:>12.0f} {rates['insert']:>12.0f} "
              f"{rates['query']:>12.0f}")
    if len(results) == 2:
        for op in ("digest", "insert", "query"):
            ratio = results["numba"][op] / results["numpy"][op]
            print(f"numba/numpy {op}: {ratio:.1f}x")


if __name__ == "__main__":
    main()
