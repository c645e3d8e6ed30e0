#!/usr/bin/env python3
"""Benchmark the compiled replay kernel against the pure-Python fallback.

Replays identical random traces through every available backend and
prints throughput plus the speedup of the compiled kernel. Run from the
repository root:

    python benchmarks/bench_kernels.py [--accesses N] [--repeats R]
"""
import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from cachepart.core import CacheConfig, EntityId, Partition, available_backends, replay_trace

CASES = [
    ("shared 64x4", CacheConfig(64, 64, 4), None),
    ("shared 512x8", CacheConfig(64, 512, 8), None),
    (
        "partitioned 256x4",
        CacheConfig(64, 256, 4),
        {
            EntityId.task(0): Partition(0, 64),
            EntityId.task(1): Partition(64, 64),
            EntityId.task(2): Partition(128, 128),
        },
    ),
]


def make_trace(config, n, rng):
    line_space = config.num_sets * config.associativity * 4
    addrs = np.array(
        [rng.randrange(line_space) * config.line_size_bytes for _ in range(n)],
        dtype=np.uint64,
    )
    eidx = np.array([rng.randrange(3) for _ in range(n)], dtype=np.int32)
    return addrs, eidx


def bench(backend, config, partitions, addrs, eidx, repeats):
    entities = tuple(EntityId.task(i) for i in range(3))
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = replay_trace(config, entities, partitions, addrs, eidx, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--accesses", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{args.accesses:,} accesses per case, best of {args.repeats}\n")
    header = f"{'case':<20}" + "".join(f"{b:>17}" for b in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rng = random.Random(7)
    for name, config, partitions in CASES:
        addrs, eidx = make_trace(config, args.accesses, rng)
        rates = {}
        counts = {}
        for backend in backends:
            elapsed, result = bench(backend, config, partitions, addrs, eidx, args.repeats)
            rates[backend] = args.accesses / elapsed
            counts[backend] = result.counts.tolist()
        first = counts[backends[0]]
        for backend in backends[1:]:
            if counts[backend] != first:
                raise SystemExit(f"backend disagreement on {name}: {counts}")
        row = f"{name:<20}"
        for backend in backends:
            row += f"{rates[backend] / 1e6:>13.2f} M/s"
        if "compiled" in rates and "pure" in rates:
            row += f"{rates['compiled'] / rates['pure']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
