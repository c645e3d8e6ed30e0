"""Per-entity miss-curve measurement.

Each entity is replayed alone in a partition of each candidate size; the
miss counts, averaged over the run seeds, form the curve the optimizer
consumes. Base set 0 is used throughout: translation depends only on the
partition size, so the base cannot change the counts.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .core.config import CacheConfig, EntityId, entity_sort_key, is_pow2
from .core.kernel import replay_trace
from .core.partition import Partition
from .errors import ConfigError
from .workload.generate import entity_stream
from .workload.graph import TaskGraph


@dataclass(frozen=True)
class SizeLadder:
    """Strictly increasing power-of-two candidate partition sizes."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes:
            raise ValueError("ladder must not be empty")
        for size in self.sizes:
            if not is_pow2(size):
                raise ValueError(f"ladder size {size} is not a power of two")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("ladder sizes must be strictly increasing")

    def __iter__(self):
        return iter(self.sizes)

    def __len__(self) -> int:
        return len(self.sizes)

    def __contains__(self, size: int) -> bool:
        return size in self.sizes

    @property
    def min_size(self) -> int:
        return self.sizes[0]

    @property
    def max_size(self) -> int:
        return self.sizes[-1]

    def validate_against(self, config: CacheConfig) -> None:
        if self.max_size > config.num_sets:
            raise ConfigError(
                f"ladder size {self.max_size} exceeds the {config.num_sets}-set cache"
            )


@dataclass(frozen=True)
class CostModel:
    """Abstract per-access costs for the execution-time proxy."""

    hit_cost: float = 1.0
    miss_cost: float = 50.0

    def __post_init__(self):
        if self.hit_cost < 0 or self.miss_cost < 0:
            raise ValueError("costs must be >= 0")

    @classmethod
    def miss_count(cls) -> "CostModel":
        """Degenerate model under which the proxy equals the miss count."""
        return cls(hit_cost=0.0, miss_cost=1.0)


@dataclass
class CurveSample:
    run_seed: int
    accesses: int
    misses: int

    @property
    def hits(self) -> int:
        return self.accesses - self.misses


@dataclass
class MissCurve:
    """Solo miss counts of one entity over the size ladder."""

    entity: EntityId
    sizes: tuple[int, ...]
    samples: dict[int, list[CurveSample]] = field(default_factory=dict)

    def mean(self, size: int) -> float:
        runs = self.samples[size]
        return sum(s.misses for s in runs) / len(runs)

    def value(self, size: int, run_seed: int) -> int:
        for sample in self.samples[size]:
            if sample.run_seed == run_seed:
                return sample.misses
        raise KeyError(f"{self.entity}: no sample for size {size}, seed {run_seed}")

    def mean_cost(self, size: int, cost_model: CostModel) -> float:
        runs = self.samples[size]
        total = sum(
            s.hits * cost_model.hit_cost + s.misses * cost_model.miss_cost for s in runs
        )
        return total / len(runs)

    def covers(self, ladder: SizeLadder) -> bool:
        return all(size in self.samples for size in ladder)


def replay_solo(
    addrs: np.ndarray,
    entity: EntityId,
    size_sets: int,
    config: CacheConfig,
    backend: str | None = None,
) -> tuple[int, int]:
    """(hits, misses) of one entity running alone in a size_sets partition."""
    if size_sets > config.num_sets:
        raise ConfigError(
            f"partition size {size_sets} exceeds the {config.num_sets}-set cache"
        )
    partitions = {entity: Partition(0, size_sets)}
    idx = np.zeros(len(addrs), dtype=np.int32)
    result = replay_trace(config, (entity,), partitions, addrs, idx, backend=backend)
    hits, cold, repl = result.counters(entity)
    return hits, cold + repl


def measure_miss_curve(
    stream_for_seed: Callable[[int], np.ndarray],
    entity: EntityId,
    ladder: SizeLadder,
    config: CacheConfig,
    run_seeds: Iterable[int] = (0,),
    backend: str | None = None,
) -> MissCurve:
    """Sweep the ladder, replaying the entity's solo stream per seed."""
    ladder.validate_against(config)
    seeds = list(run_seeds)
    if not seeds:
        raise ValueError("at least one run seed is required")
    streams = {seed: np.asarray(stream_for_seed(seed), dtype=np.uint64) for seed in seeds}
    for seed, addrs in streams.items():
        if len(addrs) == 0:
            raise ValueError(f"{entity}: empty trace for seed {seed}")
    curve = MissCurve(entity, tuple(ladder))
    for size in ladder:
        runs = []
        for seed in seeds:
            addrs = streams[seed]
            _hits, misses = replay_solo(addrs, entity, size, config, backend)
            runs.append(CurveSample(seed, len(addrs), misses))
        curve.samples[size] = runs
    return curve


def measure_execution_proxy(
    addrs: np.ndarray,
    size_sets: int,
    config: CacheConfig,
    cost_model: CostModel,
    backend: str | None = None,
) -> float:
    """Execution-time proxy e = hits * hit_cost + misses * miss_cost."""
    entity = EntityId.task(0)
    hits, misses = replay_solo(
        np.asarray(addrs, dtype=np.uint64), entity, size_sets, config, backend
    )
    return hits * cost_model.hit_cost + misses * cost_model.miss_cost


def _profile_one(args):
    graph, entity, ladder, config, seeds, periods = args
    curve = measure_miss_curve(
        lambda seed: entity_stream(graph, entity, periods, seed),
        entity,
        ladder,
        config,
        seeds,
    )
    return entity, curve


def profile_graph(
    graph: TaskGraph,
    ladder: SizeLadder,
    config: CacheConfig,
    run_seeds: Iterable[int] = (0,),
    *,
    periods: int = 1,
    entities: Iterable[EntityId] | None = None,
    jobs: int = 1,
) -> dict[EntityId, MissCurve]:
    """Measure curves for every (or the given) entities of the graph.

    Entities with no traffic are skipped. Cells are independent
    simulations; with jobs > 1 they run in a process pool and are reduced
    in deterministic entity order.
    """
    seeds = list(run_seeds)
    targets = list(entities) if entities is not None else list(graph.entities())
    targets.sort(key=entity_sort_key)
    work = []
    for entity in targets:
        if len(entity_stream(graph, entity, periods, seeds[0])) == 0:
            continue
        work.append((graph, entity, ladder, config, seeds, periods))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_profile_one, work))
    else:
        results = [_profile_one(item) for item in work]
    return {entity: curve for entity, curve in results}


def build_execution_table(
    curves: dict[EntityId, MissCurve], cost_model: CostModel
) -> dict[tuple[EntityId, int], float]:
    """Mean execution proxy per (entity, size), from the profiled runs."""
    table: dict[tuple[EntityId, int], float] = {}
    for entity, curve in curves.items():
        for size in curve.sizes:
            table[(entity, size)] = curve.mean_cost(size, cost_model)
    return table


# -- CSV interchange -----------------------------------------------------

SAMPLES_CSV = "curves.csv"
MEANS_CSV = "curves_mean.csv"


def write_curves(curves: dict[EntityId, MissCurve], outdir) -> tuple[Path, Path]:
    """Emit the per-sample and aggregated curve CSVs, plus one per-entity
    file (K rows, one per ladder size)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(curves.values(), key=lambda c: entity_sort_key(c.entity))
    samples_path = outdir / SAMPLES_CSV
    with open(samples_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity", "sigma", "run_seed", "misses"])
        for curve in ordered:
            for size in curve.sizes:
                for sample in curve.samples[size]:
                    writer.writerow([str(curve.entity), size, sample.run_seed, sample.misses])
    means_path = outdir / MEANS_CSV
    with open(means_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity", "sigma", "mean_misses"])
        for curve in ordered:
            for size in curve.sizes:
                writer.writerow([str(curve.entity), size, f"{curve.mean(size):.6f}"])
    for curve in ordered:
        entity = curve.entity
        path = outdir / f"curve_{entity.kind}_{entity.index}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["entity", "sigma", "mean_misses"])
            for size in curve.sizes:
                writer.writerow([str(entity), size, f"{curve.mean(size):.6f}"])
    return samples_path, means_path


def read_curves(path) -> dict[EntityId, MissCurve]:
    """Rebuild curves from the per-sample CSV (file or its directory).

    Access counts are not stored in the CSV; samples read back carry
    accesses = -1 and only miss-based queries are valid on them.
    """
    path = Path(path)
    if path.is_dir():
        path = path / SAMPLES_CSV
    curves: dict[EntityId, MissCurve] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            entity = EntityId.parse(row["entity"])
            size = int(row["sigma"])
            sample = CurveSample(int(row["run_seed"]), -1, int(row["misses"]))
            curve = curves.setdefault(entity, MissCurve(entity, ()))
            curve.samples.setdefault(size, []).append(sample)
    for curve in curves.values():
        curve.sizes = tuple(sorted(curve.samples))
    return curves
