"""End-to-end experiments and the compositionality check.

An experiment schedules the application onto R processors, classifies
every access to its owning entity, and replays the interleaved trace
through the cache in shared or partitioned mode. The compositionality
report compares each task's co-scheduled miss count against its
solo-profiled count at the assigned partition size; with exclusive set
partitions the two are equal by construction, so the headline metric is
exactly zero for every valid configuration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.config import CacheConfig, EntityId, entity_sort_key
from .core.kernel import ReplayResult, replay_trace
from .core.partition import PartitionTable, classify_addresses
from .errors import SimulatorError, TraceFormatError
from .optimizer import PartitionAssignment
from .profiler import MissCurve, replay_solo
from .workload.generate import entity_stream
from .workload.graph import TaskGraph, fifo_partition_size
from .workload.schedule import SchedulePolicy, StaticAssignment, schedule
from .workload.trace import Trace

SHARED = "shared"
PARTITIONED = "partitioned"


@dataclass
class ExperimentResult:
    """Aggregated counters of one simulated run."""

    mode: str
    entities: tuple[EntityId, ...]
    counts: np.ndarray       # (E, 3): hits, cold, replacement
    attribution: np.ndarray  # (E, E): evictor x victim
    policy_label: str = ""
    trace: Trace | None = None

    def counters(self, entity: EntityId) -> tuple[int, int, int]:
        row = self.counts[self.entities.index(entity)]
        return int(row[0]), int(row[1]), int(row[2])

    def misses(self, entity: EntityId) -> int:
        row = self.counts[self.entities.index(entity)]
        return int(row[1] + row[2])

    @property
    def total_accesses(self) -> int:
        return int(self.counts.sum())

    @property
    def total_misses(self) -> int:
        return int(self.counts[:, 1:].sum())

    @property
    def miss_rate(self) -> float:
        total = self.total_accesses
        return self.total_misses / total if total else 0.0

    def off_diagonal_evictions(self) -> int:
        return int(self.attribution.sum() - np.trace(self.attribution))


def replay_classified(
    graph: TaskGraph,
    trace: Trace,
    config: CacheConfig,
    assignment: PartitionAssignment | None,
    *,
    want_codes: bool = False,
    backend: str | None = None,
) -> ReplayResult:
    """Classify a trace against the graph and replay it in either mode."""
    entities = graph.entities()
    entity_index = graph.entity_index()
    if assignment is not None:
        table = assignment.to_partition_table(graph)
        violations = table.validate(config)
        if violations:
            raise SimulatorError("invalid partition table: " + "; ".join(violations))
    else:
        # classification still runs in shared mode so counters attribute
        # traffic to buffers and segments, matching partitioned accounting
        table = PartitionTable({}, graph.address_intervals())

    max_tid = max((t.task_id for t in graph.tasks), default=0)
    lut = np.full(max_tid + 1, -1, dtype=np.int32)
    for task in graph.tasks:
        lut[task.task_id] = entity_index[task.entity]
    tids = trace.task_ids
    if len(tids) and (tids.min() < 0 or tids.max() > max_tid or (lut[tids] < 0).any()):
        unknown = sorted(set(tids.tolist()) - {t.task_id for t in graph.tasks})
        raise TraceFormatError(f"trace references unknown task ids {unknown}")
    issuer_idx = lut[tids]
    entity_idx = classify_addresses(trace.addrs, issuer_idx, table, entity_index)
    partitions = assignment.partitions() if assignment is not None else None
    return replay_trace(
        config, entities, partitions, trace.addrs, entity_idx,
        want_codes=want_codes, backend=backend,
    )


def run_experiment(
    graph: TaskGraph,
    policy: SchedulePolicy,
    config: CacheConfig,
    assignment: PartitionAssignment | None = None,
    *,
    static: StaticAssignment | None = None,
    periods: int = 1,
    run_seed: int = 0,
    want_trace: bool = False,
    backend: str | None = None,
) -> ExperimentResult:
    """Schedule the graph and replay the global trace in one mode."""
    if static is None:
        static = StaticAssignment.round_robin([t.task_id for t in graph.tasks], 1)
    trace = schedule(graph, static, policy, periods=periods, run_seed=run_seed)
    return run_experiment_on_trace(
        graph, trace, config, assignment,
        policy_label=policy.label, want_trace=want_trace, backend=backend,
    )


def run_experiment_on_trace(
    graph: TaskGraph,
    trace: Trace,
    config: CacheConfig,
    assignment: PartitionAssignment | None = None,
    *,
    policy_label: str = "ingested",
    want_trace: bool = False,
    backend: str | None = None,
) -> ExperimentResult:
    """Replay an existing (e.g. ingested) global trace."""
    result = replay_classified(graph, trace, config, assignment, backend=backend)
    return ExperimentResult(
        mode=PARTITIONED if assignment is not None else SHARED,
        entities=result.entities,
        counts=result.counts,
        attribution=result.attribution,
        policy_label=policy_label,
        trace=trace if want_trace else None,
    )


@dataclass
class TaskDelta:
    task: EntityId
    policy_label: str
    expected: float
    simulated: int

    @property
    def delta(self) -> float:
        return self.simulated - self.expected


@dataclass
class CompositionalityReport:
    """Expected-vs-simulated misses per task, across scheduling policies.

    ``headline`` is the largest per-task |expected - simulated| relative
    to the run's total simulated misses, maximized over policies.
    """

    rows: list[TaskDelta] = field(default_factory=list)
    headline: float = 0.0

    def max_abs_delta(self) -> float:
        return max((abs(r.delta) for r in self.rows), default=0.0)


def task_expectations(
    graph: TaskGraph,
    assignment: PartitionAssignment,
    config: CacheConfig,
    *,
    periods: int = 1,
    run_seed: int = 0,
    curves: dict[EntityId, MissCurve] | None = None,
    expected: str = "same_seed",
    backend: str | None = None,
) -> dict[EntityId, float]:
    """Per-task expected miss counts at the assigned partition sizes.

    ``'same_seed'`` replays each task's solo stream with the run's seed;
    ``'averaged'`` uses the profiled curve mean instead (requires
    ``curves``).
    """
    if expected not in ("same_seed", "averaged"):
        raise ValueError(f"unknown expected mode {expected!r}")
    if expected == "averaged" and curves is None:
        raise ValueError("averaged mode requires curves")
    expectations: dict[EntityId, float] = {}
    for task in graph.tasks:
        entity = task.entity
        size = assignment.sizes[entity]
        if expected == "averaged":
            expectations[entity] = curves[entity].mean(size)
        else:
            stream = entity_stream(graph, entity, periods, run_seed)
            _hits, misses = replay_solo(stream, entity, size, config, backend)
            expectations[entity] = float(misses)
    return expectations


def _append_result_rows(report, graph, expectations, result, label):
    worst = report.headline
    total = result.total_misses
    for task in graph.tasks:
        entity = task.entity
        row = TaskDelta(entity, label, expectations[entity], result.misses(entity))
        report.rows.append(row)
        if total > 0:
            worst = max(worst, abs(row.delta) / total)
        elif row.delta:
            worst = float("inf")
    report.headline = worst


def compositionality_from_result(
    graph: TaskGraph,
    assignment: PartitionAssignment,
    config: CacheConfig,
    result: ExperimentResult,
    *,
    periods: int = 1,
    run_seed: int = 0,
    curves: dict[EntityId, MissCurve] | None = None,
    expected: str = "same_seed",
    backend: str | None = None,
) -> CompositionalityReport:
    """Expected-vs-simulated report for an already simulated run
    (e.g. an ingested trace)."""
    expectations = task_expectations(
        graph, assignment, config,
        periods=periods, run_seed=run_seed,
        curves=curves, expected=expected, backend=backend,
    )
    report = CompositionalityReport()
    _append_result_rows(report, graph, expectations, result, result.policy_label)
    return report


def verify_compositionality(
    graph: TaskGraph,
    assignment: PartitionAssignment,
    config: CacheConfig,
    policies,
    *,
    periods: int = 1,
    run_seed: int = 0,
    curves: dict[EntityId, MissCurve] | None = None,
    expected: str = "same_seed",
    backend: str | None = None,
) -> CompositionalityReport:
    """Compare co-scheduled task misses with solo-profiled expectations.

    ``policies`` is a list of (SchedulePolicy, StaticAssignment) pairs;
    one partitioned run per pair is simulated and compared.
    """
    expectations = task_expectations(
        graph, assignment, config,
        periods=periods, run_seed=run_seed,
        curves=curves, expected=expected, backend=backend,
    )
    report = CompositionalityReport()
    for policy, static in policies:
        result = run_experiment(
            graph, policy, config, assignment,
            static=static, periods=periods, run_seed=run_seed, backend=backend,
        )
        label = f"{policy.label}/R{static.num_processors}"
        _append_result_rows(report, graph, expectations, result, label)
    return report


@dataclass
class FifoCheck:
    entity: EntityId
    passed: bool
    cold_misses: int
    replacement_misses: int
    line_bound: int


def fifo_hit_check(
    graph: TaskGraph, result: ExperimentResult, config: CacheConfig
) -> dict[EntityId, FifoCheck]:
    """Verify the all-hits-but-cold guarantee for every FIFO entity."""
    checks = {}
    for fifo in graph.fifos:
        entity = fifo.entity
        _hits, cold, repl = result.counters(entity)
        lo, hi = fifo.address_range
        line = config.line_size_bytes
        line_bound = (hi - 1) // line - lo // line + 1
        checks[entity] = FifoCheck(
            entity,
            passed=(repl == 0 and cold <= line_bound),
            cold_misses=cold,
            replacement_misses=repl,
            line_bound=line_bound,
        )
    return checks


@dataclass
class ModeComparison:
    """Shared-vs-partitioned totals and per-entity signed deltas."""

    total_shared: int
    total_partitioned: int
    ratio: float | None
    per_entity: dict[EntityId, int]

    @property
    def ratio_text(self) -> str:
        return "undefined" if self.ratio is None else f"{self.ratio:.4f}"


def compare_modes(shared: ExperimentResult, partitioned: ExperimentResult) -> ModeComparison:
    """Summarize the miss reduction of partitioning over sharing."""
    deltas = {}
    for entity in sorted(set(shared.entities) | set(partitioned.entities), key=entity_sort_key):
        s = shared.misses(entity) if entity in shared.entities else 0
        p = partitioned.misses(entity) if entity in partitioned.entities else 0
        deltas[entity] = s - p
    total_s = shared.total_misses
    total_p = partitioned.total_misses
    ratio = total_s / total_p if total_p else None
    return ModeComparison(total_s, total_p, ratio, deltas)


def default_fixed_reservations(
    graph: TaskGraph, config: CacheConfig, pins: dict[EntityId, int] | None = None
) -> dict[EntityId, int]:
    """FIFOs sized by the footprint rule plus any explicit pins.

    Explicit pins override the rule (e.g. to deliberately undersize a
    FIFO partition).
    """
    fixed: dict[EntityId, int] = {}
    for fifo in graph.fifos:
        fixed[fifo.entity] = fifo_partition_size(fifo, config)
    for seg in graph.segments:
        if seg.pinned_sets is not None:
            fixed[seg.entity] = seg.pinned_sets
    for entity, size in (pins or {}).items():
        fixed[entity] = size
    return fixed
