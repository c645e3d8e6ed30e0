"""Partition-size optimization and the static-assignment throughput model.

Choosing one ladder size per entity under the set budget, minimizing the
summed mean miss counts, is a multiple-choice knapsack; it is solved
exactly by dynamic programming over the remaining budget with one stage
per entity. Ties break toward fewer total allocated sets, then toward
the lexicographically smallest size vector in canonical entity order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .core.config import EntityId, entity_sort_key, is_pow2
from .core.partition import Partition, PartitionTable
from .errors import CurveGapError, InfeasibleError, SearchSpaceExceededError
from .profiler import MissCurve, SizeLadder
from .workload.graph import TaskGraph
from .workload.schedule import StaticAssignment

_INF = (math.inf, math.inf)


@dataclass
class PartitionAssignment:
    """Chosen partition size and base set for every entity.

    ``pinned`` marks entities whose size was fixed up front (FIFOs sized
    by the footprint rule, hand-pinned segments); the rest carry the
    solver's choice from the ladder.
    """

    sizes: dict[EntityId, int]
    bases: dict[EntityId, int] = field(default_factory=dict)
    pinned: frozenset = frozenset()
    ladder: SizeLadder | None = None
    predicted_total_misses: float | None = None

    @property
    def total_sets(self) -> int:
        return sum(self.sizes.values())

    def partitions(self) -> dict[EntityId, Partition]:
        return {
            entity: Partition(self.bases[entity], size)
            for entity, size in self.sizes.items()
        }

    def to_partition_table(self, graph: TaskGraph | None = None) -> PartitionTable:
        intervals = graph.address_intervals() if graph is not None else []
        return PartitionTable(self.partitions(), intervals)

    def x_matrix(self) -> dict[EntityId, tuple[int, ...]]:
        """One-hot size choices over the ladder; empty for off-ladder pins."""
        if self.ladder is None:
            return {}
        out = {}
        for entity, size in sorted(self.sizes.items(), key=lambda kv: kv[0].sort_key):
            if size in self.ladder:
                out[entity] = tuple(1 if s == size else 0 for s in self.ladder)
            else:
                out[entity] = ()
        return out


def pack_layout(sizes: dict[EntityId, int], num_sets: int) -> dict[EntityId, int]:
    """Place partitions at aligned bases, largest first.

    With power-of-two sizes in descending order the running cursor stays
    aligned, so the packing is collision-free whenever the sizes fit the
    budget.
    """
    for entity, size in sizes.items():
        if not is_pow2(size):
            raise InfeasibleError(f"{entity}: partition size {size} is not a power of two")
    bases: dict[EntityId, int] = {}
    cursor = 0
    for entity, size in sorted(sizes.items(), key=lambda kv: (-kv[1], kv[0].sort_key)):
        base = ((cursor + size - 1) // size) * size
        if base + size > num_sets:
            raise InfeasibleError(
                f"layout needs more than {num_sets} sets (placing {entity} of size {size})"
            )
        bases[entity] = base
        cursor = base + size
    return bases


def _canonical_curves(curves) -> list[MissCurve]:
    if isinstance(curves, dict):
        curves = list(curves.values())
    return sorted(curves, key=lambda c: entity_sort_key(c.entity))


def solve_min_misses(
    curves,
    fixed_reservations: dict[EntityId, int],
    total_sets: int,
    ladder: SizeLadder,
) -> PartitionAssignment:
    """Exact minimum of the summed mean miss counts under the set budget.

    Entities listed in ``fixed_reservations`` keep that size and are
    excluded from the choice; every other curve entity receives exactly
    one ladder size. The returned layout packs all partitions and the
    prediction sums curve means at the chosen sizes (pinned entities
    included when they have a curve).
    """
    ordered = _canonical_curves(curves)
    by_entity = {curve.entity: curve for curve in ordered}
    free = [curve for curve in ordered if curve.entity not in fixed_reservations]
    for curve in free:
        if not curve.covers(ladder):
            missing = [s for s in ladder if s not in curve.samples]
            raise CurveGapError(f"{curve.entity}: curve lacks sizes {missing}")

    fixed_total = sum(fixed_reservations.values())
    budget = total_sets - fixed_total
    if budget < 0:
        raise InfeasibleError(
            f"fixed reservations use {fixed_total} sets, budget is {total_sets}"
        )
    if len(free) * ladder.min_size > budget:
        raise InfeasibleError(
            f"{len(free)} entities need at least {len(free) * ladder.min_size} sets, "
            f"only {budget} remain after reservations"
        )

    sizes_list = list(ladder)
    cost = [[curve.mean(size) for size in sizes_list] for curve in free]
    n = len(free)

    # dp[i][b]: (min cost, min sets at that cost) for entities i.. with budget b
    dp = [[_INF] * (budget + 1) for _ in range(n + 1)]
    dp[n] = [(0.0, 0)] * (budget + 1)
    for i in range(n - 1, -1, -1):
        row = dp[i]
        nxt = dp[i + 1]
        costs_i = cost[i]
        for b in range(budget + 1):
            best = _INF
            for k, size in enumerate(sizes_list):
                if size > b:
                    break
                tail = nxt[b - size]
                if math.isinf(tail[0]):
                    continue
                cand = (costs_i[k] + tail[0], size + tail[1])
                if cand < best:
                    best = cand
            row[b] = best
    if math.isinf(dp[0][budget][0]):
        raise InfeasibleError("no feasible size assignment under the budget")

    chosen: dict[EntityId, int] = dict(fixed_reservations)
    b = budget
    for i, curve in enumerate(free):
        target = dp[i][b]
        for k, size in enumerate(sizes_list):
            if size > b:
                break
            tail = dp[i + 1][b - size]
            if math.isinf(tail[0]):
                continue
            if (cost[i][k] + tail[0], size + tail[1]) == target:
                chosen[curve.entity] = size
                b -= size
                break
        else:
            raise AssertionError("dp reconstruction failed")

    predicted = sum(
        by_entity[entity].mean(size)
        for entity, size in chosen.items()
        if entity in by_entity and size in by_entity[entity].samples
    )
    assignment = PartitionAssignment(
        sizes=chosen,
        pinned=frozenset(fixed_reservations),
        ladder=ladder,
        predicted_total_misses=predicted,
    )
    assignment.bases = pack_layout(chosen, total_sets)
    return assignment


def predict_total_misses(assignment: PartitionAssignment, curves) -> float:
    """Sum of curve values at the assigned sizes."""
    ordered = _canonical_curves(curves)
    total = 0.0
    for curve in ordered:
        size = assignment.sizes[curve.entity]
        total += curve.mean(size)
    return total


@dataclass(frozen=True)
class ThroughputModel:
    """Execution-proxy table e(task, size) plus switching constants.

    Processors are homogeneous, so one table serves all of them.
    """

    e_table: dict[tuple[EntityId, int], float]
    t_switch: float = 0.0
    t_idle: float = 0.0
    processors: int = 1

    def e(self, entity: EntityId, size: int) -> float:
        return self.e_table[(entity, size)]


def processor_time(task_set, model: ThroughputModel, assignment: PartitionAssignment) -> float:
    """E(p, T) = sum of task execution proxies plus switch and idle time."""
    total = sum(model.e(entity, assignment.sizes[entity]) for entity in task_set)
    return total + model.t_switch + model.t_idle


def power_objective(assignment: PartitionAssignment, e_table, entities=None) -> float:
    """Summed execution proxy at the assigned sizes.

    With the degenerate hit-0/miss-1 cost model this equals the predicted
    total miss count.
    """
    if entities is None:
        entities = sorted(
            {entity for entity, _size in e_table}, key=entity_sort_key
        )
    return sum(e_table[(entity, assignment.sizes[entity])] for entity in entities)


def optimize_throughput(
    tasks,
    model: ThroughputModel,
    curves,
    total_sets: int,
    num_processors: int,
    *,
    ladder: SizeLadder,
    fixed_reservations: dict[EntityId, int] | None = None,
    mode: str = "exact",
    max_states: int = 2_000_000,
) -> tuple[StaticAssignment, PartitionAssignment]:
    """Joint task placement and partition sizing minimizing max E(p, T).

    Exact mode explores (processor, size) choices per task depth-first
    with makespan pruning; ties prefer lower predicted misses, then the
    lexicographically smallest choice vector. Heuristic mode places
    miss-optimal sizes longest-processing-time first, then improves by
    single-task moves and pairwise swaps.
    """
    fixed = dict(fixed_reservations or {})
    task_list = sorted(tasks, key=entity_sort_key)
    curve_map = {c.entity: c for c in _canonical_curves(curves)} if curves else {}
    budget = total_sets - sum(fixed.values())
    if budget < len(task_list) * ladder.min_size:
        raise InfeasibleError(
            f"budget {budget} cannot grant {len(task_list)} tasks the minimum size"
        )
    if mode == "heuristic":
        return _throughput_heuristic(
            task_list, model, curve_map, total_sets, num_processors, ladder, fixed
        )
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")

    sizes_list = list(ladder)
    n, k, r = len(task_list), len(sizes_list), num_processors
    states = (r * k) ** n
    if states > max_states:
        raise SearchSpaceExceededError(
            f"(R*K)^N = {states} exceeds max_states={max_states}; use mode='heuristic'"
        )

    e_of = [[model.e(t, s) for s in sizes_list] for t in task_list]
    miss_of = [
        [curve_map[t].mean(s) if t in curve_map else 0.0 for s in sizes_list]
        for t in task_list
    ]
    consts = model.t_switch + model.t_idle
    best: list = [math.inf, math.inf, None, None]  # makespan, misses, procs, size idx

    def dfs(i, loads, used, misses, procs, sizes_idx):
        # loads and misses only grow, so a partial state already at or
        # beyond the incumbent cannot strictly improve on it
        partial = max(loads)
        if partial > best[0] or (partial == best[0] and misses >= best[1]):
            return
        if i == n:
            best[0], best[1] = partial, misses
            best[2], best[3] = list(procs), list(sizes_idx)
            return
        remaining_min = (n - i - 1) * sizes_list[0]
        for proc in range(r):
            for kk, size in enumerate(sizes_list):
                if used + size + remaining_min > budget:
                    break
                loads[proc] += e_of[i][kk]
                procs.append(proc)
                sizes_idx.append(kk)
                dfs(i + 1, loads, used + size, misses + miss_of[i][kk], procs, sizes_idx)
                loads[proc] -= e_of[i][kk]
                procs.pop()
                sizes_idx.pop()

    dfs(0, [0.0] * r, 0, 0.0, [], [])
    if best[2] is None:
        raise InfeasibleError("no feasible joint assignment under the budget")

    chosen_sizes = dict(fixed)
    processor_of = {}
    for i, task in enumerate(task_list):
        chosen_sizes[task] = sizes_list[best[3][i]]
        processor_of[task.index] = best[2][i]
    static = StaticAssignment(processor_of, num_processors)
    part = PartitionAssignment(
        sizes=chosen_sizes,
        pinned=frozenset(fixed),
        ladder=ladder,
        predicted_total_misses=(
            sum(curve_map[t].mean(chosen_sizes[t]) for t in task_list if t in curve_map)
            if curve_map
            else None
        ),
    )
    part.bases = pack_layout(chosen_sizes, total_sets)
    return static, part


def _makespan(loads) -> float:
    return max(loads)


def _throughput_heuristic(
    task_list, model, curve_map, total_sets, num_processors, ladder, fixed
):
    if not curve_map:
        raise ValueError("heuristic mode requires miss curves to size partitions")
    sized = solve_min_misses(
        [curve_map[t] for t in task_list], fixed, total_sets, ladder
    )
    e_of = {t: model.e(t, sized.sizes[t]) for t in task_list}
    loads = [0.0] * num_processors
    placement: dict[EntityId, int] = {}
    for task in sorted(task_list, key=lambda t: (-e_of[t], entity_sort_key(t))):
        proc = min(range(num_processors), key=lambda p: (loads[p], p))
        placement[task] = proc
        loads[proc] += e_of[task]

    improved = True
    while improved:
        improved = False
        for task in task_list:
            src = placement[task]
            for dst in range(num_processors):
                if dst == src:
                    continue
                trial = list(loads)
                trial[src] -= e_of[task]
                trial[dst] += e_of[task]
                if _makespan(trial) < _makespan(loads):
                    placement[task] = src = dst
                    loads = trial
                    improved = True
        for t1, t2 in itertools.combinations(task_list, 2):
            p1, p2 = placement[t1], placement[t2]
            if p1 == p2:
                continue
            trial = list(loads)
            trial[p1] += e_of[t2] - e_of[t1]
            trial[p2] += e_of[t1] - e_of[t2]
            if _makespan(trial) < _makespan(loads):
                placement[t1], placement[t2] = p2, p1
                loads = trial
                improved = True

    processor_of = {t.index: placement[t] for t in task_list}
    static = StaticAssignment(processor_of, num_processors)
    return static, sized
