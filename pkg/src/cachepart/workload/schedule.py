"""Deterministic multiprocessor scheduler for task programs.

Time is counted in accesses. Each global step visits the processors in
round-robin order and lets each emit one access of its current task; a
processor switches tasks when the quantum is used up, the task blocks on
a FIFO or frame gate, or the task finishes. The resulting interleaving
is a pure function of (graph, assignment, policy, periods, run_seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import DeadlockError
from .generate import NO_CHANNEL, TaskProgram, build_program
from .graph import TaskGraph
from .trace import Trace

ROUND_ROBIN = "round_robin"
RUN_TO_COMPLETION = "run_to_completion"


@dataclass(frozen=True)
class SchedulePolicy:
    kind: str
    quantum: int | None = None

    def __post_init__(self):
        if self.kind not in (ROUND_ROBIN, RUN_TO_COMPLETION):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == ROUND_ROBIN and (self.quantum is None or self.quantum < 1):
            raise ValueError("round_robin requires quantum >= 1")

    @property
    def label(self) -> str:
        if self.kind == ROUND_ROBIN:
            return f"rr{self.quantum}"
        return "rtc"


class Slice(NamedTuple):
    """Maximal run of consecutive accesses by one task on one processor."""

    processor: int
    start_seq: int
    length: int


@dataclass
class StaticAssignment:
    """Static task-to-processor map; slices are recorded by schedule()."""

    processor_of: dict[int, int]
    num_processors: int
    slices: dict[int, list[Slice]] = field(default_factory=dict)

    def __post_init__(self):
        for task_id, proc in self.processor_of.items():
            if not 0 <= proc < self.num_processors:
                raise ValueError(f"task {task_id} assigned to invalid processor {proc}")

    def tasks_on(self, proc: int) -> list[int]:
        return sorted(t for t, p in self.processor_of.items() if p == proc)

    @classmethod
    def round_robin(cls, task_ids, num_processors: int) -> "StaticAssignment":
        ids = sorted(task_ids)
        return cls({t: i % num_processors for i, t in enumerate(ids)}, num_processors)


def schedule(
    graph: TaskGraph,
    assignment: StaticAssignment,
    policy: SchedulePolicy,
    *,
    periods: int = 1,
    run_seed: int = 0,
    programs: dict[int, TaskProgram] | None = None,
) -> Trace:
    """Merge per-task programs into one global trace.

    Honors FIFO token gating, frame produce-before-consume, and the
    per-processor quantum. Records per-task slices into
    ``assignment.slices``. Raises DeadlockError when no task can make
    progress (e.g. a cyclic graph where both ends consume first).
    """
    if programs is None:
        programs = {
            t.task_id: build_program(graph, t.task_id, periods, run_seed)
            for t in graph.tasks
        }
    missing = [t.task_id for t in graph.tasks if t.task_id not in assignment.processor_of]
    if missing:
        raise ValueError(f"tasks without a processor: {missing}")

    n_channels = len(graph.fifos) + len(graph.frames)
    caps = [f.capacity_tokens for f in graph.fifos] + [1] * len(graph.frames)
    written = [0] * n_channels
    read_done = [0] * n_channels

    pcs = {tid: 0 for tid in programs}
    steps = {tid: prog.steps for tid, prog in programs.items()}
    remaining = sum(len(s) for s in steps.values())

    queues = {p: assignment.tasks_on(p) for p in range(assignment.num_processors)}
    current: dict[int, int | None] = {p: None for p in queues}
    used = {p: 0 for p in queues}
    quantum = policy.quantum if policy.kind == ROUND_ROBIN else None

    def runnable(tid: int) -> bool:
        step = steps[tid][pcs[tid]]
        if step.channel == NO_CHANNEL:
            return True
        if step.is_write:  # producer side: bounded-buffer back-pressure
            return step.token - read_done[step.channel] < caps[step.channel]
        return written[step.channel] >= step.token + 1

    def done(tid: int) -> bool:
        return pcs[tid] >= len(steps[tid])

    def pick(proc: int) -> int | None:
        order = queues[proc]
        if not order:
            return None
        cur = current[proc]
        if (
            cur is not None
            and not done(cur)
            and (quantum is None or used[proc] < quantum)
            and runnable(cur)
        ):
            return cur
        start = order.index(cur) + 1 if cur in order else 0
        for offset in range(len(order)):
            tid = order[(start + offset) % len(order)]
            if not done(tid) and runnable(tid):
                if tid != cur:
                    current[proc] = tid
                used[proc] = 0
                return tid
        return None

    out_tids: list[int] = []
    out_addrs: list[int] = []
    out_writes: list[bool] = []
    slices: dict[int, list[Slice]] = {tid: [] for tid in programs}
    last_on_proc: dict[int, int | None] = {p: None for p in queues}
    seq = 0

    while remaining:
        progressed = False
        for proc in range(assignment.num_processors):
            tid = pick(proc)
            if tid is None:
                continue
            step = steps[tid][pcs[tid]]
            pcs[tid] += 1
            used[proc] += 1
            remaining -= 1
            progressed = True
            out_tids.append(tid)
            out_addrs.append(step.addr)
            out_writes.append(step.is_write)
            if step.channel != NO_CHANNEL and step.last:
                if step.is_write:
                    written[step.channel] = max(written[step.channel], step.token + 1)
                else:
                    read_done[step.channel] = max(read_done[step.channel], step.token + 1)
            if last_on_proc[proc] == tid and slices[tid]:
                prev = slices[tid][-1]
                slices[tid][-1] = Slice(prev.processor, prev.start_seq, prev.length + 1)
            else:
                slices[tid].append(Slice(proc, seq, 1))
            last_on_proc[proc] = tid
            seq += 1
        if not progressed:
            blocked = sorted(tid for tid in steps if not done(tid))
            raise DeadlockError(f"no runnable task; blocked tasks: {blocked}")

    assignment.slices = slices
    return Trace(
        np.array(out_tids, dtype=np.int32),
        np.array(out_addrs, dtype=np.uint64),
        np.array(out_writes, dtype=np.bool_),
    )
