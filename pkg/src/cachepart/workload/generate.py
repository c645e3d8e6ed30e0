"""Synthetic trace generation.

Per-task private traffic is generated from the TaskSpec pattern mix;
FIFO and frame-buffer traffic is generated token by token with the
blocking constraints recorded per access so the scheduler can enforce
them. Everything is a pure function of (spec, period, run_seed).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from ..core.config import EntityId
from .graph import FifoSpec, FrameBufferSpec, TaskGraph, TaskSpec
from .trace import Trace

NO_CHANNEL = -1


@dataclass
class ProgramStep:
    """One access of a task program, with its blocking annotation.

    ``channel`` is NO_CHANNEL for private/segment traffic, the fifo id
    for FIFO traffic, or ``frame_channel_base + frame_id`` for frame
    buffers. ``token`` is the token (or period) the access belongs to and
    ``last`` marks the final word of that token.
    """

    addr: int
    is_write: bool
    channel: int = NO_CHANNEL
    token: int = 0
    last: bool = False


@dataclass
class TaskProgram:
    task_id: int
    steps: list[ProgramStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def trace(self) -> Trace:
        return Trace(
            np.full(len(self.steps), self.task_id, dtype=np.int32),
            np.array([s.addr for s in self.steps], dtype=np.uint64),
            np.array([s.is_write for s in self.steps], dtype=np.bool_),
        )


def _mix_counts(spec: TaskSpec) -> tuple[int, int, int]:
    total = sum(spec.mix)
    n = spec.period_accesses
    counts = [int(n * f / total) for f in spec.mix]
    remainder = n - sum(counts)
    for pos in (1, 0, 2):  # leftover accesses go to the loop phase first
        if spec.mix[pos] > 0 and remainder > 0:
            counts[pos] += remainder
            remainder = 0
    return counts[0], counts[1], counts[2]


def _period_rng(spec: TaskSpec, period: int, run_seed: int, label: str) -> random.Random:
    return random.Random(f"{spec.seed}:{run_seed}:{period}:{label}")


def generate_period_accesses(spec: TaskSpec, period: int, run_seed: int = 0):
    """Private (addr, is_write) pairs for one application period."""
    n_scan, n_loop, n_rand = _mix_counts(spec)
    ws = spec.working_set_bytes
    base = spec.base_addr
    addrs: list[int] = []
    for i in range(n_scan):
        addrs.append(base + (i * spec.word_bytes) % ws)
    for i in range(n_loop):
        addrs.append(base + (i * spec.stride) % ws)
    if n_rand:
        rng = _period_rng(spec, period, run_seed, "rand")
        words = max(1, ws // spec.word_bytes)
        for _ in range(n_rand):
            addrs.append(base + rng.randrange(words) * spec.word_bytes)
    rng_w = _period_rng(spec, period, run_seed, "w")
    writes = [rng_w.random() < spec.write_fraction for _ in addrs]
    return addrs, writes


def generate_task_trace(spec: TaskSpec, periods: int = 1, run_seed: int = 0) -> Trace:
    """The task's private access stream; deterministic in (spec, run_seed)."""
    all_addrs: list[int] = []
    all_writes: list[bool] = []
    for period in range(periods):
        addrs, writes = generate_period_accesses(spec, period, run_seed)
        all_addrs.extend(addrs)
        all_writes.extend(writes)
    return Trace(
        np.full(len(all_addrs), spec.task_id, dtype=np.int32),
        np.array(all_addrs, dtype=np.uint64),
        np.array(all_writes, dtype=np.bool_),
    )


def token_words(fifo: FifoSpec, token: int) -> list[int]:
    """Word addresses of one token in the circular buffer."""
    start = (token * fifo.token_bytes) % fifo.capacity_bytes
    return [
        fifo.base_addr + start + w * fifo.word_bytes
        for w in range(fifo.words_per_token)
    ]


def generate_fifo_traffic(fifo: FifoSpec, tokens: int):
    """Producer and consumer sub-traces for ``tokens`` tokens.

    Returns (producer_steps, consumer_steps); the blocking semantics are
    recorded in the step annotations: reads of token n require all writes
    of token n, and writes of token n require reads of token
    n - capacity_tokens to have completed.
    """
    producer: list[ProgramStep] = []
    consumer: list[ProgramStep] = []
    for token in range(tokens):
        words = token_words(fifo, token)
        for w, addr in enumerate(words):
            is_last = w == len(words) - 1
            producer.append(ProgramStep(addr, True, fifo.fifo_id, token, is_last))
            consumer.append(ProgramStep(addr, False, fifo.fifo_id, token, is_last))
    return producer, consumer


def frame_steps(frame: FrameBufferSpec, period: int, channel: int, is_write: bool):
    steps = []
    for w in range(frame.words):
        steps.append(
            ProgramStep(
                frame.base_addr + w * frame.word_bytes,
                is_write,
                channel,
                period,
                w == frame.words - 1,
            )
        )
    return steps


def segment_touch_steps(graph: TaskGraph, spec: TaskSpec):
    steps = []
    for touch in spec.touches:
        seg = graph.segment(touch.segment)
        for i in range(touch.accesses):
            steps.append(ProgramStep(seg.base_addr + (i * touch.stride) % seg.size_bytes, False))
    return steps


def build_program(
    graph: TaskGraph, task_id: int, periods: int, run_seed: int = 0
) -> TaskProgram:
    """Full program of one task: per period, consume inputs, run the
    private pattern and segment touches, then produce outputs."""
    spec = graph.task(task_id)
    frame_base = len(graph.fifos)
    steps: list[ProgramStep] = []
    for period in range(periods):
        for fifo in graph.fifos_in(task_id):
            for tok in range(period * fifo.tokens_per_period, (period + 1) * fifo.tokens_per_period):
                words = token_words(fifo, tok)
                for w, addr in enumerate(words):
                    steps.append(
                        ProgramStep(addr, False, fifo.fifo_id, tok, w == len(words) - 1)
                    )
        for frame in graph.frames_in(task_id):
            steps.extend(frame_steps(frame, period, frame_base + frame.frame_id, False))
        addrs, writes = generate_period_accesses(spec, period, run_seed)
        steps.extend(ProgramStep(a, w) for a, w in zip(addrs, writes))
        steps.extend(segment_touch_steps(graph, spec))
        for fifo in graph.fifos_out(task_id):
            for tok in range(period * fifo.tokens_per_period, (period + 1) * fifo.tokens_per_period):
                words = token_words(fifo, tok)
                for w, addr in enumerate(words):
                    steps.append(
                        ProgramStep(addr, True, fifo.fifo_id, tok, w == len(words) - 1)
                    )
        for frame in graph.frames_out(task_id):
            steps.extend(frame_steps(frame, period, frame_base + frame.frame_id, True))
    return TaskProgram(task_id, steps)


def entity_stream(
    graph: TaskGraph, entity: EntityId, periods: int, run_seed: int = 0
) -> np.ndarray:
    """Canonical solo access stream of an entity, as an address array.

    Tasks: the private pattern stream (identical to the task-classified
    subsequence of any valid schedule). FIFOs: token order, writes then
    reads per token. Frame buffers: per period, the full write burst then
    the full read burst (the only order a valid schedule permits).
    Segments: per period, the touching tasks' touches in ascending task
    order.
    """
    if entity.kind == "task":
        return generate_task_trace(graph.task(entity.index), periods, run_seed).addrs
    if entity.kind == "fifo":
        fifo = graph.fifos[entity.index]
        addrs: list[int] = []
        for tok in range(periods * fifo.tokens_per_period):
            words = token_words(fifo, tok)
            addrs.extend(words)
            addrs.extend(words)
        return np.array(addrs, dtype=np.uint64)
    if entity.kind == "frame_buffer":
        frame = graph.frames[entity.index]
        addrs = []
        for _period in range(periods):
            words = [frame.base_addr + w * frame.word_bytes for w in range(frame.words)]
            addrs.extend(words)
            addrs.extend(words)
        return np.array(addrs, dtype=np.uint64)
    # static segment or os: ascending-task touch order per period
    seg = next(s for s in graph.segments if s.entity == entity)
    addrs = []
    for _period in range(periods):
        for task in graph.tasks:
            for touch in task.touches:
                if touch.segment == seg.name:
                    for i in range(touch.accesses):
                        addrs.append(seg.base_addr + (i * touch.stride) % seg.size_bytes)
    return np.array(addrs, dtype=np.uint64)
