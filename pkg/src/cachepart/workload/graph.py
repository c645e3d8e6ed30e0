"""Application model: tasks, FIFO channels, frame buffers, static segments.

The application is a graph of N tasks connected by bounded FIFO edges,
plus frame buffers that are consumed only after being fully produced and
shared static data segments. Every entity owns a byte range in one linear
address space; ranges must be pairwise disjoint.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core.config import OS, STATIC_SEGMENT, CacheConfig, EntityId
from ..errors import ConfigError, InfeasibleError


@dataclass(frozen=True)
class SegmentTouch:
    """Per-period strided accesses a task makes to a shared segment."""

    segment: str
    accesses: int
    stride: int = 64


@dataclass(frozen=True)
class TaskSpec:
    """Synthetic access-pattern parameters for one task.

    ``mix`` gives the (scan, loop, random) proportions of the per-period
    private accesses: a sequential word-granular sweep, a strided loop,
    and seeded-random word picks, all wrapping inside the working set.
    """

    task_id: int
    base_addr: int
    working_set_bytes: int
    period_accesses: int
    stride: int = 64
    mix: tuple[float, float, float] = (0.0, 1.0, 0.0)
    write_fraction: float = 0.25
    seed: int = 0
    word_bytes: int = 4
    touches: tuple[SegmentTouch, ...] = ()

    def __post_init__(self):
        if self.working_set_bytes <= 0 or self.stride <= 0 or self.word_bytes <= 0:
            raise ValueError("working set, stride and word size must be positive")
        if self.period_accesses < 0:
            raise ValueError("period_accesses must be >= 0")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ValueError("write_fraction must be in [0, 1]")
        if sum(self.mix) <= 0 or any(f < 0 for f in self.mix):
            raise ValueError("mix fractions must be non-negative and sum > 0")

    @property
    def entity(self) -> EntityId:
        return EntityId.task(self.task_id)

    @property
    def address_range(self) -> tuple[int, int]:
        return (self.base_addr, self.base_addr + self.working_set_bytes)


@dataclass(frozen=True)
class FifoSpec:
    """Bounded circular FIFO between one producer and one consumer."""

    fifo_id: int
    producer: int
    consumer: int
    base_addr: int
    capacity_bytes: int
    token_bytes: int
    word_bytes: int = 4
    tokens_per_period: int = 1

    def __post_init__(self):
        if not (self.capacity_bytes >= self.token_bytes > 0):
            raise ValueError("capacity_bytes >= token_bytes > 0 required")
        if self.capacity_bytes % self.token_bytes != 0:
            raise ValueError("capacity must be a multiple of the token size")
        if self.token_bytes % self.word_bytes != 0:
            raise ValueError("token size must be a multiple of the word size")
        if self.tokens_per_period < 0:
            raise ValueError("tokens_per_period must be >= 0")

    @property
    def entity(self) -> EntityId:
        return EntityId.fifo(self.fifo_id)

    @property
    def capacity_tokens(self) -> int:
        return self.capacity_bytes // self.token_bytes

    @property
    def words_per_token(self) -> int:
        return self.token_bytes // self.word_bytes

    @property
    def address_range(self) -> tuple[int, int]:
        return (self.base_addr, self.base_addr + self.capacity_bytes)


@dataclass(frozen=True)
class FrameBufferSpec:
    """Buffer produced completely before the consumer reads it, once per period."""

    frame_id: int
    producer: int
    consumer: int
    base_addr: int
    size_bytes: int
    word_bytes: int = 4

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ValueError("size_bytes must be positive")
        if self.size_bytes % self.word_bytes != 0:
            raise ValueError("frame size must be a multiple of the word size")

    @property
    def entity(self) -> EntityId:
        return EntityId.frame(self.frame_id)

    @property
    def words(self) -> int:
        return self.size_bytes // self.word_bytes

    @property
    def address_range(self) -> tuple[int, int]:
        return (self.base_addr, self.base_addr + self.size_bytes)


@dataclass(frozen=True)
class SegmentSpec:
    """Statically allocated shared data (data/bss analogue, or the OS image)."""

    name: str
    base_addr: int
    size_bytes: int
    kind: str = STATIC_SEGMENT  # static_segment or os
    index: int = 0
    pinned_sets: int | None = None

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ValueError("size_bytes must be positive")
        if self.kind not in (STATIC_SEGMENT, OS):
            raise ValueError(f"segment kind must be static_segment or os, got {self.kind!r}")

    @property
    def entity(self) -> EntityId:
        return EntityId(self.kind, self.index)

    @property
    def address_range(self) -> tuple[int, int]:
        return (self.base_addr, self.base_addr + self.size_bytes)


@dataclass
class TaskGraph:
    """The application graph G = (T, B) plus frame buffers and segments."""

    tasks: list[TaskSpec]
    fifos: list[FifoSpec] = field(default_factory=list)
    frames: list[FrameBufferSpec] = field(default_factory=list)
    segments: list[SegmentSpec] = field(default_factory=list)

    def __post_init__(self):
        self.tasks = sorted(self.tasks, key=lambda t: t.task_id)
        self.fifos = sorted(self.fifos, key=lambda f: f.fifo_id)
        self.frames = sorted(self.frames, key=lambda f: f.frame_id)
        violations = self.validate()
        if violations:
            raise ConfigError("; ".join(violations))

    def validate(self) -> list[str]:
        violations = []
        task_ids = [t.task_id for t in self.tasks]
        if len(set(task_ids)) != len(task_ids):
            violations.append("duplicate task ids")
        known = set(task_ids)
        for fifo in self.fifos:
            for end, role in ((fifo.producer, "producer"), (fifo.consumer, "consumer")):
                if end not in known:
                    violations.append(
                        f"fifo {fifo.fifo_id} references missing {role} task {end}"
                    )
        for frame in self.frames:
            for end, role in ((frame.producer, "producer"), (frame.consumer, "consumer")):
                if end not in known:
                    violations.append(
                        f"frame buffer {frame.frame_id} references missing {role} task {end}"
                    )
        seg_names = [s.name for s in self.segments]
        if len(set(seg_names)) != len(seg_names):
            violations.append("duplicate segment names")
        for task in self.tasks:
            for touch in task.touches:
                if touch.segment not in seg_names:
                    violations.append(
                        f"task {task.task_id} touches unknown segment {touch.segment!r}"
                    )
        ranges = sorted(
            (spec.address_range, str(spec.entity))
            for group in (self.tasks, self.fifos, self.frames, self.segments)
            for spec in group
        )
        for ((lo_a, hi_a), name_a), ((lo_b, hi_b), name_b) in zip(ranges, ranges[1:]):
            if lo_b < hi_a:
                violations.append(f"address ranges of {name_a} and {name_b} overlap")
        return violations

    # -- entity bookkeeping ------------------------------------------------

    def entities(self) -> tuple[EntityId, ...]:
        """All entities in canonical order (tasks, fifos, frames, segments, os)."""
        out = [t.entity for t in self.tasks]
        out += [f.entity for f in self.fifos]
        out += [f.entity for f in self.frames]
        out += [s.entity for s in self.segments if s.kind == STATIC_SEGMENT]
        out += [s.entity for s in self.segments if s.kind == OS]
        return tuple(out)

    def entity_index(self) -> dict[EntityId, int]:
        return {entity: pos for pos, entity in enumerate(self.entities())}

    def address_intervals(self) -> list[tuple[int, int, EntityId]]:
        """Byte intervals owned by non-task entities, for classification."""
        intervals = []
        for group in (self.fifos, self.frames, self.segments):
            for spec in group:
                lo, hi = spec.address_range
                intervals.append((lo, hi, spec.entity))
        return sorted(intervals)

    def task(self, task_id: int) -> TaskSpec:
        for task in self.tasks:
            if task.task_id == task_id:
                return task
        raise KeyError(f"no task {task_id}")

    def segment(self, name: str) -> SegmentSpec:
        for seg in self.segments:
            if seg.name == name:
                return seg
        raise KeyError(f"no segment {name!r}")

    def fifos_in(self, task_id: int) -> list[FifoSpec]:
        return [f for f in self.fifos if f.consumer == task_id]

    def fifos_out(self, task_id: int) -> list[FifoSpec]:
        return [f for f in self.fifos if f.producer == task_id]

    def frames_in(self, task_id: int) -> list[FrameBufferSpec]:
        return [f for f in self.frames if f.consumer == task_id]

    def frames_out(self, task_id: int) -> list[FrameBufferSpec]:
        return [f for f in self.frames if f.producer == task_id]


def fifo_partition_size(fifo: FifoSpec, config: CacheConfig) -> int:
    """Smallest power-of-two set count whose capacity covers the FIFO.

    Sized so the whole circular buffer is simultaneously resident, which
    makes every FIFO access a hit after the cold misses.
    """
    bytes_per_set = config.line_size_bytes * config.associativity
    size = 1
    while size * bytes_per_set < fifo.capacity_bytes:
        size *= 2
    if size > config.num_sets:
        raise InfeasibleError(
            f"fifo {fifo.fifo_id} capacity {fifo.capacity_bytes}B needs {size} sets, "
            f"cache has {config.num_sets}"
        )
    return size


def buffer_partition_size(capacity_bytes: int, config: CacheConfig) -> int:
    """Footprint-covering power-of-two set count for an arbitrary buffer."""
    bytes_per_set = config.line_size_bytes * config.associativity
    size = 1
    while size * bytes_per_set < capacity_bytes:
        size *= 2
    if size > config.num_sets:
        raise InfeasibleError(
            f"buffer of {capacity_bytes}B needs {size} sets, cache has {config.num_sets}"
        )
    return size
