"""Cache geometry and entity identity types."""
from __future__ import annotations

from dataclasses import dataclass

HIT = "hit"
COLD_MISS = "cold_miss"
REPLACEMENT_MISS = "replacement_miss"

TASK = "task"
FIFO = "fifo"
FRAME_BUFFER = "frame_buffer"
STATIC_SEGMENT = "static_segment"
OS = "os"

ENTITY_KINDS = (TASK, FIFO, FRAME_BUFFER, STATIC_SEGMENT, OS)
_KIND_RANK = {kind: rank for rank, kind in enumerate(ENTITY_KINDS)}


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheConfig:
    """Geometry of the shared set-associative cache.

    The total capacity available to the partitioner is ``num_sets``,
    expressed in sets.
    """

    line_size_bytes: int
    num_sets: int
    associativity: int

    def __post_init__(self):
        if not is_pow2(self.line_size_bytes):
            raise ValueError(f"line_size_bytes must be a power of two, got {self.line_size_bytes}")
        if not is_pow2(self.num_sets):
            raise ValueError(f"num_sets must be a power of two, got {self.num_sets}")
        if self.associativity < 1:
            raise ValueError(f"associativity must be >= 1, got {self.associativity}")

    @property
    def line_bits(self) -> int:
        return self.line_size_bytes.bit_length() - 1

    @property
    def set_bits(self) -> int:
        return self.num_sets.bit_length() - 1

    @property
    def index_mask(self) -> int:
        return self.num_sets - 1

    @property
    def capacity_bytes(self) -> int:
        return self.line_size_bytes * self.num_sets * self.associativity

    @property
    def capacity_lines(self) -> int:
        return self.num_sets * self.associativity


@dataclass(frozen=True)
class EntityId:
    """Owner of cache traffic and, in partitioned mode, of a set range.

    ``kind`` is one of task, fifo, frame_buffer, static_segment, os;
    ``index`` is the ordinal within the kind.
    """

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown entity kind {self.kind!r}")
        if self.index < 0:
            raise ValueError(f"entity index must be >= 0, got {self.index}")

    def __str__(self) -> str:
        return f"{self.kind}:{self.index}"

    @property
    def sort_key(self) -> tuple[int, int]:
        return (_KIND_RANK[self.kind], self.index)

    @classmethod
    def parse(cls, text: str) -> "EntityId":
        kind, _, index = text.partition(":")
        if not index:
            raise ValueError(f"malformed entity id {text!r}")
        return cls(kind, int(index))

    @classmethod
    def task(cls, index: int) -> "EntityId":
        return cls(TASK, index)

    @classmethod
    def fifo(cls, index: int) -> "EntityId":
        return cls(FIFO, index)

    @classmethod
    def frame(cls, index: int) -> "EntityId":
        return cls(FRAME_BUFFER, index)

    @classmethod
    def segment(cls, index: int) -> "EntityId":
        return cls(STATIC_SEGMENT, index)

    @classmethod
    def os(cls, index: int) -> "EntityId":
        return cls(OS, index)


def entity_sort_key(entity: EntityId) -> tuple[int, int]:
    return entity.sort_key


@dataclass(frozen=True)
class AccessOutcome:
    """Result of one cache access.

    ``line_addr`` is the full line address (byte address divided by the
    line size); it identifies the line uniquely even when index
    translation folds several conventional indices onto one physical set.
    ``evicted`` is the (line_addr, owner) pair displaced by a miss in a
    full set, else None.
    """

    status: str
    entity: EntityId
    physical_set: int
    line_addr: int
    evicted: tuple[int, EntityId] | None = None

    @property
    def is_miss(self) -> bool:
        return self.status != HIT
