"""Exclusive set partitioning: address decomposition, index translation,
access classification, and partition-table validation.

A partition is a contiguous, power-of-two-sized range of physical sets
whose base is aligned to its size, so translation is a mask plus an add.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .config import CacheConfig, EntityId, is_pow2


def decompose_address(addr: int, config: CacheConfig) -> tuple[int, int, int]:
    """Split a byte address into (tag, conventional_index, offset)."""
    offset = addr & (config.line_size_bytes - 1)
    index = (addr >> config.line_bits) & config.index_mask
    tag = addr >> (config.line_bits + config.set_bits)
    return tag, index, offset


@dataclass(frozen=True)
class Partition:
    """A contiguous aligned range [base_set, base_set + size_sets)."""

    base_set: int
    size_sets: int

    @property
    def mask(self) -> int:
        return self.size_sets - 1

    @property
    def end_set(self) -> int:
        return self.base_set + self.size_sets

    def contains(self, physical_set: int) -> bool:
        return self.base_set <= physical_set < self.end_set


def translate_index(conventional_index: int, partition: Partition) -> int:
    """Remap a conventional set index into the partition's range."""
    return partition.base_set + (conventional_index & partition.mask)


@dataclass
class PartitionTable:
    """Entity partitions plus the shared-memory interval table used to
    classify accesses to communication buffers and static segments.

    ``address_intervals`` holds half-open byte ranges [lo, hi) owned by
    non-task entities; addresses outside every interval belong to the
    issuing task.
    """

    entries: dict[EntityId, Partition] = field(default_factory=dict)
    address_intervals: list[tuple[int, int, EntityId]] = field(default_factory=list)

    def __post_init__(self):
        self.address_intervals = sorted(self.address_intervals, key=lambda iv: iv[0])
        self._starts = [iv[0] for iv in self.address_intervals]

    def partition_for(self, entity: EntityId) -> Partition | None:
        return self.entries.get(entity)

    def classify(self, addr: int, issuing_task: EntityId) -> EntityId:
        """Resolve the entity owning ``addr``: interval owner if any,
        else the issuing task."""
        pos = bisect_right(self._starts, addr) - 1
        if pos >= 0:
            lo, hi, owner = self.address_intervals[pos]
            if lo <= addr < hi:
                return owner
        return issuing_task

    def interval_arrays(self, entity_index: dict[EntityId, int]):
        """Interval bounds and owner indices as arrays for vector classify."""
        starts = np.array([iv[0] for iv in self.address_intervals], dtype=np.uint64)
        ends = np.array([iv[1] for iv in self.address_intervals], dtype=np.uint64)
        owners = np.array(
            [entity_index[iv[2]] for iv in self.address_intervals], dtype=np.int32
        )
        return starts, ends, owners

    def validate(self, config: CacheConfig) -> list[str]:
        """Check every invariant; returns all violations, not just the first.

        Checks: power-of-two sizes, base alignment, ranges inside
        [0, num_sets), pairwise-disjoint ranges, total size within the
        set budget, and pairwise-disjoint address intervals.
        """
        violations: list[str] = []
        for entity, part in sorted(self.entries.items(), key=lambda kv: kv[0].sort_key):
            if not is_pow2(part.size_sets):
                violations.append(f"{entity}: size_sets {part.size_sets} is not a power of two")
                continue
            if part.base_set % part.size_sets != 0:
                violations.append(
                    f"{entity}: base_set {part.base_set} is not aligned to size {part.size_sets}"
                )
            if part.base_set < 0 or part.end_set > config.num_sets:
                violations.append(
                    f"{entity}: range [{part.base_set}, {part.end_set}) outside "
                    f"[0, {config.num_sets})"
                )
        ranges = sorted(
            (part.base_set, part.end_set, entity)
            for entity, part in self.entries.items()
            if is_pow2(part.size_sets)
        )
        for (lo_a, hi_a, ent_a), (lo_b, hi_b, ent_b) in zip(ranges, ranges[1:]):
            if lo_b < hi_a:
                violations.append(f"partitions of {ent_a} and {ent_b} overlap")
        total = sum(part.size_sets for part in self.entries.values())
        if total > config.num_sets:
            violations.append(f"allocated sets {total} exceed budget {config.num_sets}")
        for (lo_a, hi_a, ent_a), (lo_b, hi_b, ent_b) in zip(
            self.address_intervals, self.address_intervals[1:]
        ):
            if lo_b < hi_a:
                violations.append(f"address intervals of {ent_a} and {ent_b} overlap")
        return violations


def validate_partition_table(table: PartitionTable, config: CacheConfig) -> list[str]:
    """Module-level alias for :meth:`PartitionTable.validate`."""
    return table.validate(config)


def classify_addresses(
    addrs: np.ndarray,
    issuer_idx: np.ndarray,
    table: PartitionTable,
    entity_index: dict[EntityId, int],
) -> np.ndarray:
    """Vectorized classify: per-access entity index for a whole trace."""
    if not table.address_intervals:
        return issuer_idx.astype(np.int32, copy=True)
    starts, ends, owners = table.interval_arrays(entity_index)
    pos = np.searchsorted(starts, addrs, side="right").astype(np.int64) - 1
    clipped = np.maximum(pos, 0)
    inside = (pos >= 0) & (addrs < ends[clipped])
    return np.where(inside, owners[clipped], issuer_idx).astype(np.int32)
