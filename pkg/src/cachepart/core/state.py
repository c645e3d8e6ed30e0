"""Reference cache model: per-set LRU lists driven one access at a time.

This is the readable, obviously-correct implementation. The batch replay
kernels in :mod:`cachepart.core.kernel` must agree with it access for
access; tests enforce that.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnpartitionedEntityError
from .config import COLD_MISS, HIT, REPLACEMENT_MISS, AccessOutcome, CacheConfig, EntityId
from .partition import PartitionTable, translate_index


@dataclass
class EntityCounters:
    hits: int = 0
    cold_misses: int = 0
    replacement_misses: int = 0

    @property
    def misses(self) -> int:
        return self.cold_misses + self.replacement_misses

    @property
    def accesses(self) -> int:
        return self.hits + self.misses


class CacheState:
    """Mutable cache contents for one simulation.

    ``table=None`` selects shared mode: conventional indexing, no
    partition lookup, and the unpartitioned-entity check disabled.
    Lines are (line_addr, entity) pairs, most recently used first; cold
    misses are keyed on (entity, line_addr) over the whole run.
    """

    def __init__(self, config: CacheConfig, table: PartitionTable | None = None):
        self.config = config
        self.table = table
        self.sets: list[list[tuple[int, EntityId]]] = [[] for _ in range(config.num_sets)]
        self.counters: dict[EntityId, EntityCounters] = {}
        self.attribution: dict[tuple[EntityId, EntityId], int] = {}
        self._seen: set[tuple[EntityId, int]] = set()

    @property
    def shared_mode(self) -> bool:
        return self.table is None

    def _counters(self, entity: EntityId) -> EntityCounters:
        counters = self.counters.get(entity)
        if counters is None:
            counters = self.counters[entity] = EntityCounters()
        return counters

    def access(self, addr: int, issuing_task: EntityId) -> AccessOutcome:
        """Probe the cache for ``addr``; update LRU order and counters."""
        config = self.config
        line_addr = addr >> config.line_bits
        conventional = line_addr & config.index_mask
        if self.table is None:
            entity = issuing_task
            physical = conventional
        else:
            entity = self.table.classify(addr, issuing_task)
            partition = self.table.partition_for(entity)
            if partition is None:
                raise UnpartitionedEntityError(entity)
            physical = translate_index(conventional, partition)

        lines = self.sets[physical]
        counters = self._counters(entity)
        key = (line_addr, entity)
        for pos, line in enumerate(lines):
            if line == key:
                del lines[pos]
                lines.insert(0, key)
                counters.hits += 1
                return AccessOutcome(HIT, entity, physical, line_addr)

        cold = (entity, line_addr) not in self._seen
        self._seen.add((entity, line_addr))
        evicted = None
        if len(lines) >= config.associativity:
            victim_line, victim_owner = lines.pop()
            evicted = (victim_line, victim_owner)
            pair = (entity, victim_owner)
            self.attribution[pair] = self.attribution.get(pair, 0) + 1
        lines.insert(0, key)
        if cold:
            counters.cold_misses += 1
            return AccessOutcome(COLD_MISS, entity, physical, line_addr, evicted)
        counters.replacement_misses += 1
        return AccessOutcome(REPLACEMENT_MISS, entity, physical, line_addr, evicted)

    def total_accesses(self) -> int:
        return sum(c.accesses for c in self.counters.values())

    def total_misses(self) -> int:
        return sum(c.misses for c in self.counters.values())
