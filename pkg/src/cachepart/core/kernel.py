"""Replay backend selection and the batch trace-replay entry point.

The compiled Cython kernel is preferred when the extension was built;
otherwise the pure-Python kernel is used. Set ``CACHEPART_PURE_PY=1`` to
force the fallback regardless.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import UnpartitionedEntityError
from .config import CacheConfig, EntityId
from .partition import Partition
from . import _pykernel

try:
    from . import _ckernel
except ImportError:
    _ckernel = None

_BACKENDS = {"pure": _pykernel}
if _ckernel is not None:
    _BACKENDS["compiled"] = _ckernel

_FORCE_PURE = os.environ.get("CACHEPART_PURE_PY", "") not in ("", "0")
DEFAULT_BACKEND = "compiled" if (_ckernel is not None and not _FORCE_PURE) else "pure"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return DEFAULT_BACKEND


def _impl(backend: str | None):
    name = backend or DEFAULT_BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}") from None


@dataclass
class ReplayResult:
    """Aggregated outcome of one batch replay."""

    entities: tuple[EntityId, ...]
    counts: np.ndarray        # (E, 3): hits, cold misses, replacement misses
    attribution: np.ndarray   # (E, E): evictor x victim eviction counts
    codes: np.ndarray | None  # (n,) uint8 outcome per access, if requested
    backend: str

    def index_of(self, entity: EntityId) -> int:
        return self.entities.index(entity)

    def counters(self, entity: EntityId) -> tuple[int, int, int]:
        row = self.counts[self.index_of(entity)]
        return int(row[0]), int(row[1]), int(row[2])

    def misses(self, entity: EntityId) -> int:
        row = self.counts[self.index_of(entity)]
        return int(row[1] + row[2])

    @property
    def total_accesses(self) -> int:
        return int(self.counts.sum())

    @property
    def total_misses(self) -> int:
        return int(self.counts[:, 1:].sum())

    @property
    def total_hits(self) -> int:
        return int(self.counts[:, 0].sum())

    def off_diagonal_evictions(self) -> int:
        return int(self.attribution.sum() - np.trace(self.attribution))


def replay_trace(
    config: CacheConfig,
    entities: tuple[EntityId, ...],
    partitions: dict[EntityId, Partition] | None,
    addrs: np.ndarray,
    entity_idx: np.ndarray,
    *,
    want_codes: bool = False,
    backend: str | None = None,
) -> ReplayResult:
    """Replay a classified trace and return per-entity counters.

    ``partitions=None`` selects shared mode (conventional indexing for
    every entity). In partitioned mode every entity that appears in
    ``entity_idx`` must have a partition entry.
    """
    impl = _impl(backend)
    num_entities = len(entities)
    base_sets = np.full(num_entities, -1, dtype=np.int64)
    size_masks = np.zeros(num_entities, dtype=np.int64)
    if partitions is not None:
        missing = [e for e in entities if e not in partitions]
        if missing:
            present = np.unique(entity_idx)
            for pos in present.tolist():
                if entities[pos] in missing:
                    raise UnpartitionedEntityError(entities[pos])
        for pos, entity in enumerate(entities):
            part = partitions.get(entity)
            if part is not None:
                base_sets[pos] = part.base_set
                size_masks[pos] = part.mask

    addrs = np.ascontiguousarray(addrs, dtype=np.uint64)
    entity_idx = np.ascontiguousarray(entity_idx, dtype=np.int32)
    counts = np.zeros((num_entities, 3), dtype=np.int64)
    attribution = np.zeros((num_entities, num_entities), dtype=np.int64)
    codes = np.zeros(len(addrs), dtype=np.uint8)
    impl.simulate(
        addrs, entity_idx, base_sets, size_masks,
        config.line_bits, config.num_sets, config.associativity,
        counts, attribution, codes,
    )
    return ReplayResult(
        entities=tuple(entities),
        counts=counts,
        attribution=attribution,
        codes=codes if want_codes else None,
        backend=backend or DEFAULT_BACKEND,
    )
