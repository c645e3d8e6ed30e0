from .config import (
    COLD_MISS,
    ENTITY_KINDS,
    FIFO,
    FRAME_BUFFER,
    HIT,
    OS,
    REPLACEMENT_MISS,
    STATIC_SEGMENT,
    TASK,
    AccessOutcome,
    CacheConfig,
    EntityId,
    entity_sort_key,
    is_pow2,
)
from .kernel import ReplayResult, active_backend, available_backends, replay_trace
from .partition import (
    Partition,
    PartitionTable,
    classify_addresses,
    decompose_address,
    translate_index,
    validate_partition_table,
)
from .state import CacheState, EntityCounters

__all__ = [
    "AccessOutcome",
    "CacheConfig",
    "CacheState",
    "EntityCounters",
    "EntityId",
    "Partition",
    "PartitionTable",
    "ReplayResult",
    "COLD_MISS",
    "ENTITY_KINDS",
    "FIFO",
    "FRAME_BUFFER",
    "HIT",
    "OS",
    "REPLACEMENT_MISS",
    "STATIC_SEGMENT",
    "TASK",
    "active_backend",
    "available_backends",
    "classify_addresses",
    "decompose_address",
    "entity_sort_key",
    "is_pow2",
    "replay_trace",
    "translate_index",
    "validate_partition_table",
]
