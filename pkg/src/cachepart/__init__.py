"""cachepart: trace-driven simulation and optimization of exclusive
set partitioning for a shared last-level cache.

The cache model assigns contiguous, power-of-two-aligned ranges of sets
exclusively to tasks and to their communication buffers, which makes
each entity's miss count independent of co-scheduled traffic. The
package bundles the cache model, a Kahn-process-network style workload
generator and scheduler, a solo-run miss-curve profiler, an exact
multiple-choice-knapsack partition optimizer, a throughput model, and an
experiment harness with a CLI.
"""

from .analyzer import (
    CompositionalityReport,
    ExperimentResult,
    ModeComparison,
    compare_modes,
    fifo_hit_check,
    run_experiment,
    run_experiment_on_trace,
    verify_compositionality,
)
from .configfile import ExperimentConfig, bundled_config_path
from .core import (
    AccessOutcome,
    CacheConfig,
    CacheState,
    EntityId,
    Partition,
    PartitionTable,
    active_backend,
    available_backends,
    decompose_address,
    replay_trace,
    translate_index,
    validate_partition_table,
)
from .optimizer import (
    PartitionAssignment,
    ThroughputModel,
    optimize_throughput,
    power_objective,
    predict_total_misses,
    processor_time,
    solve_min_misses,
)
from .profiler import (
    CostModel,
    MissCurve,
    SizeLadder,
    measure_execution_proxy,
    measure_miss_curve,
    profile_graph,
)
from .workload import (
    FifoSpec,
    FrameBufferSpec,
    SchedulePolicy,
    SegmentSpec,
    StaticAssignment,
    TaskGraph,
    TaskSpec,
    Trace,
    fifo_partition_size,
    generate_task_trace,
    schedule,
)

__version__ = "0.1.0"
