from .generate import (
    ProgramStep,
    TaskProgram,
    build_program,
    entity_stream,
    generate_fifo_traffic,
    generate_task_trace,
)
from .graph import (
    FifoSpec,
    FrameBufferSpec,
    SegmentSpec,
    SegmentTouch,
    TaskGraph,
    TaskSpec,
    buffer_partition_size,
    fifo_partition_size,
)
from .schedule import (
    ROUND_ROBIN,
    RUN_TO_COMPLETION,
    SchedulePolicy,
    Slice,
    StaticAssignment,
    schedule,
)
from .trace import Trace, read_trace, write_trace

__all__ = [
    "FifoSpec",
    "FrameBufferSpec",
    "ProgramStep",
    "ROUND_ROBIN",
    "RUN_TO_COMPLETION",
    "SchedulePolicy",
    "SegmentSpec",
    "SegmentTouch",
    "Slice",
    "StaticAssignment",
    "TaskGraph",
    "TaskProgram",
    "TaskSpec",
    "Trace",
    "buffer_partition_size",
    "build_program",
    "entity_stream",
    "fifo_partition_size",
    "generate_fifo_traffic",
    "generate_task_trace",
    "read_trace",
    "schedule",
    "write_trace",
]
