"""Exception types shared across the package."""


class SimulatorError(Exception):
    """Base class for all cachepart errors."""


class ConfigError(SimulatorError):
    """Invalid experiment configuration; message carries file/line context."""


class UnpartitionedEntityError(SimulatorError):
    """An access resolved to an entity that has no partition entry."""

    def __init__(self, entity):
        super().__init__(f"entity {entity} has no partition entry")
        self.entity = entity


class InfeasibleError(SimulatorError):
    """No assignment satisfies the set-budget constraint."""


class CurveGapError(SimulatorError):
    """A miss curve does not cover every ladder size."""


class DeadlockError(SimulatorError):
    """FIFO blocking constraints cannot all be satisfied."""


class SearchSpaceExceededError(SimulatorError):
    """Exact throughput search would exceed the configured state limit."""


class TraceFormatError(SimulatorError):
    """A trace file failed to parse; message carries the line number."""
