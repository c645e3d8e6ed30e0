"""Trace representation and the on-disk trace format.

One record per line: ``<seq> <task_id> <R|W> <hex address>``. Lines
beginning with ``#`` carry ``key value`` metadata and may only appear
before the first record.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TraceFormatError


@dataclass
class Trace:
    """Ordered access records; replay is deterministic."""

    task_ids: np.ndarray  # int32, issuing task per record
    addrs: np.ndarray     # uint64 byte addresses
    is_write: np.ndarray  # bool

    def __post_init__(self):
        self.task_ids = np.asarray(self.task_ids, dtype=np.int32)
        self.addrs = np.asarray(self.addrs, dtype=np.uint64)
        self.is_write = np.asarray(self.is_write, dtype=np.bool_)
        if not (len(self.task_ids) == len(self.addrs) == len(self.is_write)):
            raise ValueError("trace column lengths differ")

    def __len__(self) -> int:
        return len(self.addrs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Trace)
            and np.array_equal(self.task_ids, other.task_ids)
            and np.array_equal(self.addrs, other.addrs)
            and np.array_equal(self.is_write, other.is_write)
        )

    def for_task(self, task_id: int) -> "Trace":
        mask = self.task_ids == task_id
        return Trace(self.task_ids[mask], self.addrs[mask], self.is_write[mask])

    @classmethod
    def empty(cls) -> "Trace":
        return cls(
            np.zeros(0, dtype=np.int32),
            np.zeros(0, dtype=np.uint64),
            np.zeros(0, dtype=np.bool_),
        )

    @classmethod
    def concat(cls, traces) -> "Trace":
        traces = list(traces)
        if not traces:
            return cls.empty()
        return cls(
            np.concatenate([t.task_ids for t in traces]),
            np.concatenate([t.addrs for t in traces]),
            np.concatenate([t.is_write for t in traces]),
        )

    @classmethod
    def from_records(cls, records) -> "Trace":
        """Build from an iterable of (task_id, addr, is_write)."""
        records = list(records)
        return cls(
            np.array([r[0] for r in records], dtype=np.int32),
            np.array([r[1] for r in records], dtype=np.uint64),
            np.array([r[2] for r in records], dtype=np.bool_),
        )


def write_trace(trace: Trace, path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# cachepart-trace 1\n")
        for key, value in (header or {}).items():
            fh.write(f"# {key} {value}\n")
        tids = trace.task_ids.tolist()
        addrs = trace.addrs.tolist()
        writes = trace.is_write.tolist()
        for seq in range(len(trace)):
            rw = "W" if writes[seq] else "R"
            fh.write(f"{seq} {tids[seq]} {rw} 0x{addrs[seq]:x}\n")


def read_trace(path) -> tuple[Trace, dict]:
    header: dict[str, str] = {}
    tids: list[int] = []
    addrs: list[int] = []
    writes: list[bool] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if tids:
                    raise TraceFormatError(f"{path}:{lineno}: header line after records")
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2:
                    header[parts[0]] = parts[1]
                continue
            fields = line.split()
            if len(fields) != 4:
                raise TraceFormatError(
                    f"{path}:{lineno}: expected '<seq> <task> <R|W> <hex addr>', got {line!r}"
                )
            seq_s, task_s, rw, addr_s = fields
            try:
                seq = int(seq_s)
                task = int(task_s)
                addr = int(addr_s, 16)
            except ValueError as exc:
                raise TraceFormatError(f"{path}:{lineno}: {exc}") from None
            if rw not in ("R", "W"):
                raise TraceFormatError(f"{path}:{lineno}: bad access type {rw!r}")
            if seq != len(tids):
                raise TraceFormatError(
                    f"{path}:{lineno}: sequence number {seq} out of order (expected {len(tids)})"
                )
            tids.append(task)
            addrs.append(addr)
            writes.append(rw == "W")
    trace = Trace(
        np.array(tids, dtype=np.int32),
        np.array(addrs, dtype=np.uint64),
        np.array(writes, dtype=np.bool_),
    )
    return trace, header
