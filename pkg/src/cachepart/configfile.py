"""Experiment configuration: a keyed, line-oriented text format.

Scalar settings are ``key = value`` lines; entities are declared with
``task``, ``fifo``, ``frame``, ``segment``, ``touch``, ``assign`` and
``pin`` lines carrying ``key=value`` attributes. ``#`` starts a comment.
Every diagnostic names the source and line.

Example::

    cache.line_bytes = 64
    cache.sets = 64
    cache.assoc = 2
    ladder = 1 2 4 8 16 32
    processors = 1
    policy = round_robin
    quantum = 1
    periods = 2
    seeds = 0
    mode = both

    task 0 base=0x0 ws=4096 accesses=512 stride=64 mix=0/1/0 seed=11
    task 1 base=0x10000 ws=4096 accesses=512 stride=64 mix=0/1/0 seed=12
    fifo 0 from=0 to=1 base=0x100000 capacity=2048 token=256 word=64
    segment appl_data base=0x200000 size=2048 pin=2
    touch task=0 segment=appl_data accesses=16 stride=64
    assign task=0 proc=0
    pin fifo:0 = 4
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .core.config import OS, STATIC_SEGMENT, CacheConfig, EntityId
from .errors import ConfigError
from .profiler import CostModel, SizeLadder
from .workload.graph import (
    FifoSpec,
    FrameBufferSpec,
    SegmentSpec,
    SegmentTouch,
    TaskGraph,
    TaskSpec,
)
from .workload.schedule import ROUND_ROBIN, RUN_TO_COMPLETION, SchedulePolicy, StaticAssignment

MODES = ("shared", "partitioned", "both")

_SCALAR_KEYS = {
    "name", "cache.line_bytes", "cache.sets", "cache.assoc", "ladder",
    "processors", "policy", "quantum", "periods", "seeds", "mode",
    "cost.hit", "cost.miss", "t_switch", "t_idle",
}

_POLICY_ALIASES = {
    "round_robin": ROUND_ROBIN,
    "rr": ROUND_ROBIN,
    "run_to_completion": RUN_TO_COMPLETION,
    "rtc": RUN_TO_COMPLETION,
}


def _int(text: str) -> int:
    return int(text, 0)


@dataclass
class ExperimentConfig:
    """Parsed, validated experiment description."""

    name: str
    cache: CacheConfig
    ladder: SizeLadder
    graph: TaskGraph
    processors: int = 1
    policy: SchedulePolicy = SchedulePolicy(ROUND_ROBIN, 1)
    periods: int = 1
    seeds: tuple[int, ...] = (0,)
    mode: str = "both"
    cost_model: CostModel = CostModel()
    t_switch: float = 0.0
    t_idle: float = 0.0
    assignments: dict[int, int] = field(default_factory=dict)
    pins: dict[EntityId, int] = field(default_factory=dict)

    def static_assignment(self) -> StaticAssignment:
        """Configured task placement; unassigned tasks round-robin by id."""
        processor_of = {}
        for pos, task in enumerate(self.graph.tasks):
            processor_of[task.task_id] = self.assignments.get(
                task.task_id, pos % self.processors
            )
        return StaticAssignment(processor_of, self.processors)

    @classmethod
    def parse_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.parse_text(text, source=str(path))

    @classmethod
    def parse_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        return _Parser(source).parse(text)


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (two_task_demo,
    adversarial_pair, pipeline_kpn)."""
    from importlib.resources import files

    path = Path(str(files("cachepart") / "configs" / f"{name}.cfg"))
    if not path.exists():
        raise ConfigError(f"no bundled config named {name!r}")
    return path


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.scalars: dict[str, str] = {}
        self.scalar_lines: dict[str, int] = {}
        self.tasks: dict[int, dict] = {}
        self.fifos: list[FifoSpec] = []
        self.frames: list[FrameBufferSpec] = []
        self.segments: list[SegmentSpec] = []
        self.touches: list[tuple[int, SegmentTouch, int]] = []
        self.assigns: dict[int, int] = {}
        self.pin_lines: list[tuple[str, int, int]] = []

    def fail(self, lineno: int, message: str):
        raise ConfigError(f"{self.source}:{lineno}: {message}")

    def parse(self, text: str) -> ExperimentConfig:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head = line.split(None, 1)[0]
            if head in ("task", "fifo", "frame", "segment", "touch", "assign", "pin"):
                getattr(self, f"_parse_{head}")(lineno, line)
            elif "=" in line:
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in _SCALAR_KEYS:
                    self.fail(lineno, f"unknown setting {key!r}")
                if key in self.scalars:
                    self.fail(lineno, f"duplicate setting {key!r}")
                self.scalars[key] = value
                self.scalar_lines[key] = lineno
            else:
                self.fail(lineno, f"cannot parse line {line!r}")
        return self.build()

    def _attrs(self, lineno: int, parts, allowed, required):
        attrs = {}
        for part in parts:
            key, eq, value = part.partition("=")
            if not eq:
                self.fail(lineno, f"expected key=value, got {part!r}")
            if key not in allowed:
                self.fail(lineno, f"unknown attribute {key!r}")
            if key in attrs:
                self.fail(lineno, f"duplicate attribute {key!r}")
            attrs[key] = value
        for key in required:
            if key not in attrs:
                self.fail(lineno, f"missing attribute {key!r}")
        return attrs

    def _parse_task(self, lineno: int, line: str):
        parts = line.split()
        if len(parts) < 2:
            self.fail(lineno, "task line needs an id")
        try:
            task_id = _int(parts[1])
        except ValueError:
            self.fail(lineno, f"bad task id {parts[1]!r}")
        if task_id in self.tasks:
            self.fail(lineno, f"duplicate task {task_id}")
        attrs = self._attrs(
            lineno, parts[2:],
            allowed={"base", "ws", "accesses", "stride", "mix", "write", "seed", "word"},
            required={"base", "ws", "accesses"},
        )
        try:
            mix = (0.0, 1.0, 0.0)
            if "mix" in attrs:
                fractions = attrs["mix"].split("/")
                if len(fractions) != 3:
                    raise ValueError("mix needs scan/loop/random fractions")
                mix = tuple(float(f) for f in fractions)
            spec = dict(
                task_id=task_id,
                base_addr=_int(attrs["base"]),
                working_set_bytes=_int(attrs["ws"]),
                period_accesses=_int(attrs["accesses"]),
                stride=_int(attrs.get("stride", "64")),
                mix=mix,
                write_fraction=float(attrs.get("write", "0.25")),
                seed=_int(attrs.get("seed", "0")),
                word_bytes=_int(attrs.get("word", "4")),
            )
        except ValueError as exc:
            self.fail(lineno, str(exc))
        self.tasks[task_id] = {"spec": spec, "lineno": lineno}

    def _parse_fifo(self, lineno: int, line: str):
        parts = line.split()
        if len(parts) < 2:
            self.fail(lineno, "fifo line needs an id")
        attrs = self._attrs(
            lineno, parts[2:],
            allowed={"from", "to", "base", "capacity", "token", "word", "tpp"},
            required={"from", "to", "base", "capacity", "token"},
        )
        try:
            self.fifos.append(
                FifoSpec(
                    fifo_id=_int(parts[1]),
                    producer=_int(attrs["from"]),
                    consumer=_int(attrs["to"]),
                    base_addr=_int(attrs["base"]),
                    capacity_bytes=_int(attrs["capacity"]),
                    token_bytes=_int(attrs["token"]),
                    word_bytes=_int(attrs.get("word", "4")),
                    tokens_per_period=_int(attrs.get("tpp", "1")),
                )
            )
        except ValueError as exc:
            self.fail(lineno, str(exc))

    def _parse_frame(self, lineno: int, line: str):
        parts = line.split()
        if len(parts) < 2:
            self.fail(lineno, "frame line needs an id")
        attrs = self._attrs(
            lineno, parts[2:],
            allowed={"from", "to", "base", "size", "word"},
            required={"from", "to", "base", "size"},
        )
        try:
            self.frames.append(
                FrameBufferSpec(
                    frame_id=_int(parts[1]),
                    producer=_int(attrs["from"]),
                    consumer=_int(attrs["to"]),
                    base_addr=_int(attrs["base"]),
                    size_bytes=_int(attrs["size"]),
                    word_bytes=_int(attrs.get("word", "4")),
                )
            )
        except ValueError as exc:
            self.fail(lineno, str(exc))

    def _parse_segment(self, lineno: int, line: str):
        parts = line.split()
        if len(parts) < 2:
            self.fail(lineno, "segment line needs a name")
        name = parts[1]
        if any(seg.name == name for seg in self.segments):
            self.fail(lineno, f"duplicate segment {name!r}")
        attrs = self._attrs(
            lineno, parts[2:],
            allowed={"base", "size", "kind", "pin"},
            required={"base", "size"},
        )
        kind_text = attrs.get("kind", "static")
        kind = {"static": STATIC_SEGMENT, "os": OS}.get(kind_text)
        if kind is None:
            self.fail(lineno, f"segment kind must be 'static' or 'os', got {kind_text!r}")
        index = sum(1 for seg in self.segments if seg.kind == kind)
        try:
            self.segments.append(
                SegmentSpec(
                    name=name,
                    base_addr=_int(attrs["base"]),
                    size_bytes=_int(attrs["size"]),
                    kind=kind,
                    index=index,
                    pinned_sets=_int(attrs["pin"]) if "pin" in attrs else None,
                )
            )
        except ValueError as exc:
            self.fail(lineno, str(exc))

    def _parse_touch(self, lineno: int, line: str):
        attrs = self._attrs(
            lineno, line.split()[1:],
            allowed={"task", "segment", "accesses", "stride"},
            required={"task", "segment", "accesses"},
        )
        try:
            touch = SegmentTouch(
                segment=attrs["segment"],
                accesses=_int(attrs["accesses"]),
                stride=_int(attrs.get("stride", "64")),
            )
            self.touches.append((_int(attrs["task"]), touch, lineno))
        except ValueError as exc:
            self.fail(lineno, str(exc))

    def _parse_assign(self, lineno: int, line: str):
        attrs = self._attrs(
            lineno, line.split()[1:], allowed={"task", "proc"}, required={"task", "proc"}
        )
        try:
            self.assigns[_int(attrs["task"])] = _int(attrs["proc"])
        except ValueError as exc:
            self.fail(lineno, str(exc))

    def _parse_pin(self, lineno: int, line: str):
        body = line[len("pin"):].strip()
        ref, eq, value = body.partition("=")
        if not eq:
            self.fail(lineno, "pin line needs '<entity> = <sets>'")
        try:
            self.pin_lines.append((ref.strip(), _int(value.strip()), lineno))
        except ValueError as exc:
            self.fail(lineno, str(exc))

    # -- assembly ---------------------------------------------------------

    def _require(self, key: str) -> str:
        if key not in self.scalars:
            raise ConfigError(f"{self.source}: missing required setting {key!r}")
        return self.scalars[key]

    def _scalar_int(self, key: str, default: int | None = None) -> int:
        if key not in self.scalars:
            if default is None:
                raise ConfigError(f"{self.source}: missing required setting {key!r}")
            return default
        try:
            return _int(self.scalars[key])
        except ValueError:
            self.fail(self.scalar_lines[key], f"{key} must be an integer")

    def _scalar_float(self, key: str, default: float) -> float:
        if key not in self.scalars:
            return default
        try:
            return float(self.scalars[key])
        except ValueError:
            self.fail(self.scalar_lines[key], f"{key} must be a number")

    def build(self) -> ExperimentConfig:
        try:
            cache = CacheConfig(
                line_size_bytes=self._scalar_int("cache.line_bytes"),
                num_sets=self._scalar_int("cache.sets"),
                associativity=self._scalar_int("cache.assoc"),
            )
        except ValueError as exc:
            raise ConfigError(f"{self.source}: {exc}") from None

        ladder_text = self._require("ladder")
        try:
            ladder = SizeLadder(tuple(_int(tok) for tok in ladder_text.split()))
        except ValueError as exc:
            self.fail(self.scalar_lines["ladder"], str(exc))
        try:
            ladder.validate_against(cache)
        except ConfigError as exc:
            self.fail(self.scalar_lines["ladder"], str(exc))

        if not self.tasks:
            raise ConfigError(f"{self.source}: no tasks declared")
        for task_id, touch, lineno in self.touches:
            if task_id not in self.tasks:
                self.fail(lineno, f"touch references missing task {task_id}")
            if not any(seg.name == touch.segment for seg in self.segments):
                self.fail(lineno, f"touch references missing segment {touch.segment!r}")

        task_specs = []
        for task_id, record in sorted(self.tasks.items()):
            touches = tuple(t for tid, t, _ln in self.touches if tid == task_id)
            try:
                task_specs.append(TaskSpec(touches=touches, **record["spec"]))
            except ValueError as exc:
                self.fail(record["lineno"], str(exc))

        try:
            graph = TaskGraph(task_specs, self.fifos, self.frames, self.segments)
        except ConfigError as exc:
            raise ConfigError(f"{self.source}: {exc}") from None

        processors = self._scalar_int("processors", 1)
        if processors < 1:
            self.fail(self.scalar_lines["processors"], "processors must be >= 1")
        for task_id, proc in self.assigns.items():
            if task_id not in self.tasks:
                raise ConfigError(f"{self.source}: assign references missing task {task_id}")
            if not 0 <= proc < processors:
                raise ConfigError(
                    f"{self.source}: task {task_id} assigned to invalid processor {proc}"
                )

        policy_text = self.scalars.get("policy", "round_robin")
        kind = _POLICY_ALIASES.get(policy_text)
        if kind is None:
            self.fail(self.scalar_lines["policy"], f"unknown policy {policy_text!r}")
        quantum = self._scalar_int("quantum", 1)
        try:
            policy = SchedulePolicy(kind, quantum if kind == ROUND_ROBIN else None)
        except ValueError as exc:
            raise ConfigError(f"{self.source}: {exc}") from None

        mode = self.scalars.get("mode", "both")
        if mode not in MODES:
            self.fail(self.scalar_lines["mode"], f"mode must be one of {MODES}")

        seeds_text = self.scalars.get("seeds", "0")
        try:
            seeds = tuple(_int(tok) for tok in seeds_text.split())
        except ValueError:
            self.fail(self.scalar_lines["seeds"], "seeds must be integers")
        if not seeds:
            self.fail(self.scalar_lines["seeds"], "at least one seed is required")

        pins: dict[EntityId, int] = {}
        for ref, size, lineno in self.pin_lines:
            entity = self._resolve_entity(ref, graph, lineno)
            pins[entity] = size

        try:
            cost_model = CostModel(
                hit_cost=self._scalar_float("cost.hit", 1.0),
                miss_cost=self._scalar_float("cost.miss", 50.0),
            )
        except ValueError as exc:
            raise ConfigError(f"{self.source}: {exc}") from None

        return ExperimentConfig(
            name=self.scalars.get("name", Path(self.source).stem),
            cache=cache,
            ladder=ladder,
            graph=graph,
            processors=processors,
            policy=policy,
            periods=self._scalar_int("periods", 1),
            seeds=seeds,
            mode=mode,
            cost_model=cost_model,
            t_switch=self._scalar_float("t_switch", 0.0),
            t_idle=self._scalar_float("t_idle", 0.0),
            assignments=self.assigns,
            pins=pins,
        )

    def _resolve_entity(self, ref: str, graph: TaskGraph, lineno: int) -> EntityId:
        kind, _, ident = ref.partition(":")
        if not ident:
            self.fail(lineno, f"entity reference {ref!r} needs kind:id")
        try:
            if kind == "segment":
                return graph.segment(ident).entity
            if kind in ("task", "fifo", "frame", "frame_buffer"):
                kind_name = "frame_buffer" if kind.startswith("frame") else kind
                entity = EntityId(kind_name, int(ident))
                if entity not in graph.entities():
                    raise KeyError(ref)
                return entity
        except (KeyError, ValueError):
            pass
        self.fail(lineno, f"unknown entity reference {ref!r}")
