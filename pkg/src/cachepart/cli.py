"""Command-line front end: profile, optimize, run, check.

All report files are deterministic functions of the configuration and
seeds (no timestamps) and are written atomically, so re-running an
experiment reproduces them byte for byte.

Exit codes: 0 success, 2 configuration error, 3 infeasible allocation,
4 invariant violation (nonzero compositionality headline).
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import analyzer
from .configfile import ExperimentConfig
from .core.config import EntityId, entity_sort_key
from .errors import ConfigError, InfeasibleError, SimulatorError, TraceFormatError
from .optimizer import (
    PartitionAssignment,
    ThroughputModel,
    processor_time,
    solve_min_misses,
)
from .profiler import (
    SizeLadder,
    build_execution_table,
    profile_graph,
    read_curves,
    write_curves,
)
from .workload.generate import entity_stream
from .workload.schedule import schedule
from .workload.trace import read_trace, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VIOLATION = 4


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- report formats --------------------------------------------------------

def format_experiment_report(config: ExperimentConfig, result, run_seed: int,
                             periods: int | None = None) -> str:
    lines = [
        "# cachepart-experiment 1",
        f"name = {config.name}",
        f"mode = {result.mode}",
        f"policy = {result.policy_label}",
        f"periods = {config.periods if periods is None else periods}",
        f"run_seed = {run_seed}",
        f"total_accesses = {result.total_accesses}",
        f"total_misses = {result.total_misses}",
        f"miss_rate = {result.miss_rate:.6f}",
    ]
    for entity in sorted(result.entities, key=entity_sort_key):
        hits, cold, repl = result.counters(entity)
        if hits == cold == repl == 0:
            continue
        lines.append(f"entity {entity} hits={hits} cold={cold} repl={repl}")
    order = sorted(range(len(result.entities)), key=lambda i: result.entities[i].sort_key)
    for i in order:
        for j in order:
            count = int(result.attribution[i, j])
            if count:
                lines.append(
                    f"attribution {result.entities[i]} {result.entities[j]} = {count}"
                )
    return "\n".join(lines) + "\n"


def format_assignment_report(
    config: ExperimentConfig, assignment: PartitionAssignment, proc_times: dict[int, float]
) -> str:
    lines = [
        "# cachepart-assignment 1",
        f"name = {config.name}",
        f"budget_sets = {config.cache.num_sets}",
        f"ladder = {' '.join(str(s) for s in assignment.ladder or config.ladder)}",
    ]
    if assignment.predicted_total_misses is not None:
        lines.append(f"predicted_total_misses = {assignment.predicted_total_misses:.6f}")
    for entity in sorted(assignment.sizes, key=entity_sort_key):
        pinned = 1 if entity in assignment.pinned else 0
        lines.append(
            f"entity {entity} size={assignment.sizes[entity]} "
            f"base={assignment.bases[entity]} pinned={pinned}"
        )
    for entity, row in assignment.x_matrix().items():
        if row:
            lines.append(f"x {entity} = {' '.join(str(v) for v in row)}")
    for proc in sorted(proc_times):
        lines.append(f"E p{proc} = {proc_times[proc]:.6f}")
    return "\n".join(lines) + "\n"


def parse_assignment_file(path) -> PartitionAssignment:
    sizes: dict[EntityId, int] = {}
    bases: dict[EntityId, int] = {}
    pinned = set()
    ladder = None
    predicted = None
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("entity "):
            parts = line.split()
            try:
                entity = EntityId.parse(parts[1])
                attrs = dict(p.split("=", 1) for p in parts[2:])
                sizes[entity] = int(attrs["size"])
                bases[entity] = int(attrs["base"])
                if attrs.get("pinned") == "1":
                    pinned.add(entity)
            except (ValueError, KeyError, IndexError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad entity line ({exc})") from None
        elif line.startswith("ladder ="):
            ladder = SizeLadder(tuple(int(t) for t in line.split("=", 1)[1].split()))
        elif line.startswith("predicted_total_misses ="):
            predicted = float(line.split("=", 1)[1])
    if not sizes:
        raise ConfigError(f"{path}: no entity lines found")
    return PartitionAssignment(
        sizes=sizes, bases=bases, pinned=frozenset(pinned),
        ladder=ladder, predicted_total_misses=predicted,
    )


def write_fig2(path: Path, shared, partitioned) -> None:
    lines = ["entity,shared_misses,partitioned_misses"]
    for entity in sorted(set(shared.entities) | set(partitioned.entities), key=entity_sort_key):
        s = shared.misses(entity) if entity in shared.entities else 0
        p = partitioned.misses(entity) if entity in partitioned.entities else 0
        if s or p:
            lines.append(f"{entity},{s},{p}")
    atomic_write(path, "\n".join(lines) + "\n")


def write_fig3(path: Path, report) -> None:
    lines = ["task,expected,simulated,delta"]
    for row in report.rows:
        lines.append(f"{row.task},{row.expected:.6f},{row.simulated},{row.delta:.6f}")
    atomic_write(path, "\n".join(lines) + "\n")


# -- shared command plumbing ------------------------------------------------

def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.parse_file(args.config)
    if getattr(args, "seed_list", None):
        config.seeds = tuple(args.seed_list)
    return config


def _attach_accesses(curves, graph, periods: int) -> None:
    # sample CSVs carry only misses; stream lengths are reproducible
    for entity, curve in curves.items():
        length = len(entity_stream(graph, entity, periods, 0))
        for runs in curve.samples.values():
            for sample in runs:
                if sample.accesses < 0:
                    sample.accesses = length


def _fixed_reservations(config: ExperimentConfig) -> dict[EntityId, int]:
    return analyzer.default_fixed_reservations(config.graph, config.cache, config.pins)


def _solve(config: ExperimentConfig, curves) -> PartitionAssignment:
    fixed = _fixed_reservations(config)
    return solve_min_misses(curves, fixed, config.cache.num_sets, config.ladder)


def _derive_assignment(config: ExperimentConfig) -> PartitionAssignment:
    curves = profile_graph(
        config.graph, config.ladder, config.cache, config.seeds, periods=config.periods
    )
    return _solve(config, curves)


# -- subcommands -------------------------------------------------------------

def cmd_check(args) -> int:
    config = _load_config(args)
    graph = config.graph
    print(
        f"ok: {config.name}: {len(graph.tasks)} tasks, {len(graph.fifos)} fifos, "
        f"{len(graph.frames)} frame buffers, {len(graph.segments)} segments, "
        f"{config.cache.num_sets} sets x {config.cache.associativity} ways"
    )
    return EXIT_OK


def cmd_profile(args) -> int:
    config = _load_config(args)
    curves = profile_graph(
        config.graph, config.ladder, config.cache, config.seeds,
        periods=config.periods, jobs=args.jobs,
    )
    samples_path, means_path = write_curves(curves, args.out)
    print(f"wrote {samples_path}")
    print(f"wrote {means_path}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = _load_config(args)
    curves_dir = args.curves or args.out
    curves = read_curves(curves_dir)
    _attach_accesses(curves, config.graph, config.periods)
    assignment = _solve(config, curves)
    static = config.static_assignment()
    e_table = build_execution_table(curves, config.cost_model)
    model = ThroughputModel(e_table, config.t_switch, config.t_idle, config.processors)
    proc_times = {}
    for proc in range(config.processors):
        tasks_on = [EntityId.task(t) for t in static.tasks_on(proc)]
        proc_times[proc] = processor_time(tasks_on, model, assignment)
    out = Path(args.out) / "assignment.txt"
    atomic_write(out, format_assignment_report(config, assignment, proc_times))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_config(args)
    mode = args.mode or config.mode
    outdir = Path(args.out)
    run_seed = config.seeds[0]
    periods = config.periods
    graph, cache = config.graph, config.cache

    if args.trace_in:
        trace, header = read_trace(args.trace_in)
        # solo expectations must use the generation parameters the
        # emitted trace records, not whatever the config says now
        run_seed = int(header.get("run_seed", run_seed))
        periods = int(header.get("periods", periods))
    else:
        static = config.static_assignment()
        trace = schedule(
            graph, static, config.policy, periods=periods, run_seed=run_seed
        )
    if args.trace_out:
        write_trace(
            trace, args.trace_out,
            {"name": config.name, "periods": periods, "run_seed": run_seed},
        )
        print(f"wrote {args.trace_out}")

    assignment = None
    if mode in ("partitioned", "both"):
        if args.assignment:
            assignment = parse_assignment_file(args.assignment)
        else:
            assignment = _derive_assignment(config)

    results = {}
    if mode in ("shared", "both"):
        results["shared"] = analyzer.run_experiment_on_trace(
            graph, trace, cache, None, policy_label=config.policy.label
        )
    if mode in ("partitioned", "both"):
        results["partitioned"] = analyzer.run_experiment_on_trace(
            graph, trace, cache, assignment, policy_label=config.policy.label
        )

    for mode_name, result in results.items():
        path = outdir / f"experiment_{mode_name}.txt"
        atomic_write(path, format_experiment_report(config, result, run_seed, periods))
        print(f"wrote {path}")

    summary = [
        "# cachepart-summary 1",
        f"name = {config.name}",
        f"mode = {mode}",
    ]
    exit_code = EXIT_OK

    if len(results) == 2:
        comparison = analyzer.compare_modes(results["shared"], results["partitioned"])
        write_fig2(outdir / "fig2.csv", results["shared"], results["partitioned"])
        print(f"wrote {outdir / 'fig2.csv'}")
        summary += [
            f"total_shared_misses = {comparison.total_shared}",
            f"total_partitioned_misses = {comparison.total_partitioned}",
            f"miss_ratio_shared_over_partitioned = {comparison.ratio_text}",
        ]
        for entity, delta in comparison.per_entity.items():
            if delta:
                summary.append(f"delta {entity} = {delta}")

    if "partitioned" in results:
        report = analyzer.compositionality_from_result(
            graph, assignment, cache, results["partitioned"],
            periods=periods, run_seed=run_seed,
        )
        write_fig3(outdir / "fig3.csv", report)
        print(f"wrote {outdir / 'fig3.csv'}")
        summary.append(f"compositionality_headline = {report.headline:.6f}")
        summary.append(f"compositionality_max_abs_delta = {report.max_abs_delta():.6f}")
        for entity, check in analyzer.fifo_hit_check(graph, results["partitioned"], cache).items():
            status = "pass" if check.passed else "FAIL"
            summary.append(
                f"fifo {entity} {status} cold={check.cold_misses} "
                f"repl={check.replacement_misses} bound={check.line_bound}"
            )
        if report.headline > 0:
            summary.append("violation = compositionality headline nonzero")
            exit_code = EXIT_VIOLATION

    atomic_write(outdir / "summary.txt", "\n".join(summary) + "\n")
    print(f"wrote {outdir / 'summary.txt'}")
    if exit_code == EXIT_VIOLATION:
        print("error: compositionality violated", file=sys.stderr)
    return exit_code


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachepart",
        description="Trace-driven shared-cache partitioning simulator and optimizer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="experiment config file")
        if out:
            p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed-list", type=int, nargs="+", help="override config seeds")

    p_check = sub.add_parser("check", help="validate a config file")
    common(p_check, out=False)
    p_check.set_defaults(func=cmd_check)

    p_profile = sub.add_parser("profile", help="measure per-entity miss curves")
    common(p_profile)
    p_profile.add_argument("--jobs", type=int, default=1, help="parallel profiling jobs")
    p_profile.set_defaults(func=cmd_profile)

    p_opt = sub.add_parser("optimize", help="solve partition sizes from curves")
    common(p_opt)
    p_opt.add_argument("--curves", help="directory holding curves.csv (default: --out)")
    p_opt.set_defaults(func=cmd_optimize)

    p_run = sub.add_parser("run", help="run the experiment and emit reports")
    common(p_run)
    p_run.add_argument("--mode", choices=("shared", "partitioned", "both"))
    p_run.add_argument("--assignment", help="assignment.txt from 'optimize'")
    p_run.add_argument("--trace-out", help="emit the scheduled global trace")
    p_run.add_argument("--trace-in", help="replay an ingested trace instead of scheduling")
    p_run.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SimulatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
