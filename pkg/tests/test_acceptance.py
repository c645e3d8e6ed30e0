"""Acceptance criteria. Each test enforces one criterion at its stated
tolerance and prints a PASS line (visible with pytest -s or -rA)."""
import random
import time

import numpy as np
import pytest

from cachepart.analyzer import (
    compare_modes,
    default_fixed_reservations,
    fifo_hit_check,
    run_experiment,
    verify_compositionality,
)
from cachepart.cli import EXIT_OK, main as cli_main
from cachepart.configfile import ExperimentConfig, bundled_config_path
from cachepart.core import CacheConfig, EntityId, Partition, replay_trace
from cachepart.errors import InfeasibleError
from cachepart.optimizer import (
    PartitionAssignment,
    ThroughputModel,
    optimize_throughput,
    pack_layout,
    processor_time,
    solve_min_misses,
)
from cachepart.profiler import CurveSample, MissCurve, SizeLadder
from cachepart.workload import (
    FifoSpec,
    FrameBufferSpec,
    SchedulePolicy,
    SegmentSpec,
    SegmentTouch,
    StaticAssignment,
    TaskGraph,
    TaskSpec,
    buffer_partition_size,
)

from oracles import makespan_enumerate, mckp_enumerate_fast, stack_distance_outcomes


def _passed(number, name):
    print(f"ACCEPTANCE {number} ({name}): PASS")


def _next_pow2(n):
    size = 1
    while size < n:
        size *= 2
    return size


# -- 1. LRU oracle equivalence -----------------------------------------------

def test_acceptance_1_lru_oracle_equivalence():
    rng = random.Random(0xCACE)
    entities = tuple(EntityId.task(i) for i in range(3))
    start = time.monotonic()
    for case in range(100):
        num_sets = rng.choice([4, 8, 16, 32, 64])
        assoc = rng.randint(1, 8)
        cfg = CacheConfig(64, num_sets, assoc)
        n = rng.randint(500, 10_000)
        line_space = num_sets * assoc * rng.choice([2, 3, 5])
        addrs = np.array(
            [rng.randrange(line_space) * 64 for _ in range(n)], dtype=np.uint64
        )
        eidx = np.array([rng.randrange(3) for _ in range(n)], dtype=np.int32)
        if case % 2:
            size = max(1, num_sets // 4)
            partitions = {
                entities[0]: Partition(0, size),
                entities[1]: Partition(size, size),
                entities[2]: Partition(2 * size, size),
            }
            oracle_parts = {e: (p.base_set, p.size_sets) for e, p in partitions.items()}
        else:
            partitions = oracle_parts = None
        result = replay_trace(cfg, entities, partitions, addrs, eidx, want_codes=True)
        want = stack_distance_outcomes(
            [(a, entities[e]) for a, e in zip(addrs.tolist(), eidx.tolist())],
            num_sets, assoc, cfg.line_bits, oracle_parts,
        )
        assert result.codes.tolist() == want, f"case {case} diverged from oracle"
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s, budget is 10s"
    _passed(1, "LRU oracle equivalence")


# -- 2. MCKP oracle equivalence -------------------------------------------------

def _curve_from_row(entity, sizes, row):
    curve = MissCurve(entity, tuple(sizes))
    for size, value in zip(sizes, row):
        curve.samples[size] = [CurveSample(0, 10**6, int(value))]
    return curve


def test_acceptance_2_mckp_oracle_equivalence():
    rng = random.Random(0xA11)
    all_sizes = [1, 2, 4, 8, 16, 32]
    start = time.monotonic()
    infeasible = 0
    for case in range(500):
        n = rng.randint(1, 8)
        k = rng.randint(1, 6)
        sizes = all_sizes[:k]
        ladder = SizeLadder(tuple(sizes))
        costs = [[rng.randint(0, 1000) for _ in range(k)] for _ in range(n)]
        budget = rng.randint(max(1, n - 2), n * sizes[-1] + 5)
        oracle = mckp_enumerate_fast(costs, sizes, budget)
        curves = [
            _curve_from_row(EntityId.task(i), sizes, row)
            for i, row in enumerate(costs)
        ]
        if oracle is None:
            infeasible += 1
            with pytest.raises(InfeasibleError):
                solve_min_misses(curves, {}, budget, ladder)
            continue
        assignment = solve_min_misses(curves, {}, budget, ladder)
        vector = tuple(assignment.sizes[EntityId.task(i)] for i in range(n))
        assert assignment.predicted_total_misses == oracle[0], f"case {case}"
        assert sum(vector) == oracle[1], f"case {case}"
        assert vector == oracle[2], f"case {case}"
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s, budget is 30s"
    assert infeasible < 250  # the sweep must mostly exercise the solver
    _passed(2, "MCKP oracle equivalence")


# -- 3. exact compositionality ---------------------------------------------------

def _random_scenario(rng):
    n_tasks = rng.randint(2, 4)
    tasks = []
    for tid in range(n_tasks):
        mix = rng.choice([(0, 1, 0), (1, 1, 0), (1, 2, 1), (0, 1, 2)])
        tasks.append(TaskSpec(
            task_id=tid,
            base_addr=tid * 0x100000,
            working_set_bytes=rng.choice([512, 1024, 2048, 4096]),
            period_accesses=rng.randint(80, 400),
            stride=rng.choice([64, 128, 256]),
            mix=mix,
            write_fraction=rng.random() * 0.5,
            seed=rng.randrange(10_000),
            word_bytes=rng.choice([4, 64]),
        ))
    fifos = []
    possible_edges = [(i, j) for i in range(n_tasks) for j in range(i + 1, n_tasks)]
    rng.shuffle(possible_edges)
    for fid, (producer, consumer) in enumerate(possible_edges[: rng.randint(0, 2)]):
        token = rng.choice([128, 256])
        cap_tokens = rng.choice([1, 2, 4])
        fifos.append(FifoSpec(
            fifo_id=fid,
            producer=producer,
            consumer=consumer,
            base_addr=0x1000000 + fid * 0x100000,
            capacity_bytes=token * cap_tokens,
            token_bytes=token,
            word_bytes=64,
            tokens_per_period=rng.choice([1, 2]),
        ))
    frames = []
    if n_tasks >= 2 and rng.random() < 0.5:
        frames.append(FrameBufferSpec(
            frame_id=0,
            producer=0,
            consumer=n_tasks - 1,
            base_addr=0x2000000,
            size_bytes=rng.choice([512, 1024]),
            word_bytes=64,
        ))
    segments = []
    if rng.random() < 0.3:
        segments.append(SegmentSpec("shared_cfg", 0x3000000, 1024))
        touched = tuple(rng.sample(range(n_tasks), k=rng.randint(1, n_tasks)))
        tasks = [
            t if t.task_id not in touched else TaskSpec(
                **{**t.__dict__, "touches": (SegmentTouch("shared_cfg", 8, 64),)}
            )
            for t in tasks
        ]
    graph = TaskGraph(tasks, fifos, frames, segments)

    assoc = rng.choice([1, 2, 4])
    probe_cfg = CacheConfig(64, 4096, assoc)
    sizes = {}
    for task in tasks:
        sizes[task.entity] = rng.choice([1, 2, 4, 8])
    for fifo in fifos:
        sizes[fifo.entity] = buffer_partition_size(fifo.capacity_bytes, probe_cfg)
    for frame in frames:
        sizes[frame.entity] = buffer_partition_size(frame.size_bytes, probe_cfg)
    for seg in segments:
        sizes[seg.entity] = buffer_partition_size(seg.size_bytes, probe_cfg)
    num_sets = _next_pow2(sum(sizes.values())) * rng.choice([1, 2])
    config = CacheConfig(64, num_sets, assoc)
    assignment = PartitionAssignment(sizes=sizes, bases=pack_layout(sizes, num_sets))

    processors = rng.randint(1, 3)
    if rng.random() < 0.25:
        policy = SchedulePolicy("run_to_completion")
    else:
        policy = SchedulePolicy("round_robin", rng.choice([1, 3, 8, 32]))
    static = StaticAssignment(
        {t.task_id: rng.randrange(processors) for t in tasks}, processors
    )
    return graph, config, assignment, policy, static


def test_acceptance_3_exact_compositionality():
    rng = random.Random(0xC0417)
    for case in range(50):
        graph, config, assignment, policy, static = _random_scenario(rng)
        report = verify_compositionality(
            graph, assignment, config, [(policy, static)],
            periods=rng.choice([1, 2]), run_seed=rng.randrange(100),
        )
        assert report.headline == 0.0, f"case {case}: headline {report.headline}"
        assert all(row.delta == 0 for row in report.rows), f"case {case}"
    _passed(3, "exact compositionality, tolerance 0")


# -- 4. shared-mode non-compositionality ----------------------------------------

def test_acceptance_4_shared_mode_non_compositionality():
    config = ExperimentConfig.parse_file(bundled_config_path("adversarial_pair"))
    graph, cache = config.graph, config.cache
    sizes = {EntityId.task(0): 32, EntityId.task(1): 32}
    assignment = PartitionAssignment(sizes=sizes, bases=pack_layout(sizes, 64))

    shared = run_experiment(
        graph, config.policy, cache, None,
        static=config.static_assignment(), periods=config.periods,
    )
    partitioned = run_experiment(
        graph, config.policy, cache, assignment,
        static=config.static_assignment(), periods=config.periods,
    )
    comparison = compare_modes(shared, partitioned)
    assert comparison.ratio is not None and comparison.ratio >= 5.0, comparison

    per_task = {}
    for quantum in (1, 512):
        result = run_experiment(
            graph, SchedulePolicy("round_robin", quantum), cache, None,
            static=config.static_assignment(), periods=config.periods,
        )
        per_task[quantum] = [result.misses(t.entity) for t in graph.tasks]
    assert per_task[1] != per_task[512]
    _passed(4, f"shared/partitioned ratio {comparison.ratio:.1f}x, quantum-sensitive")


# -- 5. FIFO hit guarantee ---------------------------------------------------------

def test_acceptance_5_fifo_hit_guarantee():
    policies = [
        SchedulePolicy("round_robin", 1),
        SchedulePolicy("round_robin", 8),
        SchedulePolicy("run_to_completion"),
    ]
    for name in ("two_task_demo", "pipeline_kpn"):
        config = ExperimentConfig.parse_file(bundled_config_path(name))
        graph, cache = config.graph, config.cache
        fixed = default_fixed_reservations(graph, cache, config.pins)
        from cachepart.profiler import profile_graph

        curves = profile_graph(graph, config.ladder, cache, (0,), periods=config.periods)
        assignment = solve_min_misses(curves, fixed, cache.num_sets, config.ladder)
        tids = [t.task_id for t in graph.tasks]
        for policy in policies:
            for procs in (1, 2):
                result = run_experiment(
                    graph, policy, cache, assignment,
                    static=StaticAssignment.round_robin(tids, procs),
                    periods=config.periods,
                )
                for entity, check in fifo_hit_check(graph, result, cache).items():
                    assert check.passed, f"{name}: {entity} under {policy.label}"
                    assert check.replacement_misses == 0

    # deliberately halved partition with wrapping traffic must fail
    config = ExperimentConfig.parse_file(bundled_config_path("pipeline_kpn"))
    graph, cache = config.graph, config.cache
    fixed = default_fixed_reservations(graph, cache, config.pins)
    wrapper = EntityId.fifo(1)  # 4 tokens through a 2-token buffer
    fixed[wrapper] = fixed[wrapper] // 2
    from cachepart.profiler import profile_graph

    curves = profile_graph(graph, config.ladder, cache, (0,), periods=config.periods)
    assignment = solve_min_misses(curves, fixed, cache.num_sets, config.ladder)
    result = run_experiment(
        graph, config.policy, cache, assignment,
        static=config.static_assignment(), periods=config.periods,
    )
    check = fifo_hit_check(graph, result, cache)[wrapper]
    assert not check.passed and check.replacement_misses > 0
    _passed(5, "FIFO all-hits guarantee and undersized counterexample")


# -- 6. throughput model --------------------------------------------------------------

def test_acceptance_6_throughput_model():
    t1, t2 = EntityId.task(1), EntityId.task(2)
    assignment = PartitionAssignment({t1: 2, t2: 2}, {t1: 0, t2: 2})
    model = ThroughputModel({(t1, 2): 10.0, (t2, 2): 20.0}, t_switch=1, t_idle=2)
    assert processor_time([t1, t2], model, assignment) == 33
    assert processor_time([], model, assignment) == 3
    assert processor_time([t1], ThroughputModel({(t1, 2): 7.0}), assignment) == 7

    rng = random.Random(0x7707)
    cases = [(rng.randint(1, 6), rng.randint(1, 3)) for _ in range(18)]
    cases += [(6, 3), (6, 2), (5, 3)]
    for n, r in cases:
        sizes = [1, 2]
        tasks = [EntityId.task(i) for i in range(n)]
        e_of = [[rng.randint(1, 40) for _ in sizes] for _ in range(n)]
        miss_of = [[rng.randint(0, 60) for _ in sizes] for _ in range(n)]
        budget = rng.randint(n, 2 * n + 2)
        consts = float(rng.choice([0, 1, 3]))
        curves = [
            _curve_from_row(t, sizes, miss_of[i]) for i, t in enumerate(tasks)
        ]
        model = ThroughputModel(
            {(t, s): float(e_of[i][j]) for i, t in enumerate(tasks)
             for j, s in enumerate(sizes)},
            t_switch=consts, t_idle=0.0,
        )
        oracle = makespan_enumerate(e_of, miss_of, sizes, budget, r, consts)
        static, part = optimize_throughput(
            tasks, model, curves, budget, r, ladder=SizeLadder(tuple(sizes))
        )
        makespan = max(
            processor_time([EntityId.task(t) for t in static.tasks_on(p)], model, part)
            for p in range(r)
        )
        assert makespan == oracle[0], f"N={n} R={r}"
        got_vec = tuple(
            (static.processor_of[t.index], sizes.index(part.sizes[t])) for t in tasks
        )
        assert got_vec == oracle[2], f"N={n} R={r}"
    _passed(6, "throughput model vs exhaustive search")


# -- 7. determinism and round-trip -------------------------------------------------------

def test_acceptance_7_determinism_and_round_trip(tmp_path):
    demo = str(bundled_config_path("two_task_demo"))
    reports = ("experiment_shared.txt", "experiment_partitioned.txt",
               "fig2.csv", "fig3.csv", "summary.txt")

    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert cli_main(["run", "--config", demo, "--out", str(out)]) == EXIT_OK
    for name in reports:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    trace_file = tmp_path / "demo.trace"
    out_emit = tmp_path / "emit"
    assert cli_main([
        "run", "--config", demo, "--out", str(out_emit), "--trace-out", str(trace_file),
    ]) == EXIT_OK
    out_ingest = tmp_path / "ingest"
    assert cli_main([
        "run", "--config", demo, "--out", str(out_ingest), "--trace-in", str(trace_file),
    ]) == EXIT_OK
    for name in reports:
        assert (out_emit / name).read_bytes() == (out_ingest / name).read_bytes(), name
    _passed(7, "byte-identical reports and lossless trace round-trip")


# -- 8. budget monotonicity -----------------------------------------------------------------

def test_acceptance_8_budget_monotonicity():
    rng = random.Random(0xB0D6)
    sizes = [1, 2, 4, 8]
    ladder = SizeLadder(tuple(sizes))
    for case in range(20):
        n = rng.randint(2, 6)
        curves = [
            _curve_from_row(
                EntityId.task(i), sizes, [rng.randint(0, 500) for _ in sizes]
            )
            for i in range(n)
        ]
        budgets = range(n, n + 10 * max(1, n // 2) + 1)
        assert len(list(budgets)) >= 10
        previous = None
        for budget in budgets:
            value = solve_min_misses(curves, {}, budget, ladder).predicted_total_misses
            if previous is not None:
                assert value <= previous, f"case {case}: objective rose at C={budget}"
            previous = value
    _passed(8, "objective non-increasing in the budget")
