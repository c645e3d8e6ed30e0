"""Partition-size solver (MCKP) and the throughput model."""
import random

import pytest

from cachepart.core import CacheConfig, EntityId, validate_partition_table
from cachepart.errors import CurveGapError, InfeasibleError, SearchSpaceExceededError
from cachepart.optimizer import (
    PartitionAssignment,
    ThroughputModel,
    optimize_throughput,
    pack_layout,
    power_objective,
    predict_total_misses,
    processor_time,
    solve_min_misses,
)
from cachepart.profiler import CurveSample, MissCurve, SizeLadder

from oracles import makespan_enumerate, mckp_enumerate

LADDER124 = SizeLadder((1, 2, 4))


def make_curve(entity, values_by_size):
    curve = MissCurve(entity, tuple(sorted(values_by_size)))
    for size, value in values_by_size.items():
        curve.samples[size] = [CurveSample(0, 10**6, value)]
    return curve


def ab_curves():
    return [
        make_curve(EntityId.task(0), {1: 100, 2: 60, 4: 50}),
        make_curve(EntityId.task(1), {1: 80, 2: 30, 4: 25}),
    ]


def test_two_task_example_matches_enumeration():
    assignment = solve_min_misses(ab_curves(), {}, 4, LADDER124)
    assert assignment.sizes[EntityId.task(0)] == 2
    assert assignment.sizes[EntityId.task(1)] == 2
    assert assignment.predicted_total_misses == 90
    oracle = mckp_enumerate([[100, 60, 50], [80, 30, 25]], [1, 2, 4], 4)
    assert oracle[0] == 90 and oracle[2] == (2, 2)


def test_single_task_picks_its_argmin():
    curve = make_curve(EntityId.task(0), {1: 50, 2: 40, 4: 10})
    assignment = solve_min_misses([curve], {}, 8, LADDER124)
    assert assignment.sizes[EntityId.task(0)] == 4


def test_budget_forces_minimum_sizes():
    curves = [
        make_curve(EntityId.task(i), {1: 10, 2: 5, 4: 1}) for i in range(3)
    ]
    assignment = solve_min_misses(curves, {}, 3, LADDER124)
    assert all(size == 1 for e, size in assignment.sizes.items())


def test_tie_breaks_toward_fewer_sets_then_lexicographic():
    # flat curves: everything ties on cost; expect 1 set each
    curves = [
        make_curve(EntityId.task(0), {1: 7, 2: 7, 4: 7}),
        make_curve(EntityId.task(1), {1: 3, 2: 3, 4: 3}),
    ]
    assignment = solve_min_misses(curves, {}, 8, LADDER124)
    assert assignment.sizes == {EntityId.task(0): 1, EntityId.task(1): 1}


def test_infeasible_budget():
    with pytest.raises(InfeasibleError):
        solve_min_misses(ab_curves(), {}, 1, LADDER124)
    with pytest.raises(InfeasibleError):
        solve_min_misses(ab_curves(), {EntityId.fifo(0): 8}, 8, LADDER124)


def test_curve_gap_detected():
    broken = make_curve(EntityId.task(0), {1: 5, 4: 2})
    with pytest.raises(CurveGapError):
        solve_min_misses([broken], {}, 8, LADDER124)


def test_fixed_reservations_kept_and_counted():
    fifo = EntityId.fifo(0)
    assignment = solve_min_misses(ab_curves(), {fifo: 2}, 6, LADDER124)
    assert assignment.sizes[fifo] == 2
    assert fifo in assignment.pinned
    assert assignment.total_sets <= 6


def test_random_instances_match_enumeration():
    rng = random.Random(7)
    for _ in range(120):
        n = rng.randint(1, 5)
        k = rng.randint(1, 4)
        sizes = [2**j for j in range(k)]
        ladder = SizeLadder(tuple(sizes))
        costs = [
            [rng.randint(0, 200) for _ in range(k)] for _ in range(n)
        ]
        budget = rng.randint(n, n * sizes[-1] + 3)
        curves = [
            make_curve(EntityId.task(i), dict(zip(sizes, row)))
            for i, row in enumerate(costs)
        ]
        oracle = mckp_enumerate(costs, sizes, budget)
        if oracle is None:
            with pytest.raises(InfeasibleError):
                solve_min_misses(curves, {}, budget, ladder)
            continue
        assignment = solve_min_misses(curves, {}, budget, ladder)
        got_vector = tuple(
            assignment.sizes[EntityId.task(i)] for i in range(n)
        )
        assert assignment.predicted_total_misses == oracle[0]
        assert (sum(got_vector), got_vector) == (oracle[1], oracle[2])


def test_budget_monotonicity():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.randint(2, 5)
        sizes = [1, 2, 4, 8]
        costs = [[rng.randint(0, 300) for _ in sizes] for _ in range(n)]
        curves = [
            make_curve(EntityId.task(i), dict(zip(sizes, row)))
            for i, row in enumerate(costs)
        ]
        previous = None
        for budget in range(n, n * 8 + 4):
            value = solve_min_misses(curves, {}, budget, SizeLadder((1, 2, 4, 8))).predicted_total_misses
            if previous is not None:
                assert value <= previous
            previous = value


def test_scaling_invariance_of_argmin():
    curves = ab_curves()
    base = solve_min_misses(curves, {}, 4, LADDER124)
    scaled = [
        make_curve(c.entity, {s: 7 * c.samples[s][0].misses for s in c.sizes})
        for c in curves
    ]
    again = solve_min_misses(scaled, {}, 4, LADDER124)
    assert base.sizes == again.sizes


def test_layout_is_valid_partition_table():
    cfg = CacheConfig(64, 16, 2)
    curves = ab_curves() + [make_curve(EntityId.frame(0), {1: 9, 2: 8, 4: 4})]
    assignment = solve_min_misses(curves, {EntityId.fifo(0): 4}, 16, LADDER124)
    table = assignment.to_partition_table()
    assert validate_partition_table(table, cfg) == []


def test_pack_layout_alignment():
    sizes = {EntityId.task(0): 4, EntityId.task(1): 1, EntityId.fifo(0): 2}
    bases = pack_layout(sizes, 8)
    for entity, base in bases.items():
        assert base % sizes[entity] == 0
    with pytest.raises(InfeasibleError):
        pack_layout({EntityId.task(0): 4, EntityId.task(1): 8}, 8)


def test_all_pinned_degenerates_to_prediction():
    curves = ab_curves()
    pins = {EntityId.task(0): 4, EntityId.task(1): 1}
    assignment = solve_min_misses(curves, pins, 8, LADDER124)
    assert assignment.sizes == pins
    assert assignment.predicted_total_misses == predict_total_misses(assignment, curves)
    assert assignment.predicted_total_misses == 50 + 80


def test_single_size_ladder():
    ladder = SizeLadder((2,))
    assignment = solve_min_misses(ab_curves(), {}, 4, ladder)
    assert all(size == 2 for size in assignment.sizes.values())


def test_predict_total_misses_examples():
    assignment = solve_min_misses(ab_curves(), {}, 4, LADDER124)
    assert predict_total_misses(assignment, ab_curves()) == 90
    assert predict_total_misses(PartitionAssignment({}, {}), []) == 0
    one = make_curve(EntityId.task(5), {2: 42})
    solo = PartitionAssignment({EntityId.task(5): 2}, {EntityId.task(5): 0})
    assert predict_total_misses(solo, [one]) == 42


# -- throughput model ------------------------------------------------------------

def _model(entries, t_switch=0.0, t_idle=0.0):
    return ThroughputModel(dict(entries), t_switch, t_idle)


def test_processor_time_examples():
    t1, t2 = EntityId.task(1), EntityId.task(2)
    assignment = PartitionAssignment({t1: 2, t2: 2}, {t1: 0, t2: 2})
    model = _model({(t1, 2): 10.0, (t2, 2): 20.0}, t_switch=1, t_idle=2)
    assert processor_time([t1, t2], model, assignment) == 33
    assert processor_time([], model, assignment) == 3
    zero = _model({(t1, 2): 7.0})
    assert processor_time([t1], zero, assignment) == 7


def test_two_identical_tasks_split_across_processors():
    t0, t1 = EntityId.task(0), EntityId.task(1)
    curves = [make_curve(t0, {2: 5}), make_curve(t1, {2: 5})]
    model = _model({(t0, 2): 9.0, (t1, 2): 9.0})
    static, part = optimize_throughput(
        [t0, t1], model, curves, 8, 2, ladder=SizeLadder((2,))
    )
    assert static.processor_of[0] != static.processor_of[1]
    assert processor_time([t0], model, part) == 9


def test_single_processor_makespan_is_the_sum():
    tasks = [EntityId.task(i) for i in range(3)]
    curves = [make_curve(t, {1: 0}) for t in tasks]
    model = _model({(t, 1): float(e) for t, e in zip(tasks, (5, 4, 3))},
                   t_switch=1, t_idle=1)
    static, part = optimize_throughput(
        tasks, model, curves, 8, 1, ladder=SizeLadder((1,))
    )
    on0 = [EntityId.task(t) for t in static.tasks_on(0)]
    assert processor_time(on0, model, part) == 5 + 4 + 3 + 2


def test_three_task_split_five_four_three():
    tasks = [EntityId.task(i) for i in range(3)]
    curves = [make_curve(t, {1: 0}) for t in tasks]
    model = _model({(t, 1): float(e) for t, e in zip(tasks, (5, 4, 3))})
    static, part = optimize_throughput(
        tasks, model, curves, 8, 2, ladder=SizeLadder((1,))
    )
    makespan = max(
        processor_time([EntityId.task(t) for t in static.tasks_on(p)], model, part)
        for p in range(2)
    )
    assert makespan == 7  # {4,3} vs {5}


def test_exact_matches_exhaustive_with_sizes():
    rng = random.Random(5)
    for _ in range(15):
        n = rng.randint(1, 4)
        r = rng.randint(1, 3)
        sizes = [1, 2]
        tasks = [EntityId.task(i) for i in range(n)]
        e_of = [[rng.randint(1, 30), rng.randint(1, 30)] for _ in range(n)]
        miss_of = [[rng.randint(0, 50), rng.randint(0, 50)] for _ in range(n)]
        budget = rng.randint(n, 2 * n + 1)
        curves = [
            make_curve(t, dict(zip(sizes, miss_of[i]))) for i, t in enumerate(tasks)
        ]
        model = _model({
            (t, s): float(e_of[i][j])
            for i, t in enumerate(tasks)
            for j, s in enumerate(sizes)
        })
        oracle = makespan_enumerate(e_of, miss_of, sizes, budget, r, 0.0)
        static, part = optimize_throughput(
            tasks, model, curves, budget, r, ladder=SizeLadder(tuple(sizes))
        )
        makespan = max(
            processor_time([EntityId.task(t) for t in static.tasks_on(p)], model, part)
            for p in range(r)
        )
        assert makespan == oracle[0]
        got_vec = tuple(
            (static.processor_of[t.index], sizes.index(part.sizes[t]))
            for t in tasks
        )
        assert got_vec == oracle[2]


def test_search_guard_trips():
    tasks = [EntityId.task(i) for i in range(6)]
    curves = [make_curve(t, {1: 0, 2: 0}) for t in tasks]
    model = _model({(t, s): 1.0 for t in tasks for s in (1, 2)})
    with pytest.raises(SearchSpaceExceededError):
        optimize_throughput(
            tasks, model, curves, 12, 3, ladder=SizeLadder((1, 2)), max_states=100
        )


def test_heuristic_within_twice_exact():
    # e is an affine increasing function of the miss count (same replay,
    # fixed trace length), as produced by the profiler's cost model
    rng = random.Random(17)
    for _ in range(10):
        n = rng.randint(2, 5)
        r = rng.randint(2, 3)
        tasks = [EntityId.task(i) for i in range(n)]
        miss = [[rng.randint(5, 50), rng.randint(0, 30)] for _ in range(n)]
        curves = [make_curve(t, {1: miss[i][0], 2: miss[i][1]}) for i, t in enumerate(tasks)]
        lengths = [rng.randint(60, 200) for _ in range(n)]
        hit_cost, miss_cost = 1.0, float(rng.randint(2, 50))
        model = _model({
            (t, s): (lengths[i] - miss[i][j]) * hit_cost + miss[i][j] * miss_cost
            for i, t in enumerate(tasks)
            for j, s in enumerate((1, 2))
        })
        ladder = SizeLadder((1, 2))
        budget = 2 * n
        exact_static, exact_part = optimize_throughput(
            tasks, model, curves, budget, r, ladder=ladder
        )
        heur_static, heur_part = optimize_throughput(
            tasks, model, curves, budget, r, ladder=ladder, mode="heuristic"
        )
        def span(static, part):
            return max(
                processor_time([EntityId.task(t) for t in static.tasks_on(p)], model, part)
                for p in range(r)
            )
        assert span(exact_static, exact_part) <= span(heur_static, heur_part)
        assert span(heur_static, heur_part) <= 2 * span(exact_static, exact_part)


def test_power_objective_is_miss_count_under_degenerate_costs():
    curves = ab_curves()
    assignment = solve_min_misses(curves, {}, 4, LADDER124)
    e_table = {
        (c.entity, s): float(c.samples[s][0].misses) for c in curves for s in c.sizes
    }
    assert power_objective(assignment, e_table) == 90
    one_entity = {(EntityId.task(0), 2): 60.0}
    assert power_objective(assignment, one_entity, [EntityId.task(0)]) == 60
