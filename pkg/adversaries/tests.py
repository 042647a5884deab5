from django.test import SimpleTestCase

from analysis.formulas import cascade_denominator, sdc_cascade, sdc_cost_identity
from analysis.reports import ENSEMBLE
from engine.runner import run
from metrics.speeds import SpeedSchedule
from metrics.spaces import make_uniform
from offline.ensemble import ensemble_bound
from offline.oracles import opt_infinite
from offline.plans import WITNESS, replay_plan
from policies.basic import balance_family, greedy_nearest, spawn_always
from policies.moo import moo
from policies.sdc import sdc
from serverlab.exceptions import ConstructionError, DescriptorError

from .balance import balance2_phases, balance_descent
from .layered import generation_rounds, moo_rounds
from .registry import build_adversary
from .sdc import sdc_fast, sdc_slow
from .uncovered import (
    forked_offline_plan, line_grid, offline_upper_bound, parked_cost, uncovered_cluster, uncovered_line,
    uncovered_point,
)


def assert_each_request_moved(test, trace):
    for step in trace.steps:
        test.assertTrue(step.moves, f"request {step.t} at {step.point!r} was already covered")


class UncoveredPointTests(SimpleTestCase):
    def test_grid(self):
        self.assertEqual(line_grid(1, 1, 1), [1.0])
        grid = line_grid(100, 0.01, 3)
        self.assertEqual(grid[0], 100)
        self.assertAlmostEqual(grid[-1], 100.01)

    def test_spawn_always_requests_points_in_order(self):
        metric, source = uncovered_line(100, 0.01, 5)
        trace = run(spawn_always(), metric, source)
        self.assertEqual(trace.stop_reason, 'spawn-target')
        self.assertEqual(list(trace.requests), source.points[:5])
        self.assertEqual(trace.spawn_count, 5)

    def test_cluster_space(self):
        metric, source = uncovered_cluster(10, 1, 4)
        trace = run(spawn_always(), metric, source)
        self.assertEqual(list(trace.requests), ['p1', 'p2', 'p3', 'p4'])
        self.assertEqual(source.big_delta, 10)
        self.assertEqual(source.delta, 1)

    def test_arbitrary_targets(self):
        metric = make_uniform(n=3)
        source = uncovered_point(metric, metric.labels, 2)
        trace = run(spawn_always(), metric, source)
        self.assertEqual(trace.stop_reason, 'spawn-target')
        self.assertEqual(list(trace.requests), ['p1', 'p2'])
        self.assertEqual((source.big_delta, source.delta), (1, 1))
        with self.assertRaises(ConstructionError):
            uncovered_point(metric, ['p1', 'p1'], 1)
        with self.assertRaises(ConstructionError):
            uncovered_point(metric, [metric.source], 1)

    def test_requests_are_uncovered_when_emitted(self):
        metric, source = uncovered_line(100, 0.01, 5)
        trace = run(balance_family(1), metric, source)
        self.assertEqual(trace.stop_reason, 'spawn-target')
        assert_each_request_moved(self, trace)
        spawn_cost = sum(e.cost for e in trace.events() if e.spawn)
        local_cost = sum(e.cost for e in trace.events() if not e.spawn)
        self.assertAlmostEqual(trace.total_cost, spawn_cost + local_cost)
        self.assertGreaterEqual(spawn_cost, 5 * source.big_delta)
        self.assertGreaterEqual(trace.total_cost + 1e-9, 5 * source.big_delta + trace.f_values[-1])

    def test_forked_plan_matches_ensemble_bound(self):
        metric, source = uncovered_line(100, 0.01, 6)
        trace = run(balance_family(1), metric, source)
        for h in range(1, 7):
            self.assertAlmostEqual(
                forked_offline_plan(trace, source, h),
                ensemble_bound(trace.f_values, h, 6, source.big_delta, source.delta),
            )

    def test_forked_plan_with_h_equal_k(self):
        metric, source = uncovered_line(100, 0.01, 4)
        trace = run(spawn_always(), metric, source)
        self.assertAlmostEqual(forked_offline_plan(trace, source, 4), 4 * (source.big_delta + source.delta))

    def test_forked_plan_bounds_the_optimum(self):
        for policy in (spawn_always(), balance_family(1)):
            metric, source = uncovered_line(100, 0.01, 5)
            trace = run(policy, metric, source)
            bound = forked_offline_plan(trace, source)
            self.assertGreaterEqual(bound + 1e-9, opt_infinite(metric, trace.requests).total_cost)

    def test_goal_ratio_stops_a_non_spawning_policy(self):
        metric, source = uncovered_line(1, 0.01, 4, cap=5000, goal_ratio=2.5)
        trace = run(greedy_nearest(), metric, source, record=False)
        self.assertEqual(trace.stop_reason, 'ratio-reached')
        self.assertFalse(trace.budget_stop)
        self.assertEqual(trace.spawn_count, 1)
        self.assertEqual(set(trace.requests), set(source.points[:2]))
        parked = parked_cost(metric, trace.requests)
        self.assertEqual(parked, source.parked_cost())
        self.assertGreaterEqual(trace.total_cost / parked, 2.5)
        self.assertEqual(offline_upper_bound(trace, source), (parked, WITNESS))
        self.assertGreaterEqual(parked + 1e-9, opt_infinite(metric, trace.requests).total_cost)

    def test_upper_bound_takes_the_best_ensemble_at_the_target(self):
        metric, source = uncovered_line(100, 0.01, 5)
        trace = run(spawn_always(), metric, source, record=False)
        value, kind = offline_upper_bound(trace, source)
        self.assertEqual(kind, ENSEMBLE)
        self.assertEqual(value, min(
            ensemble_bound(trace.f_values, h, 5, source.big_delta, source.delta) for h in range(1, 6)
        ))
        self.assertGreaterEqual(value + 1e-9, opt_infinite(metric, trace.requests).total_cost)

    def test_cap_is_configurable(self):
        metric, source = uncovered_line(1, 0.01, 4, cap=7)
        trace = run(greedy_nearest(), metric, source)
        self.assertEqual(trace.stop_reason, 'cap')
        self.assertEqual(trace.request_count, 7)

    def test_points_exhausted_is_a_budget_stop(self):
        metric, source = uncovered_line(100, 0.01, 5, count=3)
        trace = run(spawn_always(), metric, source)
        self.assertEqual(trace.stop_reason, 'points-exhausted')
        self.assertTrue(trace.budget_stop)
        with self.assertRaises(ConstructionError):
            forked_offline_plan(trace, source)

    def test_h_above_k_rejected(self):
        metric, source = uncovered_line(100, 0.01, 3)
        trace = run(spawn_always(), metric, source)
        with self.assertRaises(ValueError):
            forked_offline_plan(trace, source, 4)


class BalanceAdversaryTests(SimpleTestCase):
    def test_descent_points(self):
        _, source = balance_descent(0.25, 3)
        self.assertEqual(source.points(), [1, 0.75, 0.5, 0.25])

    def test_descent_guard(self):
        with self.assertRaises(ConstructionError):
            balance_descent(0.25, 4)

    def test_descent_against_balance(self):
        metric, source = balance_descent(0.01, 20)
        trace = run(balance_family(1), metric, source)
        self.assertEqual(trace.spawn_count, 21)
        witness = source.witness()
        self.assertAlmostEqual(witness.total_cost, 1.2)
        self.assertGreater(trace.total_cost / witness.total_cost, 15)

    def test_phases_against_balance2(self):
        metric, source = balance2_phases(0.01, 3)
        trace = run(balance_family(2), metric, source)
        self.assertEqual(trace.stop_reason, 'phases-complete')
        self.assertEqual(trace.spawn_count, 3)
        self.assertEqual(source.active, [1, 2, 3])
        phase_of = {}
        for step in trace.steps:
            for move in step.moves:
                phase_of.setdefault(move.server, set()).add(round((1 - step.point) / 0.01) // 2)
        self.assertTrue(all(len(phases) == 1 for phases in phase_of.values()))
        witness = source.witness()
        witness.validate(trace.request_count)
        self.assertLess(witness.total_cost, 3)
        self.assertAlmostEqual(replay_plan(witness, metric, trace.requests).total_cost, witness.total_cost)

    def test_phase_guard(self):
        with self.assertRaises(ConstructionError):
            balance2_phases(0.01, 20)


class SdcSlowTests(SimpleTestCase):
    def test_unit_speeds_cover_every_position(self):
        metric, source = sdc_slow(5)
        policy = sdc('1')
        trace = run(policy, metric, source)
        self.assertEqual(trace.stop_reason, 'covered')
        occupied = list(trace.final_positions.values())
        for p in source.positions:
            self.assertTrue(any(abs(p - q) <= 1e-9 for q in occupied))
        self.assertGreaterEqual(trace.spawn_count, 5)
        assert_each_request_moved(self, trace)
        lhs, rhs, gap = sdc_cost_identity(trace, policy.speeds)
        self.assertLessEqual(gap, 1e-6 * lhs)
        witness = source.witness()
        self.assertLessEqual(witness.total_cost, 2 * 5)
        self.assertGreater(trace.total_cost, witness.total_cost)

    def test_spawn_always_needs_n_requests(self):
        metric, source = sdc_slow(7)
        trace = run(spawn_always(), metric, source)
        self.assertEqual(trace.request_count, 7)

    def test_single_position(self):
        _, source = sdc_slow(1)
        self.assertEqual(source.positions, [1.0])


class SdcFastTests(SimpleTestCase):
    def test_each_repetition_pulls_one_server(self):
        policy = sdc('2')
        metric, source = sdc_fast(policy, 2, 0.01, 3)
        trace = run(policy, metric, source)
        self.assertEqual(trace.stop_reason, 'repetitions')
        self.assertEqual(len(source.records), 3)
        for record in source.records:
            self.assertEqual(record['spawns'], 1)
            self.assertAlmostEqual(record['landing'], record['left_edge'], delta=1e-6)
        witness = source.witness()
        witness.validate(trace.request_count)
        self.assertLessEqual(witness.total_cost, 2 * 3 * (1 + 2 * 0.01))

    def test_closed_form_matches_cascade(self):
        speeds = SpeedSchedule.constant(2)
        n, k, v = 4, 1, 0.01
        left, right = sdc_cascade(speeds, k, n, v)
        self.assertAlmostEqual(right[-1] + v, v * cascade_denominator(speeds, k + n, n))
        self.assertAlmostEqual(left[0], v)
        self.assertAlmostEqual(right[1], 2 * v)
        self.assertAlmostEqual(left[1], 3 * v)

    def test_guards(self):
        with self.assertRaises(ConstructionError):
            sdc_fast(sdc('2'), 3, 0.01, 3)
        with self.assertRaises(ConstructionError):
            sdc_fast(sdc('2'), 2, 0.01, 25)
        with self.assertRaises(ConstructionError):
            sdc_fast(balance_family(1), 2, 0.01, 3)


class MooRoundsTests(SimpleTestCase):
    def test_costs_against_moo(self):
        D, k, n = 3, 3, 3
        graph, source = moo_rounds(D, k, n)
        trace = run(moo(), graph, source)
        self.assertEqual(trace.stop_reason, 'rounds-complete')
        self.assertEqual(trace.total_cost, n * k * (2 * D - 1))
        self.assertEqual(source.deviations, 0)
        witness = source.witness()
        witness.validate(trace.request_count)
        self.assertEqual(witness.total_cost, 2 * n * k + (D - 2) * k + n * (D - 1))
        self.assertEqual(replay_plan(witness, graph, trace.requests).total_cost, witness.total_cost)

    def test_deeper_graph(self):
        D, k, n = 4, 2, 5
        graph, source = moo_rounds(D, k, n)
        trace = run(moo(), graph, source)
        self.assertEqual(trace.total_cost, 70)
        self.assertEqual(source.witness().total_cost, 2 * n * k + (D - 2) * k + n * (D - 1))

    def test_spawn_always_leaves_nothing_to_re_request(self):
        graph, source = moo_rounds(3, 2, 2)
        trace = run(spawn_always(), graph, source)
        self.assertEqual(source.deviations, 4)
        source.witness().validate(trace.request_count)


class GenerationRoundsTests(SimpleTestCase):
    def test_depth_three_rounds(self):
        k = 2
        graph, source = generation_rounds(3, k, 3)
        trace = run(moo(), graph, source)
        self.assertEqual(trace.stop_reason, 'rounds-complete')
        self.assertEqual(len(source.records), 3)
        self.assertEqual(source.deviations, 0)
        for record in source.records:
            self.assertLessEqual(record['witness_cost'], 2 * k + 2)
            self.assertGreaterEqual(record['online_cost'], 5 * k)
        witness = source.witness()
        witness.validate(trace.request_count)
        self.assertAlmostEqual(replay_plan(witness, graph, trace.requests).total_cost, witness.total_cost)

    def test_potential_argument_on_depth_four(self):
        k = 2
        graph, source = generation_rounds(4, k, 3)
        run(moo(), graph, source)
        for record in source.records:
            self.assertGreaterEqual(
                record['online_cost'], 6 * k + record['phi_after'] - record['phi_before']
            )

    def test_families_materialized_per_round(self):
        graph, source = generation_rounds(3, 2, 2)
        run(moo(), graph, source)
        self.assertEqual(len(graph.families()), 2)


class RegistryTests(SimpleTestCase):
    def test_builds_descent(self):
        metric, source = build_adversary('balance_descent:eps=0.25,n=3')
        self.assertEqual(metric.kind, 'line')
        self.assertEqual(source.points(), [1, 0.75, 0.5, 0.25])

    def test_uncovered_cluster(self):
        metric, source = build_adversary('uncovered:gap=10,diameter=1,k=3,space=cluster')
        self.assertEqual(metric.kind, 'uniform')
        self.assertEqual(len(source.points), 4)
        _, capped = build_adversary('uncovered:gap=1,diameter=0.01,k=4,cap=1e5')
        self.assertEqual(capped.cap, 100000)

    def test_errors(self):
        with self.assertRaises(DescriptorError):
            build_adversary('nothing')
        with self.assertRaises(DescriptorError):
            build_adversary('sdc_fast:n=2')
        with self.assertRaises(DescriptorError):
            build_adversary('sdc_slow:n=3,extra=1')
        with self.assertRaises(DescriptorError):
            build_adversary('balance_descent:eps=0.5,n=3')
