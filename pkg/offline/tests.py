import itertools
import random

from django.test import SimpleTestCase

from engine.runner import replay_cost
from metrics.spaces import make_finite, make_line, make_uniform
from serverlab.exceptions import ConstructionError, OracleLimitError

from .ensemble import ensemble_bound
from .flow import MinCostFlow
from .oracles import brute_force_opt, brute_force_plan, opt_h, opt_infinite
from .plans import Chain, OfflinePlan, replay_plan


def small_metrics():
    return [
        make_uniform(['a', 'b']),
        make_finite([[0, 1, 2], [1, 0, 1], [2, 1, 0]]),
        make_finite([[0, 1, 1.5], [1, 0, 2], [1.5, 2, 0]]),
    ]


class MinCostFlowTests(SimpleTestCase):
    def test_two_paths(self):
        flow = MinCostFlow(4)
        flow.add_edge(0, 1, 1, 1)
        flow.add_edge(0, 2, 1, 2)
        flow.add_edge(1, 3, 1, 1)
        flow.add_edge(2, 3, 1, 1)
        flow.add_edge(1, 2, 1, 0)
        self.assertEqual(flow.min_cost_flow(0, 3, 2), (2, 5))

    def test_negative_edges_with_dag_potentials(self):
        flow = MinCostFlow(3)
        flow.add_edge(0, 1, 1, 4)
        flow.add_edge(1, 2, 1, -10)
        flow.add_edge(0, 2, 1, 0)
        potentials = flow.dag_potentials(0, [0, 1, 2])
        self.assertEqual(flow.min_cost_flow(0, 2, 1, potentials=potentials), (1, -6))


class OptInfiniteTests(SimpleTestCase):
    def test_single_request(self):
        self.assertEqual(opt_infinite(make_line(), [1.0]).total_cost, 1.0)

    def test_repeat_then_step(self):
        plan = opt_infinite(make_line(), [1.0, 1.0, 2.0])
        self.assertEqual(plan.total_cost, 2.0)
        self.assertEqual(plan.chains, (Chain(1, (1, 2, 3)),))

    def test_uniform_return(self):
        self.assertEqual(opt_infinite(make_uniform(['a', 'b']), ['a', 'b', 'a']).total_cost, 2.0)

    def test_empty(self):
        self.assertEqual(opt_infinite(make_line(), []).total_cost, 0)

    def test_size_guard(self):
        with self.settings(SERVERLAB_ORACLE_MAX_REQUESTS=3):
            with self.assertRaises(OracleLimitError):
                opt_infinite(make_line(), [1.0, 2.0, 3.0, 4.0])


class OptHTests(SimpleTestCase):
    def test_single_server_shuttles(self):
        self.assertEqual(opt_h(make_line(), [1.0, -1.0, 1.0, -1.0], 1).total_cost, 7.0)

    def test_two_servers(self):
        plan = opt_h(make_line(), [1.0, -1.0, 1.0, -1.0], 2)
        self.assertEqual(plan.total_cost, 2.0)
        self.assertEqual(plan.server_count, 2)

    def test_many_servers_match_infinite(self):
        rng = random.Random(9)
        metric = make_line()
        for _ in range(25):
            seq = [round(rng.uniform(-5, 5), 2) for _ in range(rng.randint(1, 12))]
            self.assertEqual(opt_h(metric, seq, len(seq)).total_cost, opt_infinite(metric, seq).total_cost)

    def test_monotone_in_h(self):
        rng = random.Random(10)
        metric = make_line()
        for _ in range(25):
            seq = [round(rng.uniform(-5, 5), 1) for _ in range(rng.randint(2, 10))]
            values = [opt_h(metric, seq, h).total_cost for h in range(1, 5)]
            self.assertTrue(all(a >= b for a, b in zip(values, values[1:])))
            self.assertGreaterEqual(values[-1], opt_infinite(metric, seq).total_cost)

    def test_rejects_zero_servers(self):
        with self.assertRaises(ValueError):
            opt_h(make_line(), [1.0], 0)


class BruteForceTests(SimpleTestCase):
    def test_agrees_with_oracles(self):
        for metric in small_metrics():
            points = metric.points()
            for m in range(1, 5):
                for seq in itertools.product(points, repeat=m):
                    self.assertEqual(brute_force_opt(metric, seq), opt_infinite(metric, seq).total_cost, seq)
                    for h in (1, 2, 3):
                        self.assertEqual(brute_force_opt(metric, seq, h), opt_h(metric, seq, h).total_cost)

    def test_empty(self):
        self.assertEqual(brute_force_opt(make_line(), []), 0)

    def test_size_guard(self):
        with self.assertRaises(OracleLimitError):
            brute_force_opt(make_line(), [1.0] * 9)

    def test_plan_cost_matches_value(self):
        metric = make_line()
        seq = [1.0, -1.0, 2.0, 1.5, -1.0]
        plan = brute_force_plan(metric, seq, 2)
        self.assertEqual(plan.total_cost, brute_force_opt(metric, seq, 2))
        self.assertAlmostEqual(plan.chain_cost(metric, seq), plan.total_cost)


class PlanTests(SimpleTestCase):
    def test_replay_reproduces_cost(self):
        rng = random.Random(12)
        metric = make_line()
        for _ in range(20):
            seq = [round(rng.uniform(-3, 3), 2) for _ in range(rng.randint(1, 15))]
            for plan in (opt_infinite(metric, seq), opt_h(metric, seq, 2)):
                plan.validate(len(seq))
                trace = replay_plan(plan, metric, seq)
                self.assertAlmostEqual(trace.total_cost, plan.total_cost, delta=1e-9)
                self.assertAlmostEqual(replay_cost(trace), plan.total_cost, delta=1e-9)

    def test_validate_rejects_gaps(self):
        plan = OfflinePlan((Chain(1, (1, 3)),), 0.0)
        with self.assertRaises(ConstructionError):
            plan.validate(3)
        with self.assertRaises(ConstructionError):
            OfflinePlan((Chain(1, (2, 1)),), 0.0).validate(2)


class EnsembleBoundTests(SimpleTestCase):
    def test_two_spawns_no_local_cost(self):
        self.assertEqual(ensemble_bound([0, 0], 1, 2, 10), 12)

    def test_h_equals_k(self):
        self.assertEqual(ensemble_bound([0, 1, 5], 3, 3, 10), 33)

    def test_units_of_delta(self):
        f = [0.0, 0.02, 0.05, 0.05]
        self.assertAlmostEqual(ensemble_bound(f, 2, 4, 100, 0.01), 0.01 * ensemble_bound([x / 0.01 for x in f], 2, 4, 100 / 0.01))

    def test_rejects_non_monotone(self):
        with self.assertRaises(ValueError):
            ensemble_bound([0, 2, 1], 1, 3, 10)
        with self.assertRaises(ValueError):
            ensemble_bound([0, 1], 3, 2, 10)
