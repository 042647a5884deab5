import json
import math
import random

import numpy as np
from django.test import SimpleTestCase
from scipy.optimize import brentq

from adversaries.balance import balance_descent
from engine.runner import run, run_sequence
from metrics.graphs import make_layered_block_graph
from metrics.spaces import make_half_line, make_uniform
from metrics.speeds import SpeedSchedule
from offline.oracles import opt_infinite
from offline.plans import WITNESS
from policies.basic import balance_family, spawn_always
from policies.moo import moo
from policies.sdc import sdc
from serverlab.exceptions import ConstructionError

from .formulas import (
    LayerCensus, cluster_lower_bound, lambda_iterates, lambda_residual, layer_potential, moo_block_ratio,
    moo_bounds, ring_competitive_ratio, ring_factor, sdc_cost_identity, solve_lambda,
    weak_fleet_size, weak_ratio, z_vector,
)
from .reports import COLUMNS, ratio_table, report_for, to_csv, to_json


class LambdaTests(SimpleTestCase):
    def test_root(self):
        value = solve_lambda(1e-12)
        self.assertGreater(value, 3.146)
        self.assertTrue(3.1461 <= value <= 3.1463)
        self.assertLessEqual(lambda_residual(value), 1e-12)

    def test_rejects_bad_tolerance(self):
        with self.assertRaises(ValueError):
            solve_lambda(0)

    def test_iterates_decrease_to_the_root(self):
        iterates = lambda_iterates(1e-12)
        self.assertEqual(iterates[0], 4.0)
        self.assertTrue(np.all(np.diff(iterates) < 0))
        self.assertLessEqual(iterates[-2] - iterates[-1], 1e-12)
        self.assertGreater(iterates[-3] - iterates[-2], 1e-12)
        self.assertEqual(solve_lambda(1e-12), iterates[-1])

    def test_matches_bracketed_root(self):
        root = brentq(lambda x: x - 2.0 - math.log(x), 2.0, 4.0, xtol=1e-14)
        self.assertAlmostEqual(solve_lambda(1e-12), root, delta=1e-12)

    def test_coarse_tolerance_stops_early(self):
        coarse, fine = lambda_iterates(1e-3), lambda_iterates(1e-12)
        self.assertLess(len(coarse), len(fine))
        self.assertLess(abs(coarse[-1] - fine[-1]), 1e-3)


class ZVectorTests(SimpleTestCase):
    def test_unit_speeds(self):
        self.assertEqual(z_vector(SpeedSchedule.constant(1), 4), [1, 3, 5, 7])

    def test_double_speeds(self):
        self.assertEqual(z_vector(SpeedSchedule.constant(2), 4), [1, 2, 2.5, 2.75])

    def test_needs_one_entry(self):
        with self.assertRaises(ValueError):
            z_vector(SpeedSchedule.constant(1), 0)


class CostIdentityTests(SimpleTestCase):
    def test_single_spawn(self):
        speeds = SpeedSchedule.constant(3)
        trace = run_sequence(sdc(speeds), make_half_line(), [5.0])
        self.assertEqual(sdc_cost_identity(trace, speeds), (5.0, 5.0, 0.0))

    def test_fixture(self):
        speeds = SpeedSchedule.constant(1)
        trace = run_sequence(sdc(speeds), make_half_line(), [4.0, 1.0])
        lhs, rhs, gap = sdc_cost_identity(trace, speeds)
        self.assertAlmostEqual(lhs, 6.0)
        self.assertAlmostEqual(rhs, 6.0)

    def test_random_runs(self):
        rng = random.Random(3)
        metric = make_half_line()
        for _ in range(100):
            speeds = SpeedSchedule.explicit(sorted(rng.uniform(1, 4) for _ in range(rng.randint(1, 6))))
            seq = [round(rng.uniform(0, 10), 3) for _ in range(rng.randint(1, 40))]
            trace = run_sequence(sdc(speeds), metric, seq)
            lhs, rhs, gap = sdc_cost_identity(trace, speeds)
            self.assertLessEqual(gap, 1e-6 * max(lhs, 1.0))

    def test_rejects_other_policies(self):
        trace = run_sequence(spawn_always(), make_half_line(), [1.0])
        with self.assertRaises(ConstructionError):
            sdc_cost_identity(trace, SpeedSchedule.constant(1))


class MooBoundTests(SimpleTestCase):
    def test_small_census(self):
        report = moo_bounds(LayerCensus((1, 2)), opt=4)
        self.assertEqual(report.census_cost, 5)
        self.assertEqual(report.opt_lower_bound, 4)
        self.assertEqual(report.bound, 1.5)
        self.assertTrue(report.lower_bound_holds)

    def test_empty_top_layer(self):
        report = moo_bounds(LayerCensus((2, 3, 0)), opt=5)
        self.assertEqual(report.opt_lower_bound, 5)

    def test_random_instances(self):
        rng = random.Random(5)
        for _ in range(30):
            D, k = rng.randint(2, 4), rng.randint(1, 3)
            graph = make_layered_block_graph(D, k)
            nodes = graph.chain[1:] + [graph.a(m) for m in range(3 * k)] + [graph.b(j) for j in range(2 * k)]
            seq = [rng.choice(nodes) for _ in range(rng.randint(1, 12))]
            trace = run_sequence(moo(), graph, seq)
            opt = opt_infinite(graph, seq).total_cost
            report = moo_bounds(LayerCensus.from_trace(trace), opt, cost=trace.total_cost)
            self.assertTrue(report.cost_matches)
            self.assertTrue(report.lower_bound_holds)
            self.assertLessEqual(report.ratio, D - 0.5 + 1e-9)


class PotentialTests(SimpleTestCase):
    def test_counts_layer_below_top(self):
        graph = make_layered_block_graph(3, 2)
        self.assertEqual(layer_potential([], graph), 0)
        self.assertEqual(layer_potential([graph.a(0), graph.b(0)], graph), 1)


class ClosedFormTests(SimpleTestCase):
    def test_ring(self):
        self.assertEqual(ring_factor(2), 7)
        self.assertEqual(ring_competitive_ratio(1, 2), 7)
        self.assertEqual(ring_competitive_ratio(1, 2, uniform_source=True), 14)

    def test_weak_reduction(self):
        self.assertEqual(weak_fleet_size(2, 1, 1), 4)
        self.assertEqual(weak_fleet_size(3, 0.5, 1), 9)
        self.assertEqual(weak_ratio(1, 1), 4)

    def test_block_ratio(self):
        self.assertAlmostEqual(moo_block_ratio(4, 50, 50), 17500 / 5250)

    def test_cluster_bound_tends_to_lambda(self):
        lam = solve_lambda()
        self.assertAlmostEqual(cluster_lower_bound(1e12, 0), lam, places=6)
        self.assertLess(cluster_lower_bound(100, 0), lam)


class RatioTableTests(SimpleTestCase):
    def test_spawn_always_on_uniform(self):
        metric = make_uniform(n=4)
        seq = ['p1', 'p2', 'p1', 'p3', 'p4', 'p2']
        trace = run_sequence(spawn_always(), metric, seq)
        [report] = ratio_table([(trace, opt_infinite(metric, seq))])
        self.assertEqual(report.ratio, 1.0)
        self.assertEqual(report.algorithm, 'spawn_always')
        self.assertEqual(report.offline_kind, 'oracle-infinite')

    def test_empty(self):
        self.assertEqual(ratio_table([]), [])

    def test_balance_descent(self):
        metric, source = balance_descent(1e-4, 200)
        trace = run(balance_family(1), metric, source)
        [report] = ratio_table([(trace, opt_infinite(metric, trace.requests))])
        self.assertGreaterEqual(report.ratio, 100)
        witness = report_for(trace, source.witness())
        self.assertEqual(witness.offline_kind, WITNESS)

    def test_zero_offline(self):
        trace = run_sequence(spawn_always(), make_half_line(), [1.0])
        self.assertTrue(math.isinf(report_for(trace, 0.0).ratio))

    def test_csv_and_json(self):
        metric = make_uniform(n=2)
        trace = run_sequence(spawn_always(), metric, ['p1', 'p2'])
        reports = ratio_table([(trace, opt_infinite(metric, ['p1', 'p2']))] * 2)
        text = to_csv(reports)
        self.assertEqual(text.splitlines()[0], ','.join(COLUMNS))
        self.assertEqual(len(text.splitlines()), 3)
        self.assertEqual(text, to_csv(reports))
        rows = json.loads(to_json(reports))
        self.assertEqual(list(rows[0]), COLUMNS)
        self.assertEqual(rows[0]['ratio'], 1.0)
