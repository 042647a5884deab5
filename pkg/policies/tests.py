import random

from django.test import SimpleTestCase

from engine.base import Request
from engine.fleet import Fleet
from engine.runner import run_sequence
from metrics.graphs import make_layered_block_graph
from metrics.spaces import make_half_line, make_line, make_uniform
from metrics.speeds import SpeedSchedule
from serverlab.exceptions import DescriptorError, OracleLimitError, PolicyError

from .basic import balance_family, greedy_nearest, spawn_always
from .moo import moo
from .registry import build_policy, split_descriptor
from .sdc import sdc
from .wfa import wfa


class SpawnAlwaysTests(SimpleTestCase):
    def test_distinct_uniform_requests(self):
        trace = run_sequence(spawn_always(), make_uniform(n=5), ['p1', 'p2', 'p3', 'p4', 'p5'])
        self.assertEqual(trace.total_cost, 5)
        self.assertEqual(trace.spawn_count, 5)

    def test_repeated_point(self):
        trace = run_sequence(spawn_always(), make_line(), [2.5] * 6)
        self.assertEqual(trace.total_cost, 2.5)

    def test_line_sum_of_distances(self):
        trace = run_sequence(spawn_always(), make_line(), [1.0, 2.0, 3.0])
        self.assertEqual(trace.total_cost, 6)


class GreedyNearestTests(SimpleTestCase):
    def test_first_request_spawns(self):
        trace = run_sequence(greedy_nearest(), make_line(), [1.0])
        self.assertEqual(trace.total_cost, 1.0)
        self.assertEqual(trace.spawn_count, 1)

    def test_moves_nearby_server(self):
        trace = run_sequence(greedy_nearest(), make_line(), [1.0, 1.2])
        self.assertAlmostEqual(trace.steps[1].cost, 0.2)
        self.assertEqual(trace.spawn_count, 1)

    def test_source_nearer_than_server(self):
        trace = run_sequence(greedy_nearest(), make_line(), [1.0, 0.4])
        self.assertAlmostEqual(trace.steps[1].cost, 0.4)
        self.assertEqual(trace.spawn_count, 2)


class BalanceTests(SimpleTestCase):
    def test_balance_descent_always_spawns(self):
        trace = run_sequence(balance_family(1), make_line(), [1.0, 0.75, 0.5, 0.25])
        self.assertEqual(trace.spawn_count, 4)
        self.assertAlmostEqual(trace.total_cost, 2.5)

    def test_balance2_reuses_server(self):
        trace = run_sequence(balance_family(2), make_line(), [1.0, 0.9])
        self.assertEqual(trace.spawn_count, 1)
        self.assertEqual(trace.steps[1].moves[0].server, 1)

    def test_covered_point_is_free(self):
        for w in (1, 2, 3.5):
            trace = run_sequence(balance_family(w), make_line(), [1.0, 1.0, 1.0])
            self.assertEqual(trace.total_cost, 1.0)

    def test_weight_below_one_rejected(self):
        with self.assertRaises(ValueError):
            balance_family(0.5)


class SpeedDoubleCoverageTests(SimpleTestCase):
    def test_unit_speed_race(self):
        trace = run_sequence(sdc('1'), make_half_line(), [4.0, 1.0])
        self.assertAlmostEqual(trace.steps[1].cost, 2.0)
        self.assertEqual(sorted(trace.final_positions.values()), [1.0, 3.0])

    def test_fast_left_server(self):
        trace = run_sequence(sdc(SpeedSchedule.explicit([3])), make_half_line(), [4.0, 1.0])
        self.assertAlmostEqual(trace.steps[1].cost, 1 + 1 / 3)
        self.assertAlmostEqual(trace.final_positions[1], 4 - 1 / 3)
        self.assertEqual(trace.final_positions[2], 1.0)

    def test_request_right_of_all_servers(self):
        trace = run_sequence(sdc('1'), make_half_line(), [2.0, 5.0])
        self.assertEqual(trace.steps[1].cost, 3.0)
        self.assertEqual(trace.spawn_count, 1)

    def test_covered_request(self):
        trace = run_sequence(sdc('2'), make_half_line(), [2.0, 2.0 + 1e-12, 0.0])
        self.assertEqual(trace.total_cost, 2.0)

    def test_negative_request_rejected(self):
        with self.assertRaises(PolicyError):
            run_sequence(sdc('1'), make_line(), [-1.0])

    def test_servers_never_overtake(self):
        rng = random.Random(11)
        for _ in range(50):
            policy = sdc(SpeedSchedule.explicit(sorted(rng.uniform(1, 4) for _ in range(5))))
            points = [round(rng.uniform(0, 10), 3) for _ in range(rng.randint(1, 40))]
            fleet = Fleet(make_half_line())
            for t, y in enumerate(points, start=1):
                fleet.begin_step(t)
                policy.serve(Request(t, y), fleet)
                self.assertTrue(policy.check_order(fleet))
                self.assertTrue(fleet.covers(y))


class MoveOnlyOutwardsTests(SimpleTestCase):
    def test_fresh_spawn_costs_layer(self):
        graph = make_layered_block_graph(3, 2)
        trace = run_sequence(moo(), graph, [graph.b(0)])
        self.assertEqual(trace.total_cost, 3)

    def test_cost_is_layer_census(self):
        graph = make_layered_block_graph(2, 1)
        trace = run_sequence(moo(), graph, [graph.b(0), graph.b(1), graph.a(2)])
        layers = sorted(p.layer for p in trace.final_positions.values())
        self.assertEqual(layers, [1, 2, 2])
        self.assertEqual(trace.total_cost, 5)

    def test_b_request_served_from_a_group(self):
        graph = make_layered_block_graph(4, 3)
        trace = run_sequence(moo(), graph, [graph.a(0), graph.a(1), graph.a(2), graph.b(1)])
        move = trace.steps[-1].moves[0]
        self.assertEqual(move.origin, graph.a(0))
        self.assertEqual(move.cost, 1)

    def test_never_moves_inward(self):
        rng = random.Random(5)
        for _ in range(30):
            graph = make_layered_block_graph(rng.randint(2, 5), rng.randint(1, 3))
            nodes = [graph.a(m) for m in range(8)] + [graph.b(j) for j in range(8)] + graph.chain[1:]
            trace = run_sequence(moo(), graph, [rng.choice(nodes) for _ in range(30)])
            for move in trace.events():
                self.assertGreater(move.target.layer, move.origin.layer)
            self.assertEqual(trace.total_cost, sum(p.layer for p in trace.final_positions.values()))


class WorkFunctionTests(SimpleTestCase):
    def test_first_request_spawns(self):
        trace = run_sequence(wfa(), make_line(), [1.5])
        self.assertEqual(trace.total_cost, 1.5)
        self.assertEqual(trace.spawn_count, 1)

    def test_uniform_pair(self):
        policy = wfa()
        trace = run_sequence(policy, make_uniform(['a', 'b']), ['a', 'b'])
        self.assertEqual(trace.total_cost, 2)
        self.assertEqual(sorted(trace.configuration()), ['a', 'b'])
        self.assertEqual(policy.table.values[policy.table.mask_of(['a', 'b'])], 2)

    def test_invariants_on_random_runs(self):
        rng = random.Random(2)
        for _ in range(20):
            policy = wfa()
            points = [float(rng.randint(1, 6)) for _ in range(15)]
            run_sequence(policy, make_line(), points)
            self.assertEqual(policy.table.lipschitz_violations(), [])
            self.assertTrue(all(step >= -1e-9 for step in policy.history))

    def test_support_guard(self):
        with self.settings(SERVERLAB_WFA_MAX_POINTS=3):
            with self.assertRaises(OracleLimitError):
                run_sequence(wfa(), make_line(), [1.0, 2.0, 3.0, 4.0])


class RegistryTests(SimpleTestCase):
    def test_descriptor_parsing(self):
        self.assertEqual(split_descriptor('sdc:speeds=1,2,3'), ('sdc', {'speeds': '1,2,3'}))
        self.assertEqual(split_descriptor('spawn_always'), ('spawn_always', {}))

    def test_build(self):
        self.assertEqual(build_policy('balance:w=2').describe(), 'balance(w=2)')
        self.assertEqual(build_policy('sdc:speeds=g:1.5').describe(), 'sdc(g:1.5)')
        self.assertEqual(build_policy('sdc:speeds=1,2').speeds.speed(3), 2.0)

    def test_errors_name_the_field(self):
        with self.assertRaises(DescriptorError) as ctx:
            build_policy('teleport')
        self.assertEqual(ctx.exception.field, 'policy')
        with self.assertRaises(DescriptorError):
            build_policy('balance:w=2,speed=3')
        with self.assertRaises(DescriptorError):
            build_policy('sdc:speeds=0.1')
