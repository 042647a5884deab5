import dataclasses
import json
import random
from pathlib import Path

from django.test import SimpleTestCase

from metrics.graphs import make_layered_block_graph
from metrics.spaces import make_half_line, make_line, make_uniform
from metrics.speeds import SpeedSchedule
from policies.basic import greedy_nearest, spawn_always
from policies.sdc import sdc
from serverlab.exceptions import MetricError, PolicyError, TraceIntegrityError

from .base import OnlinePolicy, SequenceSource
from .fleet import Fleet, FleetSlice, MoveEvent
from .runner import Budget, Step, Trace, replay_cost, run, run_sequence
from .serialization import dumps_trace, load_trace, loads_trace, trace_records
from .wrappers import lazify, localize

FIXTURES = Path(__file__).resolve().parent / 'fixtures'


class Idle(OnlinePolicy):
    name = 'idle'

    def serve(self, request, fleet):
        pass


class Restless(OnlinePolicy):
    """Spawns to uncovered requests; on covered ones nudges every other server."""

    name = 'restless'

    def serve(self, request, fleet):
        if not fleet.covers(request.point):
            fleet.spawn(request.point)
            return
        for sid, p in fleet.servers():
            if p != request.point:
                fleet.move(sid, p + 0.5)


class FleetTests(SimpleTestCase):
    def test_spawn_and_move_accounting(self):
        fleet = Fleet(make_line())
        fleet.begin_step()
        a = fleet.spawn(2.0)
        fleet.move(a, 3.0)
        b = fleet.spawn(1.0)
        self.assertEqual(fleet.total_cost, 4.0)
        self.assertEqual(fleet.cumulative(a), 3.0)
        self.assertEqual(fleet.spawn_marks, [(1, 0.0), (2, 1.0)])
        self.assertEqual(fleet.occupied(), {3.0: 1, 1.0: 1})
        self.assertEqual(fleet.servers_at(1.0), [b])

    def test_server_returning_to_source_stays(self):
        fleet = Fleet(make_line())
        sid = fleet.spawn(2.0)
        fleet.move(sid, 0.0)
        self.assertEqual(fleet.server_count, 1)
        self.assertEqual(fleet.occupied(), {})
        event = fleet.move(sid, 1.0)
        self.assertTrue(event.spawn)
        self.assertEqual(fleet.spawn_count, 2)

    def test_slice_sees_own_servers_in_mirrored_coordinates(self):
        shared = Fleet(make_line())
        right = FleetSlice(shared, make_half_line())
        left = FleetSlice(shared, make_half_line(), transform=lambda p: -p)
        right.spawn(2.0)
        sid = left.spawn(3.0)
        self.assertEqual(shared.position(sid), -3.0)
        self.assertEqual(left.servers(), [(sid, 3.0)])
        self.assertFalse(left.covers(2.0))
        with self.assertRaises(PolicyError):
            right.move(sid, 1.0)


class RunTests(SimpleTestCase):
    def test_spawn_always_uniform(self):
        trace = run_sequence(spawn_always(), make_uniform(['a', 'b']), ['a', 'b', 'a'])
        self.assertEqual(trace.total_cost, 2)
        self.assertEqual(trace.spawn_count, 2)
        self.assertEqual(trace.steps[2].moves, ())

    def test_empty_sequence(self):
        trace = run_sequence(spawn_always(), make_line(), [])
        self.assertEqual(trace.total_cost, 0)
        self.assertEqual(trace.stop_reason, 'exhausted')

    def test_request_at_source_is_free(self):
        for policy in (spawn_always(), greedy_nearest(), Idle()):
            trace = run_sequence(policy, make_line(), [0.0])
            self.assertEqual(trace.total_cost, 0)

    def test_uncovered_request_fails_with_prefix(self):
        with self.assertRaises(PolicyError) as ctx:
            run_sequence(Idle(), make_line(), [0.0, 1.0])
        self.assertEqual(len(ctx.exception.prefix), 1)
        self.assertEqual(ctx.exception.prefix[0].t, 1)

    def test_spawn_budget(self):
        trace = run_sequence(spawn_always(), make_line(), [1.0, 2.0], budget=Budget(max_spawns=0))
        self.assertEqual(trace.stop_reason, 'max-spawns')
        self.assertTrue(trace.budget_stop)
        self.assertEqual(trace.request_count, 0)

    def test_request_budget(self):
        trace = run_sequence(spawn_always(), make_line(), [1.0, 2.0, 3.0], budget=Budget(max_requests=2))
        self.assertEqual(trace.request_count, 2)
        self.assertEqual(trace.stop_reason, 'max-requests')

    def test_spawn_marks_match_configuration(self):
        rng = random.Random(4)
        points = [round(rng.uniform(0.1, 5), 2) for _ in range(40)]
        trace = run_sequence(greedy_nearest(), make_line(), points)
        spawns = [move for move in trace.events() if move.spawn]
        self.assertEqual(len(spawns), trace.spawn_count)
        self.assertEqual(len(trace.configuration()), trace.spawn_count)
        f = trace.f_values
        self.assertEqual(f, sorted(f))

    def test_summary_mode(self):
        full = run_sequence(greedy_nearest(), make_line(), [1.0, 2.0, 0.5])
        summary = run_sequence(greedy_nearest(), make_line(), [1.0, 2.0, 0.5], record=False)
        self.assertEqual(summary.steps, ())
        self.assertEqual(summary.total_cost, full.total_cost)
        self.assertEqual(summary.spawn_marks, full.spawn_marks)
        with self.assertRaises(TraceIntegrityError):
            replay_cost(summary)

    def test_identical_inputs_identical_traces(self):
        points = [1.0, 3.0, 2.0, 0.5, 3.0]
        first = run_sequence(sdc('2'), make_half_line(), points)
        second = run_sequence(sdc('2'), make_half_line(), points)
        self.assertEqual(dumps_trace(first), dumps_trace(second))


class ReplayCostTests(SimpleTestCase):
    def test_produced_trace(self):
        trace = run_sequence(sdc('1.5'), make_half_line(), [4.0, 1.0, 2.5, 6.0, 0.3])
        self.assertAlmostEqual(replay_cost(trace), trace.total_cost, delta=1e-9)

    def hand_built(self, total):
        moves = (MoveEvent(1, 0.0, 1.0, 1.0, True), MoveEvent(1, 1.0, 3.0, 2.0, False))
        return Trace(
            metric=make_line(), policy='hand', source='hand', requests=(3.0,),
            steps=(Step(1, 3.0, moves, total),), total_cost=total, spawn_marks=((1, 0.0),),
            final_positions={1: 3.0}, cumulative={1: 3.0},
        )

    def test_hand_built_trace(self):
        self.assertEqual(replay_cost(self.hand_built(3.0)), 3.0)

    def test_tampered_cost(self):
        with self.assertRaises(TraceIntegrityError):
            replay_cost(self.hand_built(4.0))
        trace = run_sequence(spawn_always(), make_line(), [1.0, 2.0])
        step = trace.steps[0]
        forged = dataclasses.replace(step, moves=(dataclasses.replace(step.moves[0], cost=0.5),))
        with self.assertRaises(TraceIntegrityError):
            replay_cost(dataclasses.replace(trace, steps=(forged,) + trace.steps[1:]))


class LazifyTests(SimpleTestCase):
    def test_covered_request_is_free(self):
        points = [1.0, 2.0, 3.0, 4.0, 4.0]
        inner = run_sequence(Restless(), make_line(), points)
        self.assertEqual(len(inner.steps[-1].moves), 3)
        lazy = run_sequence(lazify(Restless()), make_line(), points)
        self.assertEqual(lazy.steps[-1].cost, 0)

    def test_spawn_always_unchanged_on_distinct_points(self):
        points = [1.0, 2.5, -1.0, 4.0]
        plain = run_sequence(spawn_always(), make_line(), points)
        lazy = run_sequence(lazify(spawn_always()), make_line(), points)
        self.assertEqual([s.moves for s in plain.steps], [s.moves for s in lazy.steps])

    def test_lazy_never_costs_more(self):
        rng = random.Random(1000)
        for _ in range(1000):
            speeds = SpeedSchedule.explicit(sorted(rng.uniform(1, 3) for _ in range(4)))
            points = [round(rng.uniform(0, 8), 2) for _ in range(rng.randint(1, 20))]
            inner = run_sequence(sdc(speeds), make_half_line(), points, record=False)
            lazy = run_sequence(lazify(sdc(speeds)), make_half_line(), points, record=False)
            self.assertLessEqual(lazy.total_cost, inner.total_cost + 1e-9)

    def test_lazy_moves_at_most_one_server(self):
        points = [4.0, 1.0, 2.0, 3.0, 0.5]
        trace = run_sequence(lazify(sdc('2')), make_half_line(), points)
        self.assertTrue(all(len(step.moves) <= 1 for step in trace.steps))


class LocalizeTests(SimpleTestCase):
    def test_move_without_blocker_unchanged(self):
        graph = make_layered_block_graph(4, 1)
        trace = run_sequence(localize(spawn_always()), graph, [graph.a(0), graph.b(5)])
        self.assertEqual(len(trace.steps[1].moves), 1)
        self.assertEqual(trace.steps[1].moves[0].origin, graph.root)

    def test_swap_at_intermediate_server(self):
        graph = make_layered_block_graph(4, 1)
        v2 = graph.chain[2]
        trace = run_sequence(localize(spawn_always()), graph, [v2, graph.b(0)])
        moves = trace.steps[1].moves
        self.assertEqual([(m.origin, m.target) for m in moves], [(graph.root, v2), (v2, graph.b(0))])
        self.assertEqual(sum(m.cost for m in moves), graph.distance(graph.root, graph.b(0)))

    def test_step_costs_preserved(self):
        rng = random.Random(8)
        for _ in range(40):
            graph = make_layered_block_graph(rng.randint(2, 5), rng.randint(1, 3))
            nodes = [graph.a(m) for m in range(6)] + [graph.b(j) for j in range(6)] + graph.chain[1:]
            points = [rng.choice(nodes) for _ in range(25)]
            inner = run_sequence(greedy_nearest(), graph, points)
            local = run_sequence(localize(greedy_nearest()), graph, points)
            self.assertEqual([s.cost for s in inner.steps], [s.cost for s in local.steps])
            self.assertEqual(sorted(inner.configuration()), sorted(local.configuration()))

    def test_continuous_metric_rejected(self):
        with self.assertRaises(MetricError):
            run_sequence(localize(spawn_always()), make_line(), [1.0])


class SerializationTests(SimpleTestCase):
    def test_golden_trace(self):
        metric = make_uniform(['a', 'b'])
        trace = run(spawn_always(), metric, SequenceSource(['a', 'b', 'a']))
        golden = (FIXTURES / 'spawn_always_uniform.jsonl').read_text()
        expected = [json.loads(line) for line in golden.splitlines()]
        self.assertEqual(trace_records(trace), expected)

    def test_load_replays(self):
        metric = make_uniform(['a', 'b'])
        trace = load_trace(FIXTURES / 'spawn_always_uniform.jsonl', metric)
        self.assertEqual(replay_cost(trace), 2.0)
        self.assertEqual(trace.spawn_count, 2)

    def test_graph_points_round_trip(self):
        graph = make_layered_block_graph(3, 2)
        trace = run_sequence(greedy_nearest(), graph, [graph.a(0), graph.b(1), graph.a(3)])
        again = loads_trace(dumps_trace(trace), graph)
        self.assertEqual(again.steps, trace.steps)
