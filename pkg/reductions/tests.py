import random

from django.test import SimpleTestCase, override_settings

from analysis.formulas import weak_fleet_size
from engine.runner import run_sequence
from metrics.spaces import make_half_line, make_line, make_uniform, ring_index
from offline.oracles import opt_h
from offline.plans import ORACLE_H, ORACLE_INFINITE
from policies.basic import greedy_nearest, spawn_always
from serverlab.exceptions import DescriptorError

from .registry import wrap_policy
from .rings import RingDispatch, ring_dispatch, ring_split_check, split_by_ring
from .tracker import equivalence_tracker
from .weak import SOURCE_DISTANCE, line_weak_from_infinite, phase_optimum, weak_from_infinite


def spawning(w):
    return spawn_always()


def greedy(w):
    return greedy_nearest()


class WeakFromInfiniteTests(SimpleTestCase):
    def test_single_phase_copies_the_simulation(self):
        metric = make_uniform(n=3)
        policy = weak_from_infinite(spawning, 1, 1, 5)
        trace = run_sequence(policy, metric, ['p1', 'p2', 'p3', 'p1'])
        self.assertEqual(len(policy.phases), 1)
        self.assertEqual(trace.total_cost, 3)
        self.assertEqual(policy.phases[0].simulated_cost, 3)
        self.assertFalse(policy.phases[0].closed)

    def test_phase_restart(self):
        metric = make_uniform(n=6)
        policy = weak_from_infinite(spawning, 2, 1, 2)
        trace = run_sequence(policy, metric, ['p1', 'p2', 'p3'])
        first, second = policy.phases
        self.assertTrue(first.closed)
        self.assertEqual(first.requests, ['p1', 'p2'])
        self.assertEqual(first.return_cost, 2)
        self.assertEqual(first.real_cost, 4)
        self.assertEqual(first.opt, 2)
        self.assertEqual(first.opt_kind, ORACLE_H)
        self.assertEqual(second.w, 1)
        self.assertEqual(second.simulated_cost, 2)
        self.assertEqual(trace.total_cost, 5)
        self.assertEqual(trace.final_positions, {1: 'p3', 2: 's'})

    def test_cost_against_opt_h_on_uniform(self):
        rng = random.Random(11)
        metric = make_uniform(n=6)
        for _ in range(20):
            seq = [rng.choice(metric.labels) for _ in range(30)]
            policy = weak_from_infinite(spawning, 2, 1, 4)
            self.assertTrue(policy.fleet_bound_met)
            trace = run_sequence(policy, metric, seq)
            self.assertLessEqual(trace.total_cost, 4 * opt_h(metric, seq, 2).total_cost + 1e-9)
            self.assertLessEqual(len(trace.final_positions), 4)

    def test_per_phase_accounting_on_the_line(self):
        rng = random.Random(2)
        metric = make_line()
        for _ in range(10):
            seq = [round(rng.uniform(-10, 10), 3) for _ in range(40)]
            policy = weak_from_infinite(greedy, 1, 1, 3)
            trace = run_sequence(policy, metric, seq)
            self.assertLessEqual(len(trace.final_positions), 3)
            for phase in policy.phases:
                if phase.closed:
                    self.assertTrue(phase.within_bound)
                    self.assertLessEqual(phase.return_cost, phase.real_cost - phase.return_cost + 1e-9)
            self.assertAlmostEqual(trace.total_cost, sum(phase.real_cost for phase in policy.phases))

    def test_fleet_bound(self):
        self.assertTrue(weak_from_infinite(spawning, 2, 1, 4).fleet_bound_met)
        self.assertFalse(weak_from_infinite(spawning, 2, 1, 3).fleet_bound_met)

    def test_rejects_bad_parameters(self):
        with self.assertRaises(ValueError):
            weak_from_infinite(spawning, 0, 1, 4)
        with self.assertRaises(ValueError):
            weak_from_infinite(spawning, 1, 0, 4)

    @override_settings(SERVERLAB_FLOW_MAX_REQUESTS=2)
    def test_long_phase_falls_back_to_opt_infinite(self):
        self.assertEqual(phase_optimum(make_half_line(), [1.0, 2.0, 3.0], 1), (3.0, ORACLE_INFINITE))

    @override_settings(SERVERLAB_FLOW_MAX_REQUESTS=2, SERVERLAB_ORACLE_MAX_REQUESTS=2)
    def test_source_distance_as_last_resort(self):
        self.assertEqual(phase_optimum(make_half_line(), [1.0, 2.0, 3.0], 1), (3.0, SOURCE_DISTANCE))


class LineWeakTests(SimpleTestCase):
    def test_fleet_size(self):
        self.assertEqual(line_weak_from_infinite(greedy, 1, 1).k, 2 * weak_fleet_size(1, 1, 1))

    def test_positive_requests_leave_left_idle(self):
        policy = line_weak_from_infinite(greedy, 1, 1)
        trace = run_sequence(policy, make_line(), [1.0, 2.0, 0.0, 3.5])
        self.assertEqual(policy.left.phases, [])
        self.assertTrue(policy.right.phases)
        self.assertTrue(all(p >= 0 for p in trace.final_positions.values()))

    def test_mirrored_sequences(self):
        rng = random.Random(4)
        seq = [round(rng.uniform(-5, 5), 3) for _ in range(30)]
        forward = run_sequence(line_weak_from_infinite(greedy, 1, 1), make_line(), seq)
        mirrored = run_sequence(line_weak_from_infinite(greedy, 1, 1), make_line(), [-p for p in seq])
        self.assertAlmostEqual(forward.total_cost, mirrored.total_cost)
        left = sorted(-p for p in forward.final_positions.values())
        right = sorted(mirrored.final_positions.values())
        for a, b in zip(left, right):
            self.assertAlmostEqual(a, b)


class RingDispatchTests(SimpleTestCase):
    def test_two_rings(self):
        policy = ring_dispatch(lambda ring: spawn_always(), 2)
        trace = run_sequence(policy, make_line(), [1.5, 3.0])
        self.assertEqual(trace.total_cost, 4.5)
        self.assertEqual(trace.spawn_count, 2)
        self.assertEqual(sorted(policy.rings), [0, 1])

    def test_one_ring_matches_inner_policy(self):
        seq = [1.2, 1.7, 1.3]
        alone = run_sequence(greedy_nearest(), make_line(), seq)
        wrapped = run_sequence(ring_dispatch(lambda ring: greedy_nearest(), 2), make_line(), seq)
        self.assertAlmostEqual(alone.total_cost, wrapped.total_cost)
        self.assertEqual(alone.final_positions, wrapped.final_positions)

    def test_source_requests_are_free(self):
        trace = run_sequence(ring_dispatch(lambda ring: spawn_always(), 2), make_line(), [0.0])
        self.assertEqual(trace.total_cost, 0)

    def test_moves_stay_inside_their_ring(self):
        rng = random.Random(8)
        metric = make_line()
        seq = [round(rng.uniform(-20, 20), 3) for _ in range(60)]
        policy = ring_dispatch(lambda ring: greedy_nearest(), 2)
        trace = run_sequence(policy, metric, seq)
        for event in trace.events():
            ring = policy.ring_of(event.server)
            for p in (event.origin, event.target):
                self.assertIn(ring_index(metric, p, 2), (None, ring))

    def test_split_by_ring(self):
        self.assertEqual(split_by_ring(make_line(), [0.0, 1.5, 3.0, -1.0, 0.5], 2), {-1: [0.5], 0: [1.5, -1.0], 1: [3.0]})

    def test_opt_splitting_inequality(self):
        rng = random.Random(6)
        metric = make_line()
        for r in (2, 3):
            for _ in range(20):
                seq = [round(rng.uniform(-30, 30), 3) for _ in range(12)]
                parts, whole, factor = ring_split_check(metric, seq, r)
                self.assertLessEqual(parts, factor * whole + 1e-9)

    def test_rejects_small_ratio(self):
        with self.assertRaises(ValueError):
            ring_dispatch(lambda ring: spawn_always(), 1)


class EquivalenceTrackerTests(SimpleTestCase):
    def test_constant_family_is_one_class(self):
        metric = make_uniform(n=4)
        report = equivalence_tracker(lambda h: spawn_always(), 5, metric, ['p1', 'p2', 'p3', 'p1'])
        self.assertEqual(report.class_counts, [1] * 5)
        self.assertEqual(report.selected, (1, 2, 3, 4, 5))

    def test_partitions_refine(self):
        rng = random.Random(9)
        metric = make_uniform(n=8)
        seq = [rng.choice(metric.labels) for _ in range(40)]

        def family(h):
            return weak_from_infinite(spawning, h, 1, weak_fleet_size(h, 1, 1))

        report = equivalence_tracker(family, 4, metric, seq)
        counts = report.class_counts
        self.assertEqual(counts, sorted(counts))
        for before, after in zip(report.partitions, report.partitions[1:]):
            for cls in after:
                self.assertTrue(any(set(cls) <= set(parent) for parent in before))
        costs = {report.traces[h].total_cost for h in report.selected}
        self.assertEqual(len(costs), 1)
        self.assertEqual(report.selected_trace.total_cost, costs.pop())

    def test_rejects_empty_horizon(self):
        with self.assertRaises(ValueError):
            equivalence_tracker(lambda h: spawn_always(), 0, make_uniform(n=2), ['p1'])


class WrapRegistryTests(SimpleTestCase):
    def test_ring(self):
        policy = wrap_policy('ring:r=2', 'greedy_nearest')
        self.assertIsInstance(policy, RingDispatch)
        self.assertEqual(policy.r, 2)

    def test_weak(self):
        policy = wrap_policy('weak:h=2,eps=1,k=4', 'spawn_always')
        trace = run_sequence(policy, make_uniform(n=6), ['p1', 'p2', 'p3', 'p4', 'p5'])
        self.assertEqual(len(policy.phases), 2)
        self.assertLessEqual(len(trace.final_positions), 4)

    def test_errors(self):
        with self.assertRaises(DescriptorError):
            wrap_policy('nothing', 'spawn_always')
        with self.assertRaises(DescriptorError):
            wrap_policy('ring:r=0.5', 'spawn_always')
        with self.assertRaises(DescriptorError):
            wrap_policy('ring:q=1', 'spawn_always')
        with self.assertRaises(DescriptorError):
            wrap_policy('ring:r=2', 'no_such_policy')

    def test_chain_applies_left_to_right(self):
        policy = wrap_policy('local+lazy', 'moo')
        self.assertTrue(policy.describe().startswith('lazy[local['))
