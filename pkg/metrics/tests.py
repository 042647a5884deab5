import os
import tempfile

import networkx as nx
import numpy as np
from django.test import SimpleTestCase

from serverlab.exceptions import MetricError

from .graphs import make_generation_graph, make_layered_block_graph
from .spaces import (
    make_cluster, make_finite, make_half_line, make_line, make_ring, make_shifted,
    make_uniform, make_weighted_tree, ring_index, triangle_violations,
)
from .speeds import SpeedSchedule
from .utils import check_finite_metric, load_matrix, sample_triangle_check


def random_finite_metric(rng, n):
    """Shortest-path closure of random positive weights is always a metric."""
    weights = rng.uniform(0.5, 3.0, size=(n, n))
    d = np.minimum(weights, weights.T)
    np.fill_diagonal(d, 0)
    for k in range(n):
        d = np.minimum(d, d[:, k][:, None] + d[k, :][None, :])
    return d


class LineMetricTests(SimpleTestCase):
    def test_distances(self):
        line = make_line(0.0)
        self.assertEqual(line.distance(0.0, 1.0), 1.0)
        self.assertEqual(line.distance(-1.0, 1.0), 2.0)
        self.assertEqual(line.distance(0.5, 0.5), 0.0)
        self.assertEqual(line.source, 0.0)

    def test_half_line_membership(self):
        half = make_half_line()
        self.assertTrue(half.contains(3.0))
        self.assertFalse(half.contains(-1.0))
        self.assertEqual(half.kind, 'half-line')


class ShiftedMetricTests(SimpleTestCase):
    def test_zero_shift_is_identity(self):
        line = make_line(0.0)
        shifted = make_shifted(line, 0)
        for p, q in [(0.0, 1.0), (2.0, 5.0), (0.0, 0.0)]:
            self.assertEqual(shifted.distance(p, q), line.distance(p, q))

    def test_shift_moves_only_source(self):
        shifted = make_shifted(make_line(0.0), 3)
        self.assertEqual(shifted.distance(0.0, 1.0), 4.0)
        self.assertEqual(shifted.distance(1.0, 2.0), 1.0)
        self.assertEqual(shifted.source, 0.0)

    def test_negative_shift_rejected(self):
        with self.assertRaises(MetricError):
            make_shifted(make_line(0.0), -1)

    def test_shift_preserves_triangle_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(3, 7))
            base = make_finite(random_finite_metric(rng, n))
            shifted = make_shifted(base, float(rng.uniform(0, 5)))
            self.assertEqual(check_finite_metric(shifted), [])


class RingMetricTests(SimpleTestCase):
    def test_half_open_membership(self):
        line = make_line(0.0)
        ring0 = make_ring(line, 2, 0)
        ring1 = make_ring(line, 2, 1)
        self.assertTrue(ring0.contains(1.5))
        self.assertFalse(ring0.contains(2.0))
        self.assertTrue(ring1.contains(2.0))
        self.assertFalse(ring1.contains(4.0))
        self.assertTrue(ring0.contains(0.0))
        self.assertTrue(ring1.contains(line.source))

    def test_ring_index_boundaries(self):
        line = make_line(0.0)
        self.assertEqual(ring_index(line, 1.0, 2), 0)
        self.assertEqual(ring_index(line, 1.999, 2), 0)
        self.assertEqual(ring_index(line, 2.0, 2), 1)
        self.assertEqual(ring_index(line, -4.0, 2), 2)
        self.assertEqual(ring_index(line, 0.3, 2), -2)
        self.assertIsNone(ring_index(line, 0.0, 2))

    def test_ratio_must_exceed_one(self):
        with self.assertRaises(MetricError):
            make_ring(make_line(0.0), 1.0, 0)


class FiniteMetricTests(SimpleTestCase):
    def test_rejects_triangle_violation(self):
        with self.assertRaises(MetricError):
            make_finite([[0, 1, 5], [1, 0, 1], [5, 1, 0]])

    def test_random_closures_pass_full_scan(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            d = random_finite_metric(rng, int(rng.integers(2, 8)))
            self.assertEqual(triangle_violations(d), [])

    def test_load_matrix(self):
        with tempfile.NamedTemporaryFile('w', suffix='.txt', delete=False) as handle:
            handle.write("3\n0 1 2\n1 0 1\n2 1 0\n")
        try:
            metric = load_matrix(handle.name)
        finally:
            os.unlink(handle.name)
        self.assertEqual(metric.distance(0, 2), 2.0)
        self.assertEqual(metric.points(), [0, 1, 2])

    def test_uniform_and_cluster(self):
        uniform = make_uniform(['a', 'b'])
        self.assertEqual(uniform.distance('a', 'b'), 1.0)
        self.assertEqual(uniform.distance('s', 'a'), 1.0)
        cluster = make_cluster(3, 100, 0.01)
        self.assertEqual(cluster.distance('s', 'p2'), 100.0)
        self.assertEqual(cluster.distance('p1', 'p3'), 0.01)
        self.assertEqual(check_finite_metric(cluster), [])

    def test_weighted_tree(self):
        tree = make_weighted_tree({'x': ('r', 2), 'y': ('x', 1), 'z': ('x', 3), 'w': ('r', 1)})
        self.assertEqual(tree.distance('y', 'z'), 4)
        self.assertEqual(tree.distance('y', 'w'), 4)
        self.assertEqual(tree.distance('r', 'z'), 5)
        self.assertEqual(check_finite_metric(tree), [])


class BlockGraphTests(SimpleTestCase):
    def test_adjacency_and_distances(self):
        graph = make_layered_block_graph(3, 2)
        b0 = graph.b(0)
        self.assertEqual(sorted(n.key for n in graph.neighbors(b0)), ['a0', 'a1', 'a2', 'a3'])
        self.assertEqual(graph.distance(graph.root, b0), 3)
        self.assertEqual(graph.distance(graph.a(0), b0), 1)
        self.assertEqual(graph.distance(graph.a(4), b0), 3)

    def test_distances_match_breadth_first_search(self):
        graph = make_layered_block_graph(4, 2)
        for j in range(8):
            graph.b(j)
        for m in range(12):
            graph.a(m)
        bfs = dict(nx.all_pairs_shortest_path_length(graph.to_networkx()))
        nodes = graph.materialized()
        for p in nodes:
            self.assertEqual(graph.distance(graph.root, p), p.layer)
            for q in nodes:
                self.assertEqual(graph.distance(p, q), bfs[p][q], (p, q))

    def test_sampled_axioms(self):
        graph = make_layered_block_graph(3, 3)
        points = [graph.a(m) for m in range(9)] + [graph.b(j) for j in range(9)]
        self.assertEqual(sample_triangle_check(graph, points + [graph.root]), [])


class GenerationGraphTests(SimpleTestCase):
    def test_first_family(self):
        graph = make_generation_graph(3, 2)
        fam = graph.family(graph.S0)
        self.assertEqual(len(fam.A), 2)
        self.assertEqual(len(fam.B), 2)
        self.assertEqual(graph.generation(graph.root), 1)
        self.assertEqual(graph.generation(fam.A[0]), 2)

    def test_rejects_wrong_size(self):
        graph = make_generation_graph(3, 2)
        with self.assertRaises(MetricError):
            graph.family(graph.S0[:3])

    def test_distances_match_breadth_first_search(self):
        graph = make_generation_graph(4, 2)
        fam = graph.family(graph.S0)
        child = graph.family(fam.S[:2] + fam.B)
        graph.family(child.B + child.S[2:])
        bfs = dict(nx.all_pairs_shortest_path_length(graph.to_networkx()))
        nodes = graph.materialized()
        for p in nodes:
            self.assertEqual(graph.distance(graph.root, p), p.layer)
            for q in nodes:
                self.assertEqual(graph.distance(p, q), bfs[p][q], (p, q))

    def test_new_layer_nodes_are_shielded(self):
        graph = make_generation_graph(3, 2)
        fam = graph.family(graph.S0)
        network = graph.to_networkx()
        network.remove_nodes_from(fam.A)
        older = [n for n in graph.materialized() if graph.generation(n) <= 1]
        for b in fam.B:
            for node in older:
                self.assertFalse(nx.has_path(network, node, b))


class SpeedScheduleTests(SimpleTestCase):
    def test_parse_forms(self):
        self.assertEqual(SpeedSchedule.parse('2').speed(7), 2.0)
        self.assertEqual(SpeedSchedule.parse('g:2').materialize(4), [1.0, 2.0, 4.0])
        explicit = SpeedSchedule.parse('1,2,3')
        self.assertEqual(explicit.materialize(6), [1.0, 2.0, 3.0, 3.0, 3.0])
        self.assertEqual(explicit.monotonic, 'non-decreasing')

    def test_speeds_below_one_rejected(self):
        with self.assertRaises(MetricError):
            SpeedSchedule.parse('0.5')
        with self.assertRaises(MetricError):
            SpeedSchedule.parse('nonsense')
