"""
Property suites behind `manage.py verify`.  Each suite splits its work into independent
cases, checks them on a thread pool and keeps the results in case order.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.optimize import brentq

from adversaries.uncovered import forked_offline_plan, uncovered_line
from analysis.formulas import lambda_residual, sdc_cost_identity, solve_lambda
from engine.runner import run, run_sequence
from metrics.graphs import make_generation_graph, make_layered_block_graph
from metrics.spaces import (
    make_cluster, make_finite, make_half_line, make_line, make_ring, make_shifted, make_uniform,
    make_weighted_tree,
)
from metrics.speeds import SpeedSchedule
from metrics.utils import check_finite_metric, sample_triangle_check
from offline.oracles import brute_force_opt, opt_h, opt_infinite
from policies.basic import balance_family, spawn_always
from policies.moo import moo
from policies.sdc import sdc
from reductions.rings import ring_split_check
from reductions.weak import weak_from_infinite
from serverlab.conf import lab_setting

logger = logging.getLogger(__name__)

EXACT = 1e-9

ORACLE_METRICS = (
    [[0, 1, 2], [1, 0, 1], [2, 1, 0]],
    [[0, 1, 1], [1, 0, 1], [1, 1, 0]],
    [[0, 2, 3], [2, 0, 4], [3, 4, 0]],
)


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    @property
    def passed(self):
        return self.cases - len(self.failures)


def run_cases(name, cases, check, workers=None):
    """`check(case)` returns a failure message or None."""
    workers = workers or lab_setting('SERVERLAB_VERIFY_WORKERS', 4)
    result = SuiteResult(name, cases=len(cases))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for message in pool.map(check, cases):
            if message:
                result.failures.append(message)
    logger.info("suite %s: %s/%s cases passed", name, result.passed, result.cases)
    return result


def _oracle_case(case):
    index, sequence = case
    metric = make_finite(ORACLE_METRICS[index])
    problems = []
    expected = brute_force_opt(metric, sequence)
    if abs(opt_infinite(metric, sequence).total_cost - expected) > EXACT:
        problems.append('h=inf')
    for h in (1, 2, 3):
        if abs(opt_h(metric, sequence, h).total_cost - brute_force_opt(metric, sequence, h)) > EXACT:
            problems.append(f"h={h}")
    if problems:
        return f"metric {index} sequence {list(sequence)}: oracle differs from brute force for {', '.join(problems)}"
    return None


def oracles(seed=0, workers=None):
    cases = [
        (index, sequence)
        for index in range(len(ORACLE_METRICS))
        for m in range(1, 6)
        for sequence in itertools.product(range(3), repeat=m)
    ]
    return run_cases('oracles', cases, _oracle_case, workers)


def _identity_case(case):
    values, sequence = case
    speeds = SpeedSchedule.explicit(values)
    trace = run_sequence(sdc(speeds), make_half_line(), sequence)
    lhs, rhs, gap = sdc_cost_identity(trace, speeds)
    if gap > 1e-6 * max(lhs, 1.0):
        return f"speeds {values}: cost {lhs} != sum z_i x_i {rhs}"
    return None


def sdc_identity(seed=0, workers=None, runs=1000):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(runs):
        values = sorted(float(v) for v in rng.uniform(1, 4, size=int(rng.integers(1, 7))))
        sequence = [round(float(x), 3) for x in rng.uniform(0, 10, size=int(rng.integers(1, 201)))]
        cases.append((values, sequence))
    return run_cases('sdc-identity', cases, _identity_case, workers)


def _axiom_case(case):
    name, metric, points = case
    failures = sample_triangle_check(metric, points)
    if failures:
        return f"{name}: {failures[0]}"
    return None


def _bfs_case(graph):
    bfs = dict(nx.all_pairs_shortest_path_length(graph.to_networkx()))
    nodes = graph.materialized()
    for p in nodes:
        for q in nodes:
            if graph.distance(p, q) != bfs[p][q]:
                return f"{graph.describe()}: d({p},{q}) = {graph.distance(p, q)} but BFS gives {bfs[p][q]}"
    return None


def metric_axioms(seed=0, workers=None):
    rng = np.random.default_rng(seed)
    coords = [0.0] + [round(float(x), 3) for x in rng.uniform(-20, 20, size=20)]
    line = make_line()
    tree = make_weighted_tree({'x': ('r', 2), 'y': ('x', 1), 'z': ('x', 3), 'w': ('r', 1)})
    uniform = make_uniform(n=6)
    cluster = make_cluster(6, 100, 0.01)
    ring = make_ring(line, 2, 2)
    cases = [
        ('line', line, coords),
        ('half-line', make_half_line(), [abs(x) for x in coords]),
        ('uniform', uniform, uniform.points()),
        ('cluster', cluster, cluster.points()),
        ('weighted-tree', tree, tree.points()),
        ('shifted', make_shifted(line, 0.5), coords),
        ('ring', ring, [0.0] + [x for x in coords if ring.contains(x)]),
    ]
    result = run_cases('metric-axioms', cases, _axiom_case, workers)

    finite = make_finite([[0, 1, 5], [1, 0, 4], [5, 4, 0]])
    result.cases += 1
    violations = check_finite_metric(finite)
    if violations:
        result.failures.append(f"finite: {violations[0]}")

    block = make_layered_block_graph(4, 2)
    for j in range(8):
        block.b(j)
    for m in range(12):
        block.a(m)
    generation = make_generation_graph(3, 2)
    fam = generation.family(generation.S0)
    generation.family(fam.S[:2] + fam.B)
    for graph in (block, generation):
        result.cases += 1
        message = _bfs_case(graph)
        if message:
            result.failures.append(message)
    return result


def lambda_suite(seed=0, workers=None):
    result = SuiteResult('lambda', cases=4)
    value = solve_lambda(1e-12)
    bracketed = brentq(lambda x: x - 2.0 - math.log(x), 2.0, 4.0, xtol=1e-13)
    residual = lambda_residual(value)
    result.notes.append(f"lambda = {value:.12f}, residual {residual:.3g}")
    if not 3.1461 <= value <= 3.1463:
        result.failures.append(f"lambda {value} outside [3.1461, 3.1463]")
    if residual > 1e-12:
        result.failures.append(f"residual {residual} above 1e-12")
    if value <= 3.146:
        result.failures.append(f"lambda {value} not above 3.146")
    if abs(value - bracketed) > 1e-12:
        result.failures.append(f"fixed point {value} and bracketed root {bracketed} disagree")
    return result


def _moo_case(case):
    D, k, sequence_indices = case
    graph = make_layered_block_graph(D, k)
    nodes = graph.chain[1:] + [graph.a(m) for m in range(3 * k)] + [graph.b(j) for j in range(2 * k)]
    sequence = [nodes[i % len(nodes)] for i in sequence_indices]
    online = run_sequence(moo(), graph, sequence).total_cost
    opt = opt_infinite(graph, sequence).total_cost
    if online > (D - 0.5) * opt + EXACT:
        return f"MOO on D={D},k={k}: ratio {online / opt:.6g} above {D - 0.5}"
    return None


def _ring_case(sequence):
    parts, whole, factor = ring_split_check(make_line(), sequence, 2)
    if parts > factor * whole + EXACT:
        return f"ring split {parts:.6g} above {factor} * {whole:.6g}"
    return None


def _weak_case(sequence):
    metric = make_uniform(n=6)
    policy = weak_from_infinite(lambda w: spawn_always(), 2, 1, 4)
    trace = run_sequence(policy, metric, sequence)
    bound = 4 * opt_h(metric, sequence, 2).total_cost
    if trace.total_cost > bound + EXACT:
        return f"weak reduction cost {trace.total_cost} above 4 OPT_2 = {bound}"
    if not all(phase.within_bound for phase in policy.phases if phase.closed):
        return "weak reduction phase above 2(sim - k w)"
    return None


def _ensemble_case(make_policy):
    limit = lab_setting('SERVERLAB_ORACLE_MAX_REQUESTS', 2000)
    metric, source = uncovered_line(100, 0.01, 5, cap=limit)
    trace = run(make_policy(), metric, source)
    if trace.stop_reason != 'spawn-target':
        return f"{trace.policy} stopped on {trace.stop_reason} after {trace.request_count} requests"
    bound = forked_offline_plan(trace, source)
    opt = opt_infinite(metric, trace.requests).total_cost
    if bound + EXACT < opt:
        return f"ensemble {bound} below the optimum {opt} for {trace.policy}"
    return None


def bounds(seed=0, workers=None):
    rng = np.random.default_rng(seed)
    moo_cases = [
        (int(rng.integers(2, 6)), int(rng.integers(1, 4)), [int(i) for i in rng.integers(0, 1000, size=int(rng.integers(1, 13)))])
        for _ in range(50)
    ]
    result = run_cases('bounds', moo_cases, _moo_case, workers)
    ring_cases = [[round(float(x), 3) for x in rng.uniform(0.1, 100, size=int(rng.integers(1, 21)))] for _ in range(50)]
    weak_cases = [[f"p{int(i)}" for i in rng.integers(1, 7, size=30)] for _ in range(20)]
    ensemble_cases = [spawn_always, lambda: balance_family(1)]
    for part in (
        run_cases('bounds', ring_cases, _ring_case, workers),
        run_cases('bounds', weak_cases, _weak_case, workers),
        run_cases('bounds', ensemble_cases, _ensemble_case, workers),
    ):
        result.cases += part.cases
        result.failures.extend(part.failures)
    return result


SUITES = {
    'oracles': (oracles, 'flow and assignment oracles equal brute force on three 3-point metrics, m <= 5'),
    'sdc-identity': (sdc_identity, 'S-DC cost equals sum z_i x_i on 1000 random half-line runs'),
    'metric-axioms': (metric_axioms, 'sampled metric axioms; layered-graph distances equal BFS'),
    'lambda': (lambda_suite, 'the 3.146 root and its residual'),
    'bounds': (bounds, 'MOO ratio, ring split, weak reduction and ensemble inequalities'),
}


def run_suite(name, seed=0, workers=None):
    suite, _ = SUITES[name]
    return suite(seed=seed, workers=workers)
