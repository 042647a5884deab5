"""
Exact offline optima.

Offline servers move directly between consecutive requests they serve and wait for free,
so a schedule is a partition of the requests into chains.  Costs are compared as
integers scaled by SERVERLAB_COST_SCALE.
"""

import logging

import numpy as np
from scipy.optimize import linear_sum_assignment

from serverlab.conf import lab_setting
from serverlab.exceptions import OracleLimitError

from .flow import MinCostFlow
from .plans import BRUTE_FORCE, ORACLE_H, ORACLE_INFINITE, Chain, OfflinePlan, chains_from_successors

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_REQUESTS = 8


def cost_scale():
    return lab_setting('SERVERLAB_COST_SCALE', 1_000_000_000)


def scaled_distances(metric, sequence):
    """(m x m request distances, m source distances), both as scaled integers."""
    scale = cost_scale()
    m = len(sequence)
    between = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        for j in range(i + 1, m):
            between[i, j] = between[j, i] = round(metric.distance(sequence[i], sequence[j]) * scale)
    source = np.array([round(metric.distance(metric.source, p) * scale) for p in sequence], dtype=np.int64)
    return between, source


def opt_infinite(metric, sequence):
    """
    Minimum-cost assignment of every request to a predecessor request or to the source;
    each request has at most one successor.
    """
    sequence = list(sequence)
    m = len(sequence)
    if m == 0:
        return OfflinePlan((), 0.0, kind=ORACLE_INFINITE)
    limit = lab_setting('SERVERLAB_ORACLE_MAX_REQUESTS', 2000)
    if m > limit:
        raise OracleLimitError(f"opt_infinite refuses {m} requests (limit {limit})")
    between, source = scaled_distances(metric, sequence)

    # Rows 0..m-1: request i as predecessor; rows m..2m-1: copies of the source
    matrix = np.full((2 * m, m), np.inf)
    upper = np.triu(np.ones((m, m), dtype=bool), k=1)
    matrix[:m][upper] = between[upper]
    matrix[m:] = source[None, :]
    rows, cols = linear_sum_assignment(matrix)

    successor = {}
    first = []
    total = 0
    for row, col in zip(rows, cols):
        total += int(matrix[row, col])
        if row < m:
            successor[row + 1] = col + 1
        else:
            first.append(col + 1)
    chains = chains_from_successors(m, successor, first)
    plan = OfflinePlan(chains, total / cost_scale(), kind=ORACLE_INFINITE)
    logger.debug("opt_infinite: m=%s cost=%.9g servers=%s", m, plan.total_cost, plan.server_count)
    return plan


def opt_h(metric, sequence, h):
    """
    Minimum cost with h servers starting at the source: min-cost flow of h units through
    split request nodes, with a reward of -M on every request edge forcing service.
    """
    if h < 1:
        raise ValueError(f"h must be at least 1, got {h}")
    sequence = list(sequence)
    m = len(sequence)
    if m == 0:
        return OfflinePlan((), 0.0, kind=ORACLE_H, h=h)
    limit = lab_setting('SERVERLAB_FLOW_MAX_REQUESTS', 2000)
    if m > limit:
        raise OracleLimitError(f"opt_h refuses {m} requests (limit {limit})")
    between, source = scaled_distances(metric, sequence)
    big = (m + 1) * int(max(between.max(), source.max())) + 1

    # S = 0, in_j = 2j+1, out_j = 2j+2, T = 2m+1
    s, t = 0, 2 * m + 1
    flow = MinCostFlow(2 * m + 2)
    start_edges = {}
    link_edges = {}
    for j in range(m):
        start_edges[j] = flow.add_edge(s, 2 * j + 1, 1, int(source[j]))
        flow.add_edge(2 * j + 1, 2 * j + 2, 1, -big)
        flow.add_edge(2 * j + 2, t, 1, 0)
        for i in range(j):
            link_edges[i, j] = flow.add_edge(2 * i + 2, 2 * j + 1, 1, int(between[i, j]))
    flow.add_edge(s, t, h, 0)

    order = [s] + [node for j in range(m) for node in (2 * j + 1, 2 * j + 2)] + [t]
    sent, cost = flow.min_cost_flow(s, t, h, potentials=flow.dag_potentials(s, order))
    total = cost + m * big

    successor = {i + 1: j + 1 for (i, j), edge in link_edges.items() if edge.cap == 0}
    first = [j + 1 for j, edge in start_edges.items() if edge.cap == 0]
    chains = chains_from_successors(m, successor, first)
    plan = OfflinePlan(chains, total / cost_scale(), kind=ORACLE_H, h=h)
    logger.debug("opt_h: m=%s h=%s cost=%.9g", m, h, plan.total_cost)
    return plan


def _restricted_growth(m, labels):
    """Assignments of m requests to servers numbered by first use, at most `labels` servers."""
    assignment = [0] * m

    def extend(i, used):
        if i == m:
            yield assignment
            return
        for server in range(min(used + 1, labels)):
            assignment[i] = server
            yield from extend(i + 1, max(used, server + 1))

    yield from extend(0, 0)


def brute_force_opt(metric, sequence, h=None):
    """Exhaustive search over server assignments; h=None means unboundedly many servers."""
    sequence = list(sequence)
    m = len(sequence)
    if m > BRUTE_FORCE_MAX_REQUESTS:
        raise OracleLimitError(f"brute force refuses {m} requests (limit {BRUTE_FORCE_MAX_REQUESTS})")
    if m == 0:
        return 0.0
    between, source = scaled_distances(metric, sequence)
    labels = m if h is None else min(h, m)
    best = None
    for assignment in _restricted_growth(m, labels):
        last = {}
        total = 0
        for j, server in enumerate(assignment):
            total += source[j] if server not in last else between[last[server], j]
            last[server] = j
        if best is None or total < best:
            best = int(total)
    return best / cost_scale()


def brute_force_plan(metric, sequence, h=None):
    """Like brute_force_opt but returns the optimal plan."""
    sequence = list(sequence)
    m = len(sequence)
    if m > BRUTE_FORCE_MAX_REQUESTS:
        raise OracleLimitError(f"brute force refuses {m} requests (limit {BRUTE_FORCE_MAX_REQUESTS})")
    if m == 0:
        return OfflinePlan((), 0.0, kind=BRUTE_FORCE, h=h)
    between, source = scaled_distances(metric, sequence)
    labels = m if h is None else min(h, m)
    best = None
    for assignment in _restricted_growth(m, labels):
        last = {}
        total = 0
        for j, server in enumerate(assignment):
            total += source[j] if server not in last else between[last[server], j]
            last[server] = j
        if best is None or total < best[0]:
            best = (int(total), list(assignment))
    groups = {}
    for j, server in enumerate(best[1]):
        groups.setdefault(server, []).append(j + 1)
    chains = tuple(Chain(server + 1, tuple(requests)) for server, requests in sorted(groups.items()))
    return OfflinePlan(chains, best[0] / cost_scale(), kind=BRUTE_FORCE, h=h)
