"""
Uncovered-point adversary for small clusters far from the source.

The adversary always requests the lowest-index point not occupied by an online server
and stops right after the online algorithm spawns its k-th server, or earlier once a
goal ratio against the parked-server bound is met.  The forked offline ensemble and the
parked-server cost both bound the optimum of the resulting sequence from above.
"""

import logging
import math

from analysis.formulas import solve_lambda
from analysis.reports import ENSEMBLE
from metrics.spaces import make_cluster, make_line
from offline.ensemble import ensemble_bound
from offline.plans import WITNESS
from serverlab.exceptions import ConstructionError

from .base import ScriptedSource, cap_factor

logger = logging.getLogger(__name__)


def line_grid(big_delta, delta, count):
    """p_i = Delta + (i-1) * delta / (count-1), i = 1..count."""
    if big_delta <= 0 or delta <= 0:
        raise ConstructionError("gap and diameter must be positive")
    if count == 1:
        return [float(big_delta)]
    return [big_delta + i * delta / (count - 1) for i in range(count)]


class UncoveredPoint(ScriptedSource):
    name = 'uncovered'

    def __init__(self, metric, points, k, cap=None, goal_ratio=None):
        super().__init__(metric)
        points = list(points)
        if len(set(points)) != len(points):
            raise ConstructionError("uncovered-point targets must be distinct")
        if any(metric.is_source(p) for p in points):
            raise ConstructionError("the source cannot be a target")
        if k < 1:
            raise ConstructionError(f"spawn target must be at least 1, got {k}")
        self.points = points
        self.k = int(k)
        self.cap = int(cap) if cap is not None else cap_factor() * self.k * len(points)
        # Stop as soon as online cost / parked_cost() reaches this
        self.goal_ratio = goal_ratio
        self.requested = {}
        self._parked = 0.0
        self.big_delta = min(metric.distance(metric.source, p) for p in points)
        self.delta = max(
            (metric.distance(p, q) for i, p in enumerate(points) for q in points[i + 1:]),
            default=0.0,
        )

    def describe(self):
        return f"uncovered:N={len(self.points)},k={self.k}"

    def parked_cost(self):
        """One server parked on every point requested so far; an upper bound on OPT."""
        return self._parked

    def goal_reached(self):
        if self.goal_ratio is None or not self.requested:
            return False
        return self.view.total_cost / self._parked >= self.goal_ratio

    def script(self):
        for _ in range(self.cap):
            if self.view.spawn_count >= self.k:
                return 'spawn-target'
            if self.goal_reached():
                return 'ratio-reached'
            for i, point in enumerate(self.points):
                if not self.view.covers(point):
                    self.slot = i
                    if point not in self.requested:
                        self.requested[point] = self.metric.distance(self.metric.source, point)
                        self._parked = sum(self.requested.values())
                    yield point
                    break
            else:
                return 'points-exhausted'
        return 'cap'


def uncovered_point(metric, points, k, cap=None, goal_ratio=None):
    return UncoveredPoint(metric, points, k, cap=cap, goal_ratio=goal_ratio)


def uncovered_line(big_delta, delta, k, count=None, cap=None, goal_ratio=None):
    """(line metric, adversary) on the grid of count = k + 1 points in [Delta, Delta + delta]."""
    points = line_grid(big_delta, delta, count or k + 1)
    metric = make_line()
    return metric, UncoveredPoint(metric, points, k, cap=cap, goal_ratio=goal_ratio)


def uncovered_cluster(big_delta, delta, k, count=None, cap=None, goal_ratio=None):
    """(cluster metric, adversary): count points at distance Delta, pairwise delta."""
    metric = make_cluster(count or k + 1, big_delta, delta)
    return metric, UncoveredPoint(metric, metric.labels, k, cap=cap, goal_ratio=goal_ratio)


def parked_cost(metric, requests):
    """Cost of parking one server on every distinct requested point."""
    return sum({p: metric.distance(metric.source, p) for p in requests}.values())


def default_fleet_size(k):
    """h = ceil(k / lambda)."""
    return math.ceil(k / solve_lambda())


def forked_offline_plan(trace, adversary, h=None):
    """
    Averaged cost of the forked offline ensemble, walking the trace's moves.

    All forks spawn h servers to p_1..p_h; each spawn j >= h of the online algorithm forks
    them with one extra move of length at most delta, and each local online move made
    while it holds j servers is mirrored by a (j-h+1)/j share of the forks.
    """
    if trace.stop_reason != 'spawn-target':
        raise ConstructionError(f"ensemble bound needs a run stopped at its spawn target, got {trace.stop_reason}")
    if not trace.recorded:
        raise ConstructionError("ensemble bound needs a recorded trace")
    k = trace.spawn_count
    h = default_fleet_size(k) if h is None else h
    if not 1 <= h <= k:
        raise ValueError(f"need 1 <= h <= k, got h={h}, k={k}")
    big_delta, delta = adversary.big_delta, adversary.delta

    total = h * (big_delta + delta)
    j = 0
    for event in trace.events():
        if event.spawn:
            j += 1
            if h <= j < k:
                total += delta
        elif h <= j < k:
            total += (j - h + 1) / j * event.cost
    logger.debug("forked ensemble: k=%s h=%s bound=%.6g", k, h, total)
    return total


def offline_upper_bound(trace, adversary):
    """
    (value, kind) of the smallest upper bound on OPT available from a summary trace:
    the parked-server cost, and once the spawn target is reached the ensemble bound
    for every fleet size h = 1..k.
    """
    best, kind = parked_cost(trace.metric, trace.requests), WITNESS
    if trace.stop_reason == 'spawn-target':
        k = trace.spawn_count
        for h in range(1, k + 1):
            bound = ensemble_bound(trace.f_values, h, k, adversary.big_delta, adversary.delta)
            if bound < best:
                best, kind = bound, ENSEMBLE
    logger.debug("%s: offline upper bound %.6g (%s)", trace.source, best, kind)
    return best, kind
