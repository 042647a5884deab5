"""Baseline policies and the Balance family."""

import logging

from engine.base import OnlinePolicy

logger = logging.getLogger(__name__)

# Sorts after every real server id
RESERVE = float('inf')


class SpawnAlways(OnlinePolicy):
    """Serve every uncovered request with a fresh server."""

    name = 'spawn_always'

    def serve(self, request, fleet):
        if not fleet.covers(request.point):
            fleet.spawn(request.point)


class GreedyNearest(OnlinePolicy):
    """Move the nearest server, the source reserve included; ties go to the lowest id."""

    name = 'greedy_nearest'

    def serve(self, request, fleet):
        r = request.point
        if fleet.covers(r):
            return
        metric = fleet.metric
        best = (metric.distance(metric.source, r), RESERVE)
        for sid, p in fleet.servers():
            best = min(best, (metric.distance(p, r), sid))
        if best[1] == RESERVE:
            fleet.spawn(r)
        else:
            fleet.move(best[1], r)


class BalanceFamily(OnlinePolicy):
    """
    Move the server x minimizing D_x + w*d(x, r), where D_x is the distance x has
    travelled so far; the reserve enters as a fresh server with D_x = 0.  Ties prefer an
    existing server, then the lowest id.  w=1 is Balance, w=2 is Balance2.
    """

    name = 'balance'

    def __init__(self, weight=1.0):
        if weight < 1:
            raise ValueError(f"balance weight must be at least 1, got {weight}")
        self.weight = float(weight)
        super().__init__(f"w={self.weight:g}")

    def score(self, fleet, sid, r):
        return fleet.cumulative(sid) + self.weight * fleet.metric.distance(fleet.position(sid), r)

    def serve(self, request, fleet):
        r = request.point
        if fleet.covers(r):
            return
        metric = fleet.metric
        best = (self.weight * metric.distance(metric.source, r), 1, RESERVE)
        for sid, _ in fleet.servers():
            best = min(best, (self.score(fleet, sid, r), 0, sid))
        if best[2] == RESERVE:
            fleet.spawn(r)
        else:
            fleet.move(best[2], r)


def spawn_always():
    return SpawnAlways()


def greedy_nearest():
    return GreedyNearest()


def balance_family(weight=1.0):
    return BalanceFamily(weight)
