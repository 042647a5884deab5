"""
Normalizing wrappers: lazy (move at most one server, only for uncovered requests) and
local (never move a server past an own server on a shortest path, graphs only).

Both simulate the wrapped policy on a private virtual fleet and translate its moves.
"""

import logging

from serverlab.exceptions import MetricError, PolicyError

from .base import OnlinePolicy
from .fleet import Fleet

logger = logging.getLogger(__name__)


class LazyPolicy(OnlinePolicy):
    name = 'lazy'

    def __init__(self, inner):
        super().__init__()
        self.inner = inner
        self.virtual = None
        # virtual server id -> real server id; unmatched virtual servers map to the reserve
        self.matching = {}

    def describe(self):
        return f"lazy[{self.inner.describe()}]"

    def serve(self, request, fleet):
        if self.virtual is None:
            self.virtual = Fleet(fleet.metric)
        self.virtual.begin_step(request.t)
        self.inner.serve(request, self.virtual)
        point = request.point
        if not self.virtual.covers(point):
            raise PolicyError(f"{self.inner.describe()} left {point!r} uncovered")
        if fleet.covers(point):
            return

        metric = fleet.metric
        best = None
        for vid in self.virtual.servers_at(point):
            real = self.matching.get(vid)
            origin = metric.source if real is None else fleet.position(real)
            key = (metric.distance(origin, point), vid)
            if best is None or key < best[0]:
                best = (key, vid, real)
        if best is None:
            # Only the virtual reserve covers the request: the source itself
            return
        _, vid, real = best
        if real is None:
            self.matching[vid] = fleet.spawn(point)
        else:
            fleet.move(real, point)


class LocalPolicy(OnlinePolicy):
    """
    Swap decomposition: a move a->b passing an own server at c becomes a->c followed by
    the c server continuing to b.  The virtual and real configurations stay equal as
    multisets; only server identities are exchanged.
    """

    name = 'local'

    def __init__(self, inner, graph=None):
        super().__init__()
        self.inner = inner
        self.graph = graph
        self.virtual = None
        self.to_real = {}
        self.to_virtual = {}

    def describe(self):
        return f"local[{self.inner.describe()}]"

    def serve(self, request, fleet):
        metric = fleet.metric
        if self.virtual is None:
            if metric.continuous:
                raise MetricError("localize needs a graph metric with exact distances")
            self.virtual = Fleet(metric)
        self.virtual.begin_step(request.t)
        self.inner.serve(request, self.virtual)
        for event in list(self.virtual.last_events):
            self._relay(event, fleet)

    def _between(self, fleet, mover, a, b):
        """Own server strictly inside a shortest a-b path, nearest to a."""
        metric = fleet.metric
        dab = metric.distance(a, b)
        best = None
        for sid, c in fleet.servers():
            if sid == mover or c == a or c == b or metric.is_source(c):
                continue
            dac = metric.distance(a, c)
            if dac + metric.distance(c, b) == dab:
                key = (dac, sid)
                if best is None or key < best:
                    best = key
        return None if best is None else best[1]

    def _relay(self, event, fleet):
        vid = event.server
        real = self.to_real.get(vid)
        a = fleet.source if real is None else fleet.position(real)
        b = event.target
        while True:
            blocker = self._between(fleet, real, a, b)
            if blocker is None:
                break
            c = fleet.position(blocker)
            if real is None:
                real = fleet.spawn(c)
            else:
                fleet.move(real, c)
            # The mover now stands where the blocker stood; swap identities
            blocker_virtual = self.to_virtual.get(blocker)
            self._bind(blocker_virtual, real)
            real, a = blocker, c
        if real is None:
            real = fleet.spawn(b)
        else:
            fleet.move(real, b)
        self._bind(vid, real)

    def _bind(self, vid, real):
        if vid is None:
            return
        self.to_real[vid] = real
        self.to_virtual[real] = vid


def lazify(policy):
    return LazyPolicy(policy)


def localize(policy, graph=None):
    return LocalPolicy(policy, graph)
