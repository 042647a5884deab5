"""
Ring decomposition: requests at distance [r^n, r^(n+1)) from the source go to an
independent policy instance for ring n, each with servers of its own.
"""

import logging
from collections import defaultdict

from analysis.formulas import ring_factor
from engine.base import OnlinePolicy
from engine.fleet import FleetSlice
from metrics.spaces import make_ring, ring_index
from offline.oracles import opt_infinite

logger = logging.getLogger(__name__)


class RingDispatch(OnlinePolicy):
    name = 'ring'

    def __init__(self, factory, r):
        if r <= 1:
            raise ValueError(f"ring ratio must exceed 1, got {r}")
        self.factory = factory
        self.r = float(r)
        super().__init__(f"r={self.r:g}")
        # ring index -> (policy, fleet slice)
        self.rings = {}

    def describe(self):
        inner = next(iter(self.rings.values()))[0].describe() if self.rings else '?'
        return f"ring[{inner}]({self.params})"

    def instance(self, fleet, n):
        if n not in self.rings:
            ring = make_ring(fleet.metric, self.r, n)
            self.rings[n] = (self.factory(ring), FleetSlice(fleet, ring))
            logger.debug("ring %s opened", n)
        return self.rings[n]

    def serve(self, request, fleet):
        n = ring_index(fleet.metric, request.point, self.r)
        if n is None:
            return
        policy, ring_fleet = self.instance(fleet, n)
        policy.serve(request, ring_fleet)

    def ring_of(self, sid):
        for n, (_, ring_fleet) in self.rings.items():
            if ring_fleet.owns(sid):
                return n
        return None


def ring_dispatch(factory, r):
    """`factory(ring)` builds a fresh infinite-server policy for one ring."""
    return RingDispatch(factory, r)


def split_by_ring(metric, sequence, r):
    """{n: requests in ring n}; requests at the source are dropped."""
    rings = defaultdict(list)
    for p in sequence:
        n = ring_index(metric, p, r)
        if n is not None:
            rings[n].append(p)
    return dict(rings)


def ring_split_check(metric, sequence, r):
    """
    (sum of per-ring optima, optimum of the whole sequence, factor); the sum never exceeds
    factor * optimum.
    """
    whole = opt_infinite(metric, sequence).total_cost
    parts = sum(opt_infinite(metric, part).total_cost for part in split_by_ring(metric, sequence, r).values())
    return parts, whole, ring_factor(r)
