"""The move-only-outwards policy for layered graphs."""

import logging

from engine.base import OnlinePolicy
from metrics.graphs import LayeredGraph
from serverlab.exceptions import PolicyError

logger = logging.getLogger(__name__)

TIE_BREAKS = ('lowest-id', 'highest-id')


class MoveOnlyOutwards(OnlinePolicy):
    """
    Lazy and local layered-graph policy that never moves a server toward the root.

    An uncovered request on layer l is served by the nearest own server on a layer below l
    that reaches it moving outward only; the root's reserve always qualifies and loses
    every tie.
    """

    name = 'moo'

    def __init__(self, tie_break='lowest-id'):
        if tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie break {tie_break!r}; choose from {', '.join(TIE_BREAKS)}")
        self.tie_break = tie_break
        super().__init__('' if tie_break == 'lowest-id' else tie_break)

    def serve(self, request, fleet):
        graph = fleet.metric
        if not isinstance(graph, LayeredGraph):
            raise PolicyError("moo needs a layered graph")
        r = request.point
        if fleet.covers(r):
            return
        sign = 1 if self.tie_break == 'lowest-id' else -1
        best = (r.layer, float('inf'), None)
        for sid, p in fleet.servers():
            if p.layer < r.layer and graph.reaches_outward(p, r):
                best = min(best, (r.layer - p.layer, sign * sid, sid))
        if best[2] is None:
            fleet.spawn(r)
        else:
            fleet.move(best[2], r)


def moo(tie_break='lowest-id'):
    return MoveOnlyOutwards(tie_break)
