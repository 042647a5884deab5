"""
Offline service schedules.

A plan partitions request indices (1-based, matching `Request.t`) into time-increasing
chains; each chain is served by one server leaving the source for its first request and
travelling directly between consecutive requests.
"""

import logging
from dataclasses import dataclass, field

from engine.base import OnlinePolicy, SequenceSource
from engine.runner import run
from serverlab.exceptions import ConstructionError, PolicyError

logger = logging.getLogger(__name__)

ORACLE_INFINITE = 'oracle-infinite'
ORACLE_H = 'oracle-h'
BRUTE_FORCE = 'brute-force'
WITNESS = 'witness'


@dataclass(frozen=True)
class Chain:
    server: int
    requests: tuple

    def cost(self, metric, sequence):
        if not self.requests:
            return 0.0
        points = [sequence[t - 1] for t in self.requests]
        total = metric.distance(metric.source, points[0])
        for p, q in zip(points, points[1:]):
            total += metric.distance(p, q)
        return total


@dataclass(frozen=True)
class OfflinePlan:
    chains: tuple
    total_cost: float
    kind: str = ORACLE_INFINITE
    h: int = None
    label: str = ''
    _owner: dict = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        owner = {}
        for chain in self.chains:
            for t in chain.requests:
                owner[t] = chain
        object.__setattr__(self, '_owner', owner)

    @property
    def server_count(self):
        return len(self.chains)

    def chain_of(self, t):
        return self._owner.get(t)

    def validate(self, m):
        """Every request 1..m in exactly one chain, chains increasing in time."""
        seen = []
        for chain in self.chains:
            if list(chain.requests) != sorted(set(chain.requests)):
                raise ConstructionError(f"chain of server {chain.server} is not time-increasing")
            seen.extend(chain.requests)
        if sorted(seen) != list(range(1, m + 1)):
            raise ConstructionError(f"plan does not partition requests 1..{m}")
        if self.h is not None and len(self.chains) > self.h:
            raise ConstructionError(f"plan uses {len(self.chains)} servers, more than h={self.h}")
        return True

    def chain_cost(self, metric, sequence):
        return sum(chain.cost(metric, sequence) for chain in self.chains)

    def as_dict(self, metric=None, sequence=None):
        data = {
            'kind': self.kind,
            'cost': self.total_cost,
            'servers': self.server_count,
            'chains': [{'server': c.server, 'requests': list(c.requests)} for c in self.chains],
        }
        if self.h is not None:
            data['h'] = self.h
        if metric is not None and sequence is not None:
            data['points'] = [[metric.encode(sequence[t - 1]) for t in c.requests] for c in self.chains]
        return data


def chains_from_successors(m, successor, first):
    """Build chains from request starts and a successor map (all 1-based)."""
    chains = []
    for server, start in enumerate(sorted(first), start=1):
        requests = [start]
        while requests[-1] in successor:
            requests.append(successor[requests[-1]])
        chains.append(Chain(server, tuple(requests)))
    return tuple(chains)


class ScriptedPolicy(OnlinePolicy):
    """Replays an OfflinePlan: request t is served by the server of its chain."""

    name = 'scripted'

    def __init__(self, plan):
        super().__init__(plan.kind)
        self.plan = plan
        self._fleet_ids = {}

    def serve(self, request, fleet):
        chain = self.plan.chain_of(request.t)
        if chain is None:
            raise PolicyError(f"plan has no chain for request {request.t}")
        sid = self._fleet_ids.get(chain.server)
        if sid is None:
            self._fleet_ids[chain.server] = fleet.spawn(request.point)
        else:
            fleet.move(sid, request.point)


def replay_plan(plan, metric, sequence):
    """Serve `sequence` with the plan through the engine; returns the trace."""
    return run(ScriptedPolicy(plan), metric, SequenceSource(sequence, name='plan-replay'))
