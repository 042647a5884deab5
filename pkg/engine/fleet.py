"""
Server state for one run.

A `Fleet` holds the spawned servers of an online algorithm.  The source holds an
unbounded reserve: `spawn` draws a fresh server from it, and a server moved back to the
source stays in the fleet (moving it out again counts as a spawn).
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

from metrics.spaces import tolerance
from serverlab.exceptions import PolicyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MoveEvent:
    server: int
    origin: object
    target: object
    cost: float
    spawn: bool


class Fleet:
    """Positions and cumulative travel D_x of every spawned server."""

    def __init__(self, metric):
        self.metric = metric
        self._position = {}
        self._cumulative = {}
        self._spawned_at = {}
        self._at = defaultdict(set)
        self._next_id = 1
        self.step = 0
        self.last_events = []
        self.total_cost = 0.0
        self.local_cost = 0.0
        self.spawn_count = 0
        self.spawn_marks = []

    @property
    def source(self):
        return self.metric.source

    def begin_step(self, t=None):
        self.step = self.step + 1 if t is None else t
        self.last_events = []

    # Reads

    @property
    def server_count(self):
        return len(self._position)

    def server_ids(self):
        return sorted(self._position)

    def servers(self):
        """[(id, position)] in id order."""
        return [(sid, self._position[sid]) for sid in sorted(self._position)]

    def position(self, sid):
        return self._position[sid]

    def cumulative(self, sid):
        return self._cumulative[sid]

    def spawned_at(self, sid):
        return self._spawned_at.get(sid)

    def occupied(self):
        """Multiset of non-source positions."""
        return Counter(p for p in self._position.values() if not self.metric.is_source(p))

    def servers_at(self, p):
        exact = sorted(self._at.get(p, ()))
        if exact or not self.metric.continuous:
            return exact
        tol = tolerance()
        return [sid for sid, q in self.servers() if abs(q - p) <= tol]

    def covers(self, p):
        if self.metric.is_source(p):
            return True
        return bool(self.servers_at(p))

    # Moves

    def spawn(self, to):
        """Draw a fresh server from the reserve and move it to `to`."""
        sid = self._next_id
        self._next_id += 1
        self._position[sid] = self.source
        self._cumulative[sid] = 0.0
        self._at[self.source].add(sid)
        self.move(sid, to)
        return sid

    def move(self, sid, to):
        if sid not in self._position:
            raise PolicyError(f"unknown server {sid}")
        if not self.metric.contains(to):
            raise PolicyError(f"server {sid} moved outside the metric: {to!r}")
        origin = self._position[sid]
        if origin == to:
            return None
        cost = self.metric.distance(origin, to)
        spawn = self.metric.is_source(origin)
        self._at[origin].discard(sid)
        if not self._at[origin]:
            del self._at[origin]
        self._at[to].add(sid)
        self._position[sid] = to
        self._cumulative[sid] += cost
        self.total_cost += cost
        if spawn:
            self.spawn_count += 1
            self._spawned_at.setdefault(sid, self.step)
            self.spawn_marks.append((self.spawn_count, self.local_cost))
        else:
            self.local_cost += cost
        event = MoveEvent(sid, origin, to, cost, spawn)
        self.last_events.append(event)
        return event

    def __repr__(self):
        return f"<Fleet {self.server_count} servers, cost={self.total_cost:g}>"


class FleetView:
    """Read-only window on a fleet handed to adaptive request sources."""

    def __init__(self, fleet):
        self._fleet = fleet

    @property
    def metric(self):
        return self._fleet.metric

    @property
    def server_count(self):
        return self._fleet.server_count

    @property
    def spawn_count(self):
        return self._fleet.spawn_count

    @property
    def total_cost(self):
        return self._fleet.total_cost

    @property
    def local_cost(self):
        return self._fleet.local_cost

    @property
    def last_events(self):
        return tuple(self._fleet.last_events)

    def servers(self):
        return self._fleet.servers()

    def position(self, sid):
        return self._fleet.position(sid)

    def cumulative(self, sid):
        return self._fleet.cumulative(sid)

    def occupied(self):
        return self._fleet.occupied()

    def servers_at(self, p):
        return self._fleet.servers_at(p)

    def covers(self, p):
        return self._fleet.covers(p)


class FleetSlice:
    """
    The part of a shared fleet owned by one policy instance.

    Only servers spawned through the slice are visible to it.  `transform` is an
    involution mapping the slice's coordinates to the shared fleet's (negation for the
    left half of the line); `metric` is the space the owner works in.
    """

    def __init__(self, fleet, metric=None, transform=None):
        self._fleet = fleet
        self.metric = metric or fleet.metric
        self._transform = transform or (lambda p: p)
        self._owned = set()

    @property
    def source(self):
        return self.metric.source

    @property
    def server_count(self):
        return len(self._owned)

    def owns(self, sid):
        return sid in self._owned

    def server_ids(self):
        return sorted(self._owned)

    def servers(self):
        return [(sid, self.position(sid)) for sid in sorted(self._owned)]

    def position(self, sid):
        return self._transform(self._fleet.position(sid))

    def cumulative(self, sid):
        return self._fleet.cumulative(sid)

    def occupied(self):
        return Counter(p for _, p in self.servers() if not self.metric.is_source(p))

    def servers_at(self, p):
        return [sid for sid in self._fleet.servers_at(self._transform(p)) if sid in self._owned]

    def covers(self, p):
        if self.metric.is_source(p):
            return True
        return bool(self.servers_at(p))

    def spawn(self, to):
        sid = self._fleet.spawn(self._transform(to))
        self._owned.add(sid)
        return sid

    def move(self, sid, to):
        if sid not in self._owned:
            raise PolicyError(f"server {sid} belongs to another policy instance")
        return self._fleet.move(sid, self._transform(to))
