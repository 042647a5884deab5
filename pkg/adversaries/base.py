"""
Adaptive request sources and the offline strategies they build alongside.

A `ScriptedSource` is written as a generator: `script()` yields one point per request and
reads `self.view` (the online fleet after the previous step) when it resumes.  Its return
value becomes the stop reason.
"""

import bisect
import logging
from collections import defaultdict

from engine.base import RequestSource
from offline.plans import WITNESS, Chain, OfflinePlan
from serverlab.conf import lab_setting
from serverlab.exceptions import ConstructionError

logger = logging.getLogger(__name__)

NEVER = float('inf')


def cap_factor():
    return lab_setting('SERVERLAB_CAP_FACTOR', 10)


class ScriptedSource(RequestSource):
    name = 'scripted'

    def __init__(self, metric):
        self.metric = metric
        self.view = None
        self.requests = []
        # Construction-specific tag of every served request
        self.slots = []
        self.slot = None
        self.emitted = 0
        self._pending = None
        self._script = None

    def script(self):
        raise NotImplementedError

    def next_request(self, view):
        self.view = view
        if self._pending is not None:
            point, slot = self._pending
            self.requests.append(point)
            self.slots.append(slot)
            self._pending = None
        if self._script is None:
            self._script = self.script()
        try:
            point = next(self._script)
        except StopIteration as stop:
            self.stop_reason = stop.value or 'complete'
            logger.info("%s stopped: %s after %s requests", self.describe(), self.stop_reason, self.emitted)
            return None
        self._pending = (point, self.slot)
        self.emitted += 1
        return point

    def until_covered(self, points, cap, slot_of=None):
        """
        Request the first uncovered point of `points` until all are covered.
        Returns False when `cap` requests did not suffice.
        """
        for _ in range(cap):
            point = next((p for p in points if not self.view.covers(p)), None)
            if point is None:
                return True
            if slot_of is not None:
                self.slot = slot_of(point)
            yield point
        return all(self.view.covers(p) for p in points)

    def vacated(self, candidates):
        """Origins of the last step's moves that lie in `candidates` and are now uncovered."""
        found = []
        for event in self.view.last_events:
            origin = event.origin
            if origin in candidates and not self.view.covers(origin) and origin not in found:
                found.append(origin)
        return found

    def chains_by_slot(self, label=''):
        """One offline server per slot, serving that slot's requests in order."""
        groups = defaultdict(list)
        for t, slot in enumerate(self.slots, start=1):
            groups[slot].append(t)
        chains = tuple(
            Chain(server, tuple(ts))
            for server, (_, ts) in enumerate(sorted(groups.items(), key=lambda item: item[1][0]), start=1)
        )
        total = sum(chain.cost(self.metric, self.requests) for chain in chains)
        return OfflinePlan(chains, total, kind=WITNESS, label=label or self.describe())


class OfflineWitness:
    """
    Offline servers moved explicitly by a construction.  `cost` counts every move; the
    resulting plan keeps only which server served which request.
    """

    def __init__(self, metric, sequence=()):
        self.metric = metric
        self.position = {}
        self.served = defaultdict(list)
        self.cost = 0.0
        self._next_id = 1
        self._uses = defaultdict(list)
        self.sequence = []
        self.extend(sequence)

    def extend(self, points):
        """Make future requests known to the furthest-next-use rule."""
        for point in points:
            self._uses[point].append(len(self.sequence) + 1)
            self.sequence.append(point)

    def next_use(self, point, t):
        uses = self._uses.get(point, ())
        i = bisect.bisect_right(uses, t)
        return uses[i] if i < len(uses) else NEVER

    def at(self, point):
        return sorted(sid for sid, p in self.position.items() if p == point)

    def covers(self, point):
        return bool(self.at(point))

    def spawn(self, to):
        sid = self._next_id
        self._next_id += 1
        self.position[sid] = self.metric.source
        self.move(sid, to)
        return sid

    def move(self, sid, to):
        self.cost += self.metric.distance(self.position[sid], to)
        self.position[sid] = to

    def choose(self, point, t, candidates):
        """Nearest candidate, then the one whose node is needed furthest in the future, then lowest id."""
        best = None
        for sid in candidates:
            here = self.position[sid]
            key = (self.metric.distance(here, point), -self.next_use(here, t), sid)
            if best is None or key < best:
                best = key
        return None if best is None else best[2]

    def serve(self, t, point, candidates=None, spawn=False):
        """
        Serve request t at `point`; without a server there, move the chosen candidate, or
        spawn one when `spawn` is set and no candidate exists.
        """
        here = self.at(point)
        if here:
            sid = here[0]
        else:
            pool = self.position if candidates is None else candidates
            sid = self.choose(point, t, pool)
            if sid is None and spawn:
                sid = self.spawn(point)
            elif sid is None:
                raise ConstructionError(f"offline strategy has no server for request {t} at {point!r}")
            else:
                self.move(sid, point)
        self.served[sid].append(t)
        return sid

    def plan(self, label=''):
        chains = tuple(Chain(sid, tuple(ts)) for sid, ts in sorted(self.served.items()) if ts)
        total = sum(chain.cost(self.metric, self.sequence) for chain in chains)
        return OfflinePlan(chains, total, kind=WITNESS, label=label)
