"""
Adversaries against double coverage with server speeds on the half-line.

`SdcSlow` forces slowly accelerating schedules to pay for long relay chains while
filling n positions in [1, 2].  `SdcFast` shifts a tight group of n servers to the left
again and again so that a schedule with fast speeds pulls one more server from the
source on every repetition.
"""

import logging
import math

from analysis.formulas import cascade_denominator
from metrics.spaces import make_half_line, tolerance
from policies.sdc import SpeedDoubleCoverage
from serverlab.exceptions import ConstructionError

from .base import ScriptedSource, cap_factor

logger = logging.getLogger(__name__)


class SdcSlow(ScriptedSource):
    name = 'sdc_slow'

    def __init__(self, metric, n):
        super().__init__(metric)
        if n < 1:
            raise ConstructionError(f"need at least one position, got n={n}")
        self.n = n
        self.positions = [1.0] if n == 1 else [1 + j / (n - 1) for j in range(n)]
        self._slot = {p: j for j, p in enumerate(self.positions)}
        # Filling n positions takes on the order of n^3 requests
        self.cap = cap_factor() * n ** 3

    def describe(self):
        return f"sdc_slow:n={self.n}"

    def script(self):
        covered = yield from self.until_covered(self.positions, self.cap, slot_of=self._slot.get)
        return 'covered' if covered else 'cap'

    def witness(self):
        return self.chains_by_slot()


class SdcFast(ScriptedSource):
    name = 'sdc_fast'

    def __init__(self, metric, policy, n, delta, repetitions):
        super().__init__(metric)
        if not isinstance(policy, SpeedDoubleCoverage):
            raise ConstructionError(f"sdc_fast reads the speed schedule of a double coverage policy, got {policy!r}")
        if n < 2 or n % 2:
            raise ConstructionError(f"group size must be a positive even number, got n={n}")
        if delta <= 0 or repetitions < 1:
            raise ConstructionError("need delta > 0 and at least one repetition")
        if repetitions * delta >= 0.25:
            raise ConstructionError(f"repetitions*delta = {repetitions * delta:g} must stay below 1/4")
        self.policy = policy
        self.speeds = policy.speeds
        self.n = n
        self.delta = delta
        self.repetitions = repetitions
        self.cap = cap_factor() * (n + 1) * math.ceil(1 / delta)
        self.left_edge = 1.0
        self.records = []

    def describe(self):
        return f"sdc_fast:n={self.n},delta={self.delta:g},reps={self.repetitions}"

    def targets(self, left, count, k):
        """Targets left + j*delta with the offline server rotating by one per repetition."""
        points = [left + j * self.delta for j in range(count)]
        slots = {p: (j - k) % (self.n + 1) for j, p in enumerate(points)}
        return points, slots

    def pulled_server(self):
        """(position q, spawn index m, server id or None) of the server the next shift pulls."""
        tol = tolerance()
        stragglers = [
            (self.view.position(sid), sid) for sid in self.policy.order
            if self.view.position(sid) < self.left_edge - tol and not self.metric.is_source(self.view.position(sid))
        ]
        if stragglers:
            q, sid = max(stragglers)
            return q, self.policy.order.index(sid) + 1, sid
        return 0.0, len(self.policy.order) + 1, None

    def shift(self, q, m):
        """v = (G - delta - q) / (1 + sum_{i=m-n+1}^{m} prod_{j=i}^{m} s_j)."""
        return (self.left_edge - self.delta - q) / cascade_denominator(self.speeds, m, self.n)

    def script(self):
        points, slots = self.targets(1.0, self.n, 0)
        if not (yield from self.until_covered(points, self.cap, slot_of=slots.get)):
            return 'cap'
        for k in range(1, self.repetitions + 1):
            q, m, pulled = self.pulled_server()
            v = self.shift(q, m)
            left = self.left_edge - v - self.delta
            if left < 0.5:
                return 'left-edge'
            spawns_before = self.view.spawn_count
            points, slots = self.targets(left, self.n + 1, k)
            if not (yield from self.until_covered(points, self.cap, slot_of=slots.get)):
                return 'cap'
            if pulled is None:
                pulled = self.policy.order[m - 1] if len(self.policy.order) >= m else None
            landing = self.view.position(pulled) if pulled is not None else None
            self.records.append({
                'k': k,
                'v': v,
                'left_edge': left,
                'spawns': self.view.spawn_count - spawns_before,
                'pulled': pulled,
                'landing': landing,
            })
            logger.debug("repetition %s: v=%.6g left edge %.6g landing %s", k, v, left, landing)
            self.left_edge = left
        return 'repetitions'

    def witness(self):
        return self.chains_by_slot()


def sdc_slow(n):
    metric = make_half_line()
    return metric, SdcSlow(metric, n)


def sdc_fast(policy, n, delta, repetitions):
    metric = make_half_line()
    return metric, SdcFast(metric, policy, n, delta, repetitions)
