"""
Double coverage with server speeds on the half-line [0, inf), source 0.

Servers are indexed by spawn order; since every new server enters from the source at
the left end and servers never overtake, x_1 >= x_2 >= ... holds throughout.
"""

import logging

from engine.base import OnlinePolicy
from metrics.spaces import tolerance
from metrics.speeds import SpeedSchedule
from serverlab.exceptions import PolicyError

logger = logging.getLogger(__name__)


class SpeedDoubleCoverage(OnlinePolicy):
    name = 'sdc'

    def __init__(self, speeds=None):
        if speeds is None:
            speeds = SpeedSchedule.constant(1)
        elif not isinstance(speeds, SpeedSchedule):
            speeds = SpeedSchedule.parse(speeds)
        self.speeds = speeds
        # Own servers in spawn order
        self.order = []
        super().__init__(str(speeds))

    def positions(self, fleet):
        return [fleet.position(sid) for sid in self.order]

    def covered(self, fleet, y):
        tol = tolerance()
        return y <= tol or any(abs(x - y) <= tol for x in self.positions(fleet))

    def serve(self, request, fleet):
        y = request.point
        if y < 0:
            raise PolicyError(f"sdc runs on the half-line; got request {y}")
        if self.covered(fleet, y):
            return
        xs = self.positions(fleet)
        if not xs:
            self.order.append(fleet.spawn(y))
            return
        if y > xs[0]:
            fleet.move(self.order[0], y)
            return

        # x_{i+1} < y < x_i, with the source playing x_{n+1} at 0
        n = len(xs)
        i = next(i for i in range(1, n + 1) if i == n or xs[i] < y)
        right_id, right = self.order[i - 1], xs[i - 1]
        left_id, left = (self.order[i], xs[i]) if i < n else (None, 0.0)
        speed = self.speeds.speed(i + 1)

        if (y - left) / speed <= right - y:
            left_to, right_to = y, right - (y - left) / speed
        else:
            left_to, right_to = left + speed * (right - y), y

        if left_id is None:
            self.order.append(fleet.spawn(left_to))
        else:
            fleet.move(left_id, left_to)
        fleet.move(right_id, right_to)

    def check_order(self, fleet):
        xs = self.positions(fleet)
        return all(a >= b for a, b in zip(xs, xs[1:]))


def sdc(speeds=None):
    return SpeedDoubleCoverage(speeds)
