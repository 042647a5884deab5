"""
Request sequences on the line that defeat the Balance family.
"""

import logging
import math

from metrics.spaces import make_line
from serverlab.exceptions import ConstructionError

from .base import ScriptedSource, cap_factor

logger = logging.getLogger(__name__)


class BalanceDescent(ScriptedSource):
    """1, 1-eps, ..., 1-n*eps; a single offline server walks down the sequence."""

    name = 'balance_descent'

    def __init__(self, metric, eps, n):
        super().__init__(metric)
        if eps <= 0 or n < 0:
            raise ConstructionError(f"need eps > 0 and n >= 0, got eps={eps}, n={n}")
        if n * eps >= 1:
            raise ConstructionError(f"descent leaves (0, 1]: n*eps = {n * eps:g}")
        self.eps = eps
        self.n = n

    def describe(self):
        return f"balance_descent:eps={self.eps:g},n={self.n}"

    def points(self):
        return [1 - i * self.eps for i in range(self.n + 1)]

    def script(self):
        self.slot = 0
        yield from self.points()
        return 'complete'

    def witness(self):
        return self.chains_by_slot()


class Balance2Phases(ScriptedSource):
    """
    Phase i alternates 1 - 2i*eps and 1 - (2i+1)*eps until the server that took the
    phase's first request has travelled more than 2 - (4i+5)*eps in total.
    """

    name = 'balance2_phases'

    def __init__(self, metric, eps, phases):
        super().__init__(metric)
        if eps <= 0 or phases < 1:
            raise ConstructionError(f"need eps > 0 and phases >= 1, got eps={eps}, phases={phases}")
        if (4 * phases + 5) * eps >= 0.5:
            raise ConstructionError(f"requests leave [1/2, 1]: (4n+5)*eps = {(4 * phases + 5) * eps:g}")
        self.eps = eps
        self.phases = phases
        self.active = []
        self.phase_cap = cap_factor() * math.ceil(2 / eps)

    def describe(self):
        return f"balance2_phases:eps={self.eps:g},phases={self.phases}"

    def point(self, j):
        return 1 - j * self.eps

    def script(self):
        for i in range(self.phases):
            pair = (2 * i, 2 * i + 1)
            limit = 2 - (4 * i + 5) * self.eps
            self.slot = 0
            yield self.point(pair[0])
            served_by = self.view.servers_at(self.point(pair[0]))
            if not served_by:
                raise ConstructionError(f"phase {i} opening request left uncovered")
            active = served_by[0]
            self.active.append(active)
            for step in range(1, self.phase_cap + 1):
                if self.view.cumulative(active) > limit:
                    break
                j = pair[step % 2]
                self.slot = j % 2
                yield self.point(j)
            else:
                return 'cap'
            logger.debug("phase %s closed after %s requests", i, step)
        return 'phases-complete'

    def witness(self):
        return self.chains_by_slot()


def balance_descent(eps, n):
    metric = make_line()
    return metric, BalanceDescent(metric, eps, n)


def balance2_phases(eps, phases):
    metric = make_line()
    return metric, Balance2Phases(metric, eps, phases)
