"""
Work function algorithm for the infinite server problem.

Configurations are subsets of the support (requested non-source points in order of first
appearance), stored as bitmasks; `values[mask]` is the work function.  The source always
holds the reserve, so it is never part of a configuration.
"""

import logging

import numpy as np

from engine.base import OnlinePolicy
from serverlab.conf import lab_setting
from serverlab.exceptions import OracleLimitError, PolicyError

logger = logging.getLogger(__name__)


class WorkFunctionTable:
    def __init__(self, metric):
        self.metric = metric
        self.support = []
        self._index = {}
        self.values = np.zeros(1)
        self.limit = lab_setting('SERVERLAB_WFA_MAX_POINTS', 16)

    @property
    def size(self):
        return len(self.values)

    def bit(self, p):
        return self._index.get(p)

    def mask_of(self, points):
        mask = 0
        for p in points:
            mask |= 1 << self._index[p]
        return mask

    def points_of(self, mask):
        return [p for i, p in enumerate(self.support) if mask >> i & 1]

    def _source_distance(self, r):
        return self.metric.distance(self.metric.source, r)

    def extend(self, r):
        """Add r to the support; w(C+r) = min(w(C) + d(s,r), min_{y not in C} w(C+y) + d(y,r))."""
        n = len(self.support)
        if n + 1 > self.limit:
            raise OracleLimitError(f"work function support would exceed {self.limit} points")
        w = self.values
        masks = np.arange(1 << n)
        upper = w + self._source_distance(r)
        for j, y in enumerate(self.support):
            free = (masks >> j & 1) == 0
            moved = w[masks[free] | (1 << j)] + self.metric.distance(y, r)
            upper[free] = np.minimum(upper[free], moved)
        self.values = np.concatenate([w, upper])
        self._index[r] = n
        self.support.append(r)
        return n

    def update(self, r):
        """Serve r: configurations without r must have moved r's server away afterwards."""
        b = self._index[r]
        w = self.values
        masks = np.arange(len(w))
        without = (masks >> b & 1) == 0
        base = masks[without]
        new = w[base | (1 << b)] + self._source_distance(r)
        for j, y in enumerate(self.support):
            if j == b:
                continue
            has_y = (base >> j & 1) == 1
            swapped = (base[has_y] & ~(1 << j)) | (1 << b)
            new[has_y] = np.minimum(new[has_y], w[swapped] + self.metric.distance(r, y))
        updated = w.copy()
        updated[base] = new
        self.values = updated

    def lipschitz_violations(self, tol=1e-9):
        """Single-move pairs whose values differ by more than the move cost."""
        w = self.values
        masks = np.arange(len(w))
        problems = []
        for j, p in enumerate(self.support):
            free = masks[(masks >> j & 1) == 0]
            gap = np.abs(w[free | (1 << j)] - w[free])
            if np.any(gap > self._source_distance(p) + tol):
                problems.append(f"spawn to {p!r}")
            for i, q in enumerate(self.support):
                if i == j:
                    continue
                pairs = free[(free >> i & 1) == 1]
                other = (pairs & ~(1 << i)) | (1 << j)
                if np.any(np.abs(w[pairs] - w[other]) > self.metric.distance(p, q) + tol):
                    problems.append(f"move {q!r}->{p!r}")
        return problems


def lexicographic_key(mask, width):
    return tuple(i for i in range(width) if mask >> i & 1)


class WorkFunctionAlgorithm(OnlinePolicy):
    """Move to the single-move successor C containing r minimizing w_t(C) + d(C_{t-1}, C)."""

    name = 'wfa'

    def __init__(self):
        super().__init__()
        self.table = None
        self.mask = 0
        self.holder = {}
        self.history = []

    def serve(self, request, fleet):
        metric = fleet.metric
        r = request.point
        if metric.is_source(r):
            return
        if self.table is None:
            self.table = WorkFunctionTable(metric)
        table = self.table
        bit = table.bit(r)
        if bit is None:
            bit = table.extend(r)
        previous = table.values
        table.update(r)
        self.history.append(float(np.min(table.values - previous)))

        if self.mask >> bit & 1:
            return
        width = len(table.support)
        options = [(table.values[self.mask | 1 << bit] + metric.distance(metric.source, r),
                    lexicographic_key(self.mask | 1 << bit, width), None)]
        for j, y in enumerate(table.support):
            if self.mask >> j & 1:
                target = (self.mask & ~(1 << j)) | (1 << bit)
                options.append((table.values[target] + metric.distance(y, r),
                                lexicographic_key(target, width), y))
        value, key, origin = min(options, key=lambda option: (option[0], option[1]))
        if origin is None:
            self.holder[r] = fleet.spawn(r)
        else:
            sid = self.holder.pop(origin)
            fleet.move(sid, r)
            self.holder[r] = sid
            self.mask &= ~(1 << table.bit(origin))
        self.mask |= 1 << bit
        if not fleet.covers(r):
            raise PolicyError(f"wfa failed to cover {r!r}")

    @property
    def lattice_size(self):
        return 0 if self.table is None else self.table.size


def wfa():
    return WorkFunctionAlgorithm()
