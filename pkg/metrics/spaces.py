"""
Metric spaces with a distinguished source point.

Points are plain hashable values: floats on the line, string labels on uniform spaces,
integer indices on finite explicit spaces and `graphs.Node` objects on layered graphs.
"""

import logging
import math
from collections import deque

import numpy as np

from serverlab.conf import lab_setting
from serverlab.exceptions import MetricError

logger = logging.getLogger(__name__)

KINDS = (
    'line', 'half-line', 'uniform', 'finite-explicit',
    'weighted-tree', 'layered-graph', 'shifted', 'ring',
)


def tolerance():
    return lab_setting('SERVERLAB_TOLERANCE', 1e-9)


class MetricSpace:
    """Base class: a distance function, a source point and a kind tag."""

    kind = None
    # Coordinate spaces compare points with a tolerance
    continuous = False

    def __init__(self, source):
        self.source = source

    def distance(self, p, q):
        raise NotImplementedError

    def contains(self, p):
        return True

    def points(self):
        """All points of a finite space, source first; None for infinite spaces."""
        return None

    def encode(self, p):
        """JSON-friendly representation of a point."""
        return p

    def decode(self, token):
        return token

    def describe(self):
        return self.kind

    def is_source(self, p):
        return p == self.source

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.describe()}>"


class LineMetric(MetricSpace):
    continuous = True

    def __init__(self, source_coord=0.0, lower=None):
        super().__init__(float(source_coord))
        self.lower = lower
        self.kind = 'line' if lower is None else 'half-line'

    def distance(self, p, q):
        return abs(p - q)

    def contains(self, p):
        if not isinstance(p, (int, float)):
            return False
        return self.lower is None or p >= self.lower - tolerance()

    def decode(self, token):
        return float(token)

    def describe(self):
        if self.lower is None:
            return f"line:source={self.source:g}"
        return "half-line"


class UniformMetric(MetricSpace):
    """
    Labelled points at pairwise distance `spacing`; the source sits at `source_distance`
    from every other point (equal to `spacing` for the plain uniform space).
    """

    kind = 'uniform'

    def __init__(self, labels, spacing=1.0, source_distance=None, source='s'):
        super().__init__(source)
        labels = [str(label) for label in labels]
        if len(set(labels)) != len(labels) or source in labels:
            raise MetricError("uniform labels must be distinct and differ from the source")
        if spacing <= 0:
            raise MetricError("uniform spacing must be positive")
        self.labels = labels
        self._members = frozenset(labels)
        self.spacing = float(spacing)
        self.source_distance = float(spacing if source_distance is None else source_distance)
        if self.source_distance <= 0 or self.spacing > 2 * self.source_distance:
            raise MetricError("source distance must be positive and at least half the spacing")

    def distance(self, p, q):
        if p == q:
            return 0.0
        if p == self.source or q == self.source:
            return self.source_distance
        return self.spacing

    def contains(self, p):
        return p == self.source or p in self._members

    def points(self):
        return [self.source] + self.labels

    def describe(self):
        if self.source_distance == self.spacing:
            return f"uniform:n={len(self.labels)}"
        return f"cluster:n={len(self.labels)},gap={self.source_distance:g},diameter={self.spacing:g}"


class FiniteMetric(MetricSpace):
    """Explicit distance matrix over points 0..n-1."""

    kind = 'finite-explicit'

    def __init__(self, matrix, source=0, validate=True):
        self.matrix = np.asarray(matrix, dtype=float)
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n) or n == 0:
            raise MetricError("distance matrix must be square and non-empty")
        if not 0 <= source < n:
            raise MetricError(f"source index {source} outside 0..{n - 1}")
        super().__init__(int(source))
        if validate:
            violations = triangle_violations(self.matrix)
            if violations:
                raise MetricError(f"matrix is not a metric: {violations[0]}")

    def distance(self, p, q):
        return float(self.matrix[p, q])

    def contains(self, p):
        return isinstance(p, (int, np.integer)) and 0 <= p < self.matrix.shape[0]

    def points(self):
        others = [i for i in range(self.matrix.shape[0]) if i != self.source]
        return [self.source] + others

    def decode(self, token):
        return int(token)

    def describe(self):
        return f"finite:n={self.matrix.shape[0]}"


def triangle_violations(matrix, tol=None):
    """Exhaustive metric-axiom scan of a distance matrix; returns readable violations."""
    tol = tolerance() if tol is None else tol
    d = np.asarray(matrix, dtype=float)
    n = d.shape[0]
    problems = []
    if not np.allclose(d, d.T, atol=tol):
        problems.append("matrix is not symmetric")
    if np.any(np.abs(np.diag(d)) > tol):
        problems.append("diagonal is not zero")
    off = d + np.eye(n)
    if np.any(off[~np.eye(n, dtype=bool)] <= 0):
        problems.append("distinct points at distance zero")
    for k in range(n):
        through = d[:, k][:, None] + d[k, :][None, :]
        bad = np.argwhere(d > through + tol)
        if len(bad):
            i, j = bad[0]
            problems.append(f"d({i},{j}) > d({i},{k}) + d({k},{j})")
            break
    return problems


class WeightedTree(MetricSpace):
    """Finite tree metric rooted at the source; `parents` maps child -> (parent, weight)."""

    kind = 'weighted-tree'

    def __init__(self, parents, root='r'):
        super().__init__(root)
        self._parent = {}
        self._depth = {root: 0.0}
        self._level = {root: 0}
        children = {}
        for child, (parent, weight) in parents.items():
            if weight <= 0:
                raise MetricError(f"edge {parent}-{child} needs a positive weight")
            self._parent[child] = (parent, float(weight))
            children.setdefault(parent, []).append(child)
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for child in children.get(node, []):
                _, weight = self._parent[child]
                self._depth[child] = self._depth[node] + weight
                self._level[child] = self._level[node] + 1
                queue.append(child)
        if len(self._depth) != len(self._parent) + 1:
            raise MetricError("parent map does not describe a tree hanging from the root")

    def distance(self, p, q):
        a, b = p, q
        while self._level[a] > self._level[b]:
            a = self._parent[a][0]
        while self._level[b] > self._level[a]:
            b = self._parent[b][0]
        while a != b:
            a = self._parent[a][0]
            b = self._parent[b][0]
        return self._depth[p] + self._depth[q] - 2 * self._depth[a]

    def contains(self, p):
        return p in self._depth

    def points(self):
        return [self.source] + sorted((p for p in self._depth if p != self.source), key=str)

    def describe(self):
        return f"tree:n={len(self._depth)}"


class ShiftedMetric(MetricSpace):
    """The base space with the source pushed `w` farther from every other point."""

    kind = 'shifted'

    def __init__(self, base, w):
        if w < 0:
            raise MetricError(f"shift must be non-negative, got {w}")
        super().__init__(base.source)
        self.base = base
        self.w = float(w)
        self.continuous = base.continuous

    def distance(self, p, q):
        if p == q:
            return 0.0
        if p == self.source or q == self.source:
            return self.base.distance(p, q) + self.w
        return self.base.distance(p, q)

    def contains(self, p):
        return self.base.contains(p)

    def points(self):
        return self.base.points()

    def encode(self, p):
        return self.base.encode(p)

    def decode(self, token):
        return self.base.decode(token)

    def describe(self):
        return f"{self.base.describe()}+shift={self.w:g}"


class RingMetric(MetricSpace):
    """Points at distance in [r^n, r^(n+1)) from the source, plus the source."""

    kind = 'ring'

    def __init__(self, base, r, n):
        if r <= 1:
            raise MetricError(f"ring ratio must exceed 1, got {r}")
        super().__init__(base.source)
        self.base = base
        self.r = float(r)
        self.n = int(n)
        self.inner = self.r ** self.n
        self.outer = self.r ** (self.n + 1)
        self.continuous = base.continuous

    def distance(self, p, q):
        return self.base.distance(p, q)

    def contains(self, p):
        if p == self.source:
            return True
        if not self.base.contains(p):
            return False
        d = self.base.distance(self.source, p)
        return self.inner <= d < self.outer

    def points(self):
        base_points = self.base.points()
        if base_points is None:
            return None
        return [p for p in base_points if self.contains(p)]

    def encode(self, p):
        return self.base.encode(p)

    def decode(self, token):
        return self.base.decode(token)

    def describe(self):
        return f"{self.base.describe()}|ring r={self.r:g} n={self.n}"


def ring_index(metric, p, r):
    """Index n with d(s,p) in [r^n, r^(n+1)); None for the source."""
    d = metric.distance(metric.source, p)
    if d == 0:
        return None
    n = math.floor(math.log(d) / math.log(r))
    while r ** (n + 1) <= d:
        n += 1
    while r ** n > d:
        n -= 1
    return n


def make_line(source_coord=0.0):
    return LineMetric(source_coord)


def make_half_line():
    return LineMetric(0.0, lower=0.0)


def make_uniform(labels=None, n=None):
    if labels is None:
        labels = [f"p{i}" for i in range(1, (n or 0) + 1)]
    return UniformMetric(labels)


def make_cluster(n, gap, diameter):
    """N points at distance `gap` from the source and pairwise distance `diameter`."""
    if gap <= 0 or diameter <= 0:
        raise MetricError("cluster gap and diameter must be positive")
    return UniformMetric([f"p{i}" for i in range(1, n + 1)], spacing=diameter, source_distance=gap)


def make_finite(matrix, source=0):
    return FiniteMetric(matrix, source=source)


def make_weighted_tree(parents, root='r'):
    return WeightedTree(parents, root=root)


def make_shifted(base, w):
    return ShiftedMetric(base, w)


def make_ring(base, r, n):
    return RingMetric(base, r, n)
