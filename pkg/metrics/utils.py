"""Loading finite metrics from matrix files and sampled metric-axiom checks."""

import logging

import numpy as np

from serverlab.exceptions import MetricError

from .spaces import FiniteMetric, triangle_violations

logger = logging.getLogger(__name__)


def load_matrix(path, source=0):
    """Read a finite metric: first line n, then n lines of n space-separated distances."""
    with open(path) as handle:
        lines = [line.split() for line in handle if line.strip()]
    if not lines:
        raise MetricError(f"{path}: empty matrix file")
    try:
        n = int(lines[0][0])
        rows = [[float(x) for x in row] for row in lines[1:]]
    except ValueError as exc:
        raise MetricError(f"{path}: {exc}") from exc
    if len(rows) != n or any(len(row) != n for row in rows):
        raise MetricError(f"{path}: expected {n} rows of {n} distances")
    logger.info("loaded %sx%s distance matrix from %s", n, n, path)
    return FiniteMetric(rows, source=source)


def sample_triangle_check(metric, points, samples=200, seed=0):
    """Spot-check the metric axioms on random triples drawn from `points`."""
    points = list(points)
    failures = []
    if len(points) < 2:
        return failures
    triples = np.random.default_rng(seed).integers(0, len(points), size=(samples, 3))
    for a, b, c in triples:
        p, q, r = points[a], points[b], points[c]
        dpq, dqp = metric.distance(p, q), metric.distance(q, p)
        if abs(dpq - dqp) > 1e-9:
            failures.append(f"asymmetric d({p},{q})")
        if p != q and dpq <= 0:
            failures.append(f"d({p},{q}) is not positive")
        if dpq > metric.distance(p, r) + metric.distance(r, q) + 1e-9:
            failures.append(f"triangle fails for {p},{r},{q}")
    return failures


def check_finite_metric(metric):
    points = metric.points()
    matrix = [[metric.distance(p, q) for q in points] for p in points]
    return triangle_violations(matrix)
