"""
Metric and request-source descriptors for the command line.

Metrics: `line[:source=0]`, `half-line`, `uniform:n=5`, `cluster:n=11,gap=100,diameter=0.01`,
`matrix:path=dist.txt`, `block:D=4,k=50`, `generation:D=3,k=15`.
Request sources: `file:path=seq.txt` (whitespace-separated points) or
`random:m=50[,lo=0.1,hi=100]` drawn with the experiment seed.
"""

import logging

import numpy as np

from engine.base import SequenceSource
from metrics.graphs import BlockGraph, GenerationGraph, make_generation_graph, make_layered_block_graph
from metrics.spaces import make_cluster, make_half_line, make_line, make_uniform
from metrics.utils import load_matrix
from policies.registry import split_descriptor
from serverlab.exceptions import DescriptorError, MetricError

logger = logging.getLogger(__name__)


def _line(params):
    return make_line(float(params.pop('source', 0)))


def _uniform(params):
    return make_uniform(n=int(params.pop('n', 2)))


def _cluster(params):
    return make_cluster(int(params.pop('n', 2)), float(params.pop('gap', 1)), float(params.pop('diameter', 1)))


def _matrix(params):
    if 'path' not in params:
        raise ValueError("matrix needs path=<file>")
    return load_matrix(params.pop('path'), source=int(params.pop('source', 0)))


METRICS = {
    'line': (_line, 'the real line; param source'),
    'half-line': (lambda params: make_half_line(), 'the half-line [0, inf) with source 0'),
    'uniform': (_uniform, 'n points at pairwise distance 1; param n'),
    'cluster': (_cluster, 'n points at distance gap from the source, pairwise diameter; params n, gap, diameter'),
    'matrix': (_matrix, 'finite metric from a distance-matrix file; params path, source'),
    'block': (lambda params: make_layered_block_graph(int(params.pop('D', 3)), int(params.pop('k', 2))),
              'layered block graph; params D, k'),
    'generation': (lambda params: make_generation_graph(int(params.pop('D', 3)), int(params.pop('k', 2))),
                   'layered generation graph; params D, k'),
}


def build_metric(descriptor):
    name, params = split_descriptor(descriptor)
    if name not in METRICS:
        raise DescriptorError('metric', f"unknown metric {name!r}; choose from {', '.join(sorted(METRICS))}")
    factory, _ = METRICS[name]
    try:
        metric = factory(params)
    except (ValueError, TypeError, OSError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError('metric', f"{descriptor}: {exc}") from exc
    if params:
        raise DescriptorError('metric', f"unused parameters for {name}: {', '.join(sorted(params))}")
    return metric


def request_pool(metric):
    """Finite set of points random sequences draw from, or None for coordinate spaces."""
    if isinstance(metric, BlockGraph):
        k = metric.k
        return metric.chain[1:] + [metric.a(m) for m in range(3 * k)] + [metric.b(j) for j in range(2 * k)]
    if isinstance(metric, GenerationGraph):
        fam = metric.family(metric.S0)
        return list(metric.S0) + list(fam.A) + list(fam.B)
    points = metric.points()
    if points is None:
        return None
    return [p for p in points if not metric.is_source(p)]


def random_sequence(metric, m, rng, lo=0.1, hi=100.0):
    pool = request_pool(metric)
    if pool is None:
        if not metric.continuous:
            raise DescriptorError('source', f"cannot draw random points from {metric.describe()}")
        low = max(lo, 0.0) if metric.kind == 'half-line' else lo
        return [round(float(x), 6) for x in rng.uniform(low, hi, size=m)]
    if not pool:
        raise DescriptorError('source', f"{metric.describe()} has no points to request")
    return [pool[i] for i in rng.integers(0, len(pool), size=m)]


def read_sequence(path, metric):
    with open(path) as handle:
        tokens = handle.read().split()
    try:
        return [metric.decode(token) for token in tokens]
    except (ValueError, MetricError) as exc:
        raise DescriptorError('source', f"{path}: {exc}") from exc


def build_source(descriptor, metric, seed=0):
    name, params = split_descriptor(descriptor)
    try:
        if name == 'file':
            if 'path' not in params:
                raise DescriptorError('source', "file source needs path=<file>")
            points = read_sequence(params.pop('path'), metric)
        elif name == 'random':
            rng = np.random.default_rng(seed)
            m = int(params.pop('m', 50))
            lo, hi = float(params.pop('lo', 0.1)), float(params.pop('hi', 100))
            points = random_sequence(metric, m, rng, lo, hi)
        else:
            raise DescriptorError('source', f"unknown request source {name!r}; use file or random")
    except OSError as exc:
        raise DescriptorError('source', str(exc)) from exc
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError('source', f"{descriptor}: {exc}") from exc
    if params:
        raise DescriptorError('source', f"unused parameters for {name}: {', '.join(sorted(params))}")
    logger.debug("request source %s: %s points", descriptor, len(points))
    return SequenceSource(points, name=name)
