"""Adversary lookup by descriptor, e.g. `uncovered:gap=100,diameter=0.01,k=100` or `moo_rounds:D=4,k=50,n=50`."""

import logging

from policies.registry import split_descriptor
from serverlab.exceptions import ConstructionError, DescriptorError

from .balance import balance2_phases, balance_descent
from .layered import generation_rounds, moo_rounds
from .sdc import sdc_fast, sdc_slow
from .uncovered import uncovered_cluster, uncovered_line

logger = logging.getLogger(__name__)


def _uncovered(params, policy):
    gap = float(params.pop('gap', 100))
    diameter = float(params.pop('diameter', 0.01))
    k = int(params.pop('k', 10))
    points = params.pop('points', None)
    count = int(points) if points else None
    cap = params.pop('cap', None)
    cap = int(float(cap)) if cap else None
    space = params.pop('space', 'line')
    if space == 'line':
        return uncovered_line(gap, diameter, k, count, cap=cap)
    if space == 'cluster':
        return uncovered_cluster(gap, diameter, k, count, cap=cap)
    raise DescriptorError('adversary', f"uncovered space must be line or cluster, got {space!r}")


def _balance_descent(params, policy):
    return balance_descent(float(params.pop('eps', 1e-4)), int(params.pop('n', 200)))


def _balance2_phases(params, policy):
    return balance2_phases(float(params.pop('eps', 1e-3)), int(params.pop('phases', 50)))


def _sdc_slow(params, policy):
    return sdc_slow(int(params.pop('n', 60)))


def _sdc_fast(params, policy):
    if policy is None:
        raise DescriptorError('adversary', "sdc_fast needs the double coverage policy it plays against")
    return sdc_fast(
        policy,
        int(params.pop('n', 20)),
        float(params.pop('delta', 1e-3)),
        int(params.pop('reps', 249)),
    )


def _moo_rounds(params, policy):
    return moo_rounds(int(params.pop('D', 4)), int(params.pop('k', 50)), int(params.pop('n', 50)))


def _generation_rounds(params, policy):
    return generation_rounds(int(params.pop('D', 3)), int(params.pop('k', 15)), int(params.pop('n', 15)))


ADVERSARIES = {
    'uncovered': (_uncovered, 'request the first uncovered point; params gap, diameter, k, points, cap, space=line|cluster'),
    'balance_descent': (_balance_descent, 'requests 1, 1-eps, ..., 1-n*eps; params eps, n'),
    'balance2_phases': (_balance2_phases, 'alternating phases against Balance2; params eps, phases'),
    'sdc_slow': (_sdc_slow, 'fill n positions in [1, 2]; param n'),
    'sdc_fast': (_sdc_fast, 'repeatedly shift a group left; params n (even), delta, reps'),
    'moo_rounds': (_moo_rounds, 'block-graph rounds; params D, k, n'),
    'generation_rounds': (_generation_rounds, 'generation-graph rounds; params D, k, n'),
}


def build_adversary(descriptor, policy=None):
    """(metric, request source) for a descriptor; sdc_fast also needs the policy."""
    name, params = split_descriptor(descriptor)
    if name not in ADVERSARIES:
        raise DescriptorError('adversary', f"unknown adversary {name!r}; choose from {', '.join(sorted(ADVERSARIES))}")
    factory, _ = ADVERSARIES[name]
    try:
        metric, source = factory(params, policy)
    except (ValueError, TypeError, ConstructionError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError('adversary', f"{descriptor}: {exc}") from exc
    if params:
        raise DescriptorError('adversary', f"unused parameters for {name}: {', '.join(sorted(params))}")
    return metric, source
