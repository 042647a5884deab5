"""
Policy wrappers by descriptor: `ring:r=2`, `weak:h=2,eps=1,k=4`, `line_weak:h=1,eps=1`,
`lazy` or `local`.  Chains like `local+lazy` apply left to right.
"""

import logging

from engine.wrappers import lazify, localize
from policies.registry import policy_factory, split_descriptor
from serverlab.exceptions import DescriptorError

from .rings import ring_dispatch
from .weak import line_weak_from_infinite, weak_from_infinite

logger = logging.getLogger(__name__)


def _ring(params, make):
    return ring_dispatch(lambda ring: make(), float(params.pop('r', 2)))


def _weak(params, make):
    h = int(params.pop('h', 1))
    eps = float(params.pop('eps', 1))
    k = int(params.pop('k', 4))
    return weak_from_infinite(lambda w: make(), h, eps, k, float(params.pop('rho', 1)))


def _line_weak(params, make):
    h = int(params.pop('h', 1))
    eps = float(params.pop('eps', 1))
    return line_weak_from_infinite(lambda w: make(), h, eps, float(params.pop('rho', 1)))


WRAPPERS = {
    'ring': (_ring, 'one policy instance per ring [r^n, r^(n+1)); param r'),
    'weak': (_weak, 'phase reduction to k servers against h; params h, eps, k, rho'),
    'line_weak': (_line_weak, 'weak reduction per half-line, 2*ceil((1+1/eps)*rho*h) servers; params h, eps, rho'),
    'lazy': (lambda params, make: lazify(make()), 'move at most one server, only for uncovered requests'),
    'local': (lambda params, make: localize(make()), 'never pass an own server on a shortest path (graphs)'),
}


def wrapper_factory(wrapper, make):
    """Validate one wrapper around the constructor `make`; returns a constructor of the wrapped policy."""
    name, params = split_descriptor(wrapper)
    if name not in WRAPPERS:
        raise DescriptorError('wrap', f"unknown wrapper {name!r}; choose from {', '.join(sorted(WRAPPERS))}")
    factory, _ = WRAPPERS[name]

    def build():
        remaining = dict(params)
        policy = factory(remaining, make)
        if remaining:
            raise DescriptorError('wrap', f"unused parameters for {name}: {', '.join(sorted(remaining))}")
        return policy

    try:
        build()
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DescriptorError):
            raise
        raise DescriptorError('wrap', f"{wrapper}: {exc}") from exc
    return build


def wrapped_factory(policy_descriptor, wraps=()):
    make = policy_factory(policy_descriptor)
    for wrapper in wraps:
        make = wrapper_factory(wrapper, make)
    return make


def split_wraps(text):
    return [part.strip() for part in (text or '').split('+') if part.strip()]


def wrap_policy(wrapper, policy_descriptor):
    """Build `policy_descriptor` wrapped by the chain `wrapper`."""
    return wrapped_factory(policy_descriptor, split_wraps(wrapper))()
