"""Policy lookup by name and parameter string, e.g. `sdc:speeds=g:1.5` or `balance:w=2`."""

import logging

from serverlab.exceptions import DescriptorError

from .basic import balance_family, greedy_nearest, spawn_always
from .moo import moo
from .sdc import sdc
from .wfa import wfa

logger = logging.getLogger(__name__)


def _balance(params):
    return balance_family(float(params.pop('w', 1)))


def _balance2(params):
    return balance_family(2.0)


def _sdc(params):
    return sdc(params.pop('speeds', '1'))


def _moo(params):
    return moo(params.pop('tie_break', 'lowest-id'))


POLICIES = {
    'spawn_always': (lambda params: spawn_always(), 'spawn a fresh server to every uncovered request'),
    'greedy_nearest': (lambda params: greedy_nearest(), 'move the nearest server, reserve included'),
    'balance': (_balance, 'minimize D_x + w*d(x,r); param w (default 1)'),
    'balance2': (_balance2, 'balance with w=2'),
    'sdc': (_sdc, 'double coverage with speeds; param speeds (c, g:r or list)'),
    'moo': (_moo, 'move only outwards on layered graphs; param tie_break'),
    'wfa': (lambda params: wfa(), 'work function algorithm (support guard applies)'),
}

# Built-in policies that run on layered graphs
GRAPH_POLICIES = ('spawn_always', 'greedy_nearest', 'balance', 'balance2', 'moo')


def split_descriptor(descriptor):
    """'name:key=value,key=value' -> (name, {key: value}).  Values may contain ':'."""
    name, _, rest = descriptor.strip().partition(':')
    params = {}
    if rest:
        key = None
        for part in rest.split(','):
            if '=' in part:
                key, _, value = part.partition('=')
                params[key.strip()] = value.strip()
            elif key is not None:
                # Explicit speed lists contain commas
                params[key] = f"{params[key]},{part.strip()}"
            else:
                raise DescriptorError('policy', f"cannot parse parameter {part!r} in {descriptor!r}")
    return name.strip(), params


def build_policy(descriptor):
    name, params = split_descriptor(descriptor)
    if name not in POLICIES:
        raise DescriptorError('policy', f"unknown policy {name!r}; choose from {', '.join(sorted(POLICIES))}")
    factory, _ = POLICIES[name]
    try:
        policy = factory(params)
    except (ValueError, TypeError) as exc:
        raise DescriptorError('policy', f"{descriptor}: {exc}") from exc
    if params:
        raise DescriptorError('policy', f"unused parameters for {name}: {', '.join(sorted(params))}")
    return policy


def policy_factory(descriptor):
    """Validate once, then return a zero-argument constructor for fresh instances."""
    build_policy(descriptor)
    return lambda: build_policy(descriptor)
