"""
From infinite-server policies to (h,k)-server policies.

`WeakFromInfinite` runs an infinite-server policy on the space whose source is pushed
w_i farther away and copies its moves onto at most k real servers.  When the simulated
policy is about to use a (k+1)-st server, every real server goes home, the phase closes
and the next shift w_{i+1} = eps * OPT_h(phase) / h is computed offline.
"""

import logging
from dataclasses import dataclass

from analysis.formulas import weak_fleet_size
from engine.base import OnlinePolicy, Request
from engine.fleet import Fleet, FleetSlice
from metrics.spaces import make_half_line, make_shifted, tolerance
from offline.oracles import opt_h, opt_infinite
from offline.plans import ORACLE_H, ORACLE_INFINITE
from serverlab.exceptions import OracleLimitError, PolicyError

logger = logging.getLogger(__name__)

# Lower bound used when both oracles refuse a phase: some server must reach every request
SOURCE_DISTANCE = 'source-distance'


def phase_optimum(metric, requests, h):
    """(value, kind) of OPT_h on a finished phase; lower bounds stand in for long phases."""
    try:
        return opt_h(metric, requests, h).total_cost, ORACLE_H
    except OracleLimitError:
        logger.warning("phase of %s requests is too long for opt_h; using opt_infinite", len(requests))
    try:
        return opt_infinite(metric, requests).total_cost, ORACLE_INFINITE
    except OracleLimitError:
        logger.warning("phase of %s requests is too long for opt_infinite; using source distance", len(requests))
    return max(metric.distance(metric.source, p) for p in requests), SOURCE_DISTANCE


@dataclass
class PhaseState:
    index: int
    w: float
    requests: list
    virtual: Fleet
    inner: OnlinePolicy
    simulated_cost: float = 0.0
    spawns: int = 0
    real_cost: float = 0.0
    return_cost: float = 0.0
    closed: bool = False
    opt: float = None
    opt_kind: str = None

    @property
    def bound(self):
        """2 * (simulated cost - spawned servers * w); a closed phase stays within it."""
        return 2 * (self.simulated_cost - self.spawns * self.w)

    @property
    def within_bound(self):
        slack = tolerance() * max(1.0, self.bound)
        return self.real_cost <= self.bound + slack

    @property
    def flagged(self):
        return self.opt_kind not in (None, ORACLE_H)

    def as_dict(self):
        return {
            'phase': self.index,
            'w': self.w,
            'requests': len(self.requests),
            'spawns': self.spawns,
            'simulated_cost': self.simulated_cost,
            'real_cost': self.real_cost,
            'return_cost': self.return_cost,
            'closed': self.closed,
            'opt': self.opt,
            'opt_kind': self.opt_kind,
        }


class WeakFromInfinite(OnlinePolicy):
    name = 'weak'

    def __init__(self, factory, h, eps, k, rho=1.0):
        if h < 1 or k < 1:
            raise ValueError(f"need h >= 1 and k >= 1, got h={h}, k={k}")
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.factory = factory
        self.h, self.eps, self.k, self.rho = int(h), float(eps), int(k), float(rho)
        super().__init__(f"h={self.h},eps={self.eps:g},k={self.k}")
        self.phases = []
        self.phase = None
        self.to_real = {}
        self._probe = None

    def describe(self):
        inner = self._probe.describe() if self._probe else '?'
        return f"weak[{inner}]({self.params})"

    @property
    def fleet_bound_met(self):
        """Whether k reaches the fleet size the guarantee asks for."""
        return self.k >= weak_fleet_size(self.h, self.eps, self.rho)

    @property
    def flagged(self):
        return any(phase.flagged for phase in self.phases)

    def _open(self, metric, w):
        inner = self.factory(w)
        self._probe = inner
        self.phase = PhaseState(len(self.phases), w, [], Fleet(make_shifted(metric, w)), inner)
        self.phases.append(self.phase)
        self.to_real = {}
        logger.debug("phase %s opened with w=%.6g", self.phase.index, w)

    def _close(self, fleet):
        phase = self.phase
        metric = fleet.metric
        for sid, p in fleet.servers():
            if not metric.is_source(p):
                cost = metric.distance(p, metric.source)
                fleet.move(sid, metric.source)
                phase.return_cost += cost
                phase.real_cost += cost
        phase.opt, phase.opt_kind = phase_optimum(metric, phase.requests, self.h)
        phase.closed = True
        if not phase.within_bound:
            logger.error(
                "phase %s: real cost %.6g exceeds 2(sim - k w) = %.6g", phase.index, phase.real_cost, phase.bound,
            )
        logger.info(
            "phase %s closed after %s requests: simulated %.6g, real %.6g, OPT_h %.6g (%s)",
            phase.index, len(phase.requests), phase.simulated_cost, phase.real_cost, phase.opt, phase.opt_kind,
        )
        self._open(metric, self.eps * phase.opt / self.h)

    def _simulate(self, request):
        virtual = self.phase.virtual
        virtual.begin_step(request.t)
        self.phase.inner.serve(request, virtual)
        return virtual.server_count <= self.k

    def _mirror(self, fleet):
        """Copy the simulated step's moves onto the real servers."""
        metric = fleet.metric
        for event in self.phase.virtual.last_events:
            real = self.to_real.get(event.server)
            if real is None:
                idle = [sid for sid, p in fleet.servers() if metric.is_source(p) and sid not in self.to_real.values()]
                self.phase.real_cost += metric.distance(metric.source, event.target)
                if idle:
                    real = idle[0]
                    fleet.move(real, event.target)
                else:
                    real = fleet.spawn(event.target)
                self.to_real[event.server] = real
            else:
                self.phase.real_cost += metric.distance(fleet.position(real), event.target)
                fleet.move(real, event.target)

    def serve(self, request, fleet):
        if self.phase is None:
            self._open(fleet.metric, 0.0)
        if not self._simulate(request):
            self._close(fleet)
            if not self._simulate(request):
                raise PolicyError(f"{self.describe()} needs more than {self.k} servers for one request")
        self.phase.requests.append(request.point)
        self.phase.simulated_cost = self.phase.virtual.total_cost
        self.phase.spawns = self.phase.virtual.server_count
        self._mirror(fleet)

    def report(self):
        return {
            'h': self.h,
            'eps': self.eps,
            'k': self.k,
            'rho': self.rho,
            'fleet_bound_met': self.fleet_bound_met,
            'flagged': self.flagged,
            'phases': [phase.as_dict() for phase in self.phases],
        }


def weak_from_infinite(factory, h, eps, k, rho=1.0):
    """`factory(w)` builds a fresh infinite-server policy for the space shifted by w."""
    return WeakFromInfinite(factory, h, eps, k, rho)


def _negate(p):
    return -p


class LineWeakFromInfinite(OnlinePolicy):
    """One weak reduction per closed half-line, each with half of the fleet."""

    name = 'line_weak'

    def __init__(self, factory, h, eps, rho=1.0):
        half = weak_fleet_size(h, eps, rho)
        super().__init__(f"h={h},eps={eps:g},k={2 * half}")
        self.k = 2 * half
        self.right = WeakFromInfinite(factory, h, eps, half, rho)
        self.left = WeakFromInfinite(factory, h, eps, half, rho)
        self._slices = None

    def describe(self):
        return f"line_weak[{self.right.describe()}]"

    def serve(self, request, fleet):
        if self._slices is None:
            half_line = make_half_line()
            self._slices = (FleetSlice(fleet, half_line), FleetSlice(fleet, half_line, _negate))
        right, left = self._slices
        point = request.point
        if point > 0:
            self.right.serve(request, right)
        elif point < 0:
            self.left.serve(Request(request.t, -point), left)

    def report(self):
        return {'k': self.k, 'right': self.right.report(), 'left': self.left.report()}


def line_weak_from_infinite(factory, h, eps, rho=1.0):
    return LineWeakFromInfinite(factory, h, eps, rho)
