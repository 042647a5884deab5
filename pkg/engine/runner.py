"""Drive an online policy against a request source and record the trace."""

import logging
from dataclasses import dataclass, field

from metrics.spaces import tolerance
from serverlab.conf import lab_setting
from serverlab.exceptions import MetricError, PolicyError, TraceIntegrityError

from .base import Request, SequenceSource
from .fleet import Fleet, FleetView

logger = logging.getLogger(__name__)

# Stop reasons that mean "ran out of budget" rather than "construction finished"
BUDGET_STOPS = frozenset({'max-requests', 'max-spawns', 'max-cost', 'cap', 'points-exhausted'})


@dataclass(frozen=True)
class Budget:
    max_requests: int = None
    max_spawns: int = None
    max_cost: float = None

    def __post_init__(self):
        if self.max_requests is None:
            object.__setattr__(self, 'max_requests', lab_setting('SERVERLAB_MAX_REQUESTS', 1_000_000))
        for name in ('max_requests', 'max_spawns', 'max_cost'):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    def tripped(self, served, fleet):
        """Name of the first exhausted limit, or None."""
        if served >= self.max_requests:
            return 'max-requests'
        if self.max_spawns is not None and fleet.spawn_count >= self.max_spawns:
            return 'max-spawns'
        if self.max_cost is not None and fleet.total_cost >= self.max_cost:
            return 'max-cost'
        return None


@dataclass(frozen=True)
class Step:
    t: int
    point: object
    moves: tuple
    cum_cost: float

    @property
    def cost(self):
        return sum(move.cost for move in self.moves)


@dataclass(frozen=True)
class Trace:
    metric: object
    policy: str
    source: str
    requests: tuple
    steps: tuple
    total_cost: float
    spawn_marks: tuple
    final_positions: dict = field(hash=False)
    cumulative: dict = field(hash=False)
    stop_reason: str = 'exhausted'
    recorded: bool = True

    @property
    def request_count(self):
        return len(self.requests)

    @property
    def spawn_count(self):
        return len(self.spawn_marks)

    @property
    def f_values(self):
        """f_1, f_2, ...: local cost accrued before each spawn."""
        return [f for _, f in self.spawn_marks]

    @property
    def budget_stop(self):
        return self.stop_reason in BUDGET_STOPS

    def configuration(self):
        return sorted(
            (p for p in self.final_positions.values() if not self.metric.is_source(p)),
            key=self.metric.encode,
        )

    def events(self):
        for step in self.steps:
            yield from step.moves


def run(policy, metric, source, budget=None, record=True):
    """
    Serve requests from `source` with `policy` until the source stops or a budget trips.

    With `record=False` only totals, spawn marks and final state are kept.
    """
    budget = budget or Budget()
    fleet = Fleet(metric)
    view = FleetView(fleet)
    steps = []
    requests = []
    stop_reason = None
    t = 0
    while True:
        point = source.next_request(view)
        if point is None:
            stop_reason = source.stop_reason or 'exhausted'
            break
        stop_reason = budget.tripped(t, fleet)
        if stop_reason:
            break
        if not metric.contains(point):
            raise MetricError(f"request {point!r} is not a point of {metric.describe()}")
        t += 1
        fleet.begin_step(t)
        try:
            policy.serve(Request(t, point), fleet)
        except PolicyError as exc:
            exc.prefix = list(steps)
            raise
        if not fleet.covers(point):
            raise PolicyError(
                f"{policy.describe()} left request {t} at {point!r} uncovered", prefix=list(steps)
            )
        requests.append(point)
        if record:
            steps.append(Step(t, point, tuple(fleet.last_events), fleet.total_cost))

    logger.info(
        "%s vs %s: %s requests, %s spawns, cost %.6g (%s)",
        policy.describe(), source.describe(), t, fleet.spawn_count, fleet.total_cost, stop_reason,
    )
    return Trace(
        metric=metric,
        policy=policy.describe(),
        source=source.describe(),
        requests=tuple(requests),
        steps=tuple(steps),
        total_cost=fleet.total_cost,
        spawn_marks=tuple(fleet.spawn_marks),
        final_positions=dict(fleet.servers()),
        cumulative={sid: fleet.cumulative(sid) for sid in fleet.server_ids()},
        stop_reason=stop_reason,
        recorded=record,
    )


def run_sequence(policy, metric, points, budget=None, record=True):
    return run(policy, metric, SequenceSource(points), budget=budget, record=record)


def replay_cost(trace):
    """Recompute the total from the recorded events; raise on any disagreement."""
    if not trace.recorded:
        raise TraceIntegrityError("summary trace has no events to replay")
    tol = tolerance()
    total = 0.0
    for step in trace.steps:
        for move in step.moves:
            expected = trace.metric.distance(move.origin, move.target)
            if abs(expected - move.cost) > tol * max(1.0, expected):
                raise TraceIntegrityError(
                    f"step {step.t}: server {move.server} cost {move.cost} != distance {expected}"
                )
            total += move.cost
        if abs(total - step.cum_cost) > tol * max(1.0, total):
            raise TraceIntegrityError(f"step {step.t}: cumulative cost {step.cum_cost} != {total}")
    if abs(total - trace.total_cost) > tol * max(1.0, total):
        raise TraceIntegrityError(f"total cost {trace.total_cost} != replayed {total}")
    return total
