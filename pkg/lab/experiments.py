"""
One experiment: a policy served against a request source on a metric, compared with an
offline value, written out as trace JSON and a ratio-table row.
"""

import logging
from dataclasses import dataclass, field

from adversaries.uncovered import UncoveredPoint, forked_offline_plan
from analysis.reports import ENSEMBLE, report_for
from engine.runner import Budget, run
from engine.serialization import dump_trace
from offline.oracles import opt_h, opt_infinite
from serverlab.exceptions import ConstructionError, OracleLimitError

logger = logging.getLogger(__name__)

OFFLINE_CHOICES = ('auto', 'oracle', 'h', 'witness', 'ensemble', 'none')


@dataclass
class ExperimentSpec:
    metric: object
    policy: object
    source: object
    budget: Budget = field(default_factory=Budget)
    offline: str = 'auto'
    h: int = None
    seed: int = 0
    trace_path: str = None
    label: str = None


@dataclass
class ExperimentResult:
    trace: object
    report: object
    offline: object

    @property
    def budget_stop(self):
        return self.trace.budget_stop


def _witness(source):
    plan = source.witness()
    if plan is None:
        raise ConstructionError(f"{source.describe()} builds no offline witness")
    return plan


def _ensemble(trace, source):
    if not isinstance(source, UncoveredPoint):
        raise ConstructionError("the forked ensemble only applies to the uncovered-point adversary")
    return forked_offline_plan(trace, source), ENSEMBLE


def offline_for(trace, source, mode='auto', h=None):
    """
    Offline value for a finished run: an exact oracle, the source's own witness, or the
    forked ensemble.  `auto` prefers the oracle and falls back to the witness, then the
    ensemble, when the sequence is too long.
    """
    metric, requests = trace.metric, trace.requests
    if mode == 'oracle':
        return opt_infinite(metric, requests)
    if mode == 'h':
        if h is None:
            raise ValueError("offline=h needs h")
        return opt_h(metric, requests, h)
    if mode == 'witness':
        return _witness(source)
    if mode == 'ensemble':
        return _ensemble(trace, source)
    if mode != 'auto':
        raise ValueError(f"unknown offline mode {mode!r}")
    try:
        return opt_infinite(metric, requests)
    except OracleLimitError as exc:
        logger.warning("%s; trying the source's witness", exc)
    plan = source.witness()
    if plan is not None:
        return plan
    if isinstance(source, UncoveredPoint) and trace.stop_reason == 'spawn-target':
        return _ensemble(trace, source)
    raise OracleLimitError(f"no offline value for {len(requests)} requests: oracle refused and no witness")


def execute(spec):
    trace = run(spec.policy, spec.metric, spec.source, budget=spec.budget)
    offline = None
    report = None
    if spec.offline != 'none':
        offline = offline_for(trace, spec.source, spec.offline, spec.h)
        report = report_for(trace, offline, instance=spec.label)
    if spec.trace_path:
        dump_trace(trace, spec.trace_path)
    return ExperimentResult(trace, report, offline)
