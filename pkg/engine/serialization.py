"""Trace JSON: one record per request, then one summary record."""

import json
import logging

from serverlab.exceptions import TraceIntegrityError

from .fleet import MoveEvent
from .runner import Step, Trace

logger = logging.getLogger(__name__)


def trace_records(trace):
    encode = trace.metric.encode
    records = []
    for step in trace.steps:
        records.append({
            't': step.t,
            'point': encode(step.point),
            'moves': [
                {
                    'server': move.server,
                    'from': encode(move.origin),
                    'to': encode(move.target),
                    'cost': move.cost,
                    'spawn': move.spawn,
                }
                for move in step.moves
            ],
            'cum_cost': step.cum_cost,
        })
    records.append({
        'summary': True,
        'metric': trace.metric.describe(),
        'policy': trace.policy,
        'source': trace.source,
        'requests': [encode(p) for p in trace.requests],
        'total_cost': trace.total_cost,
        'spawn_marks': [[j, f] for j, f in trace.spawn_marks],
        'f': trace.f_values,
        'final_positions': {str(sid): encode(p) for sid, p in sorted(trace.final_positions.items())},
        'cumulative': {str(sid): d for sid, d in sorted(trace.cumulative.items())},
        'stop_reason': trace.stop_reason,
        'recorded': trace.recorded,
    })
    return records


def dumps_trace(trace):
    return '\n'.join(json.dumps(record, sort_keys=True) for record in trace_records(trace)) + '\n'


def dump_trace(trace, path):
    with open(path, 'w') as handle:
        handle.write(dumps_trace(trace))
    logger.info("wrote trace (%s steps) to %s", len(trace.steps), path)


def loads_trace(text, metric):
    """Rebuild a Trace from JSON lines; points are decoded with `metric`."""
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not records or not records[-1].get('summary'):
        raise TraceIntegrityError("trace has no summary record")
    summary = records[-1]
    decode = metric.decode
    steps = tuple(
        Step(
            t=record['t'],
            point=decode(record['point']),
            moves=tuple(
                MoveEvent(m['server'], decode(m['from']), decode(m['to']), m['cost'], m['spawn'])
                for m in record['moves']
            ),
            cum_cost=record['cum_cost'],
        )
        for record in records[:-1]
    )
    return Trace(
        metric=metric,
        policy=summary['policy'],
        source=summary['source'],
        requests=tuple(decode(p) for p in summary['requests']),
        steps=steps,
        total_cost=summary['total_cost'],
        spawn_marks=tuple((j, f) for j, f in summary['spawn_marks']),
        final_positions={int(sid): decode(p) for sid, p in summary['final_positions'].items()},
        cumulative={int(sid): d for sid, d in summary['cumulative'].items()},
        stop_reason=summary['stop_reason'],
        recorded=summary['recorded'],
    )


def load_trace(path, metric):
    with open(path) as handle:
        return loads_trace(handle.read(), metric)
