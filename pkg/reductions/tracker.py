"""
Equivalence classes of a policy family on a fixed sequence.

Runs ALG_{k(h)} for h = 1..H and, after every prefix, groups the values of h whose
move histories are identical so far.  The largest class (ties: the one holding the
smallest h) stands in for the infinite class of the limit algorithm.
"""

import logging
from dataclasses import dataclass

from engine.runner import run_sequence

logger = logging.getLogger(__name__)


def step_signature(step):
    return tuple((move.server, move.origin, move.target) for move in step.moves)


@dataclass(frozen=True)
class TrackerReport:
    # partitions[t] is the partition after the first t requests, as sorted tuples of h
    partitions: tuple
    traces: dict
    selected: tuple

    @property
    def selected_trace(self):
        return self.traces[self.selected[0]]

    @property
    def class_counts(self):
        return [len(partition) for partition in self.partitions]

    def as_dict(self):
        return {
            'class_counts': self.class_counts,
            'final_partition': [list(cls) for cls in self.partitions[-1]],
            'selected': list(self.selected),
            'selected_cost': self.selected_trace.total_cost,
        }


def refine(partition, key):
    """Split every class by `key(h)`; classes come back sorted by their smallest h."""
    refined = []
    for cls in partition:
        groups = {}
        for h in cls:
            groups.setdefault(key(h), []).append(h)
        refined.extend(tuple(group) for group in groups.values())
    return tuple(sorted(refined))


def equivalence_tracker(family, h_max, metric, sequence):
    """`family(h)` returns a fresh ALG_{k(h)}."""
    if h_max < 1:
        raise ValueError(f"h_max must be at least 1, got {h_max}")
    sequence = list(sequence)
    traces = {h: run_sequence(family(h), metric, sequence) for h in range(1, h_max + 1)}

    partition = (tuple(range(1, h_max + 1)),)
    partitions = [partition]
    for t in range(len(sequence)):
        partition = refine(partition, lambda h: step_signature(traces[h].steps[t]))
        partitions.append(partition)

    selected = min(partition, key=lambda cls: (-len(cls), cls[0]))
    logger.info(
        "tracker: %s classes after %s requests, selected %s", len(partition), len(sequence), selected,
    )
    return TrackerReport(tuple(partitions), traces, selected)
