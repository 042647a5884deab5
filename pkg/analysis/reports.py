"""
Ratio reports: one row per run, with the provenance of the offline value.
"""

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import pandas as pd

from offline.plans import BRUTE_FORCE, ORACLE_H, ORACLE_INFINITE, WITNESS, OfflinePlan

logger = logging.getLogger(__name__)

ENSEMBLE = 'ensemble'
OFFLINE_KINDS = (ORACLE_INFINITE, ORACLE_H, BRUTE_FORCE, WITNESS, ENSEMBLE)

COLUMNS = ['algorithm', 'params', 'instance', 'online', 'offline', 'offline_kind', 'ratio', 'stop_reason']


@dataclass(frozen=True)
class RatioReport:
    algorithm: str
    params: str
    instance: str
    online: float
    offline: float
    offline_kind: str
    ratio: float
    stop_reason: str

    def as_row(self):
        return asdict(self)


def ratio(online, offline):
    if offline > 0:
        return online / offline
    return math.inf if online > 0 else 1.0


def split_policy_name(description):
    """'sdc(const:2)' -> ('sdc', 'const:2')."""
    if description.endswith(')') and '(' in description:
        name, _, rest = description.partition('(')
        return name, rest[:-1]
    return description, ''


def offline_value(offline):
    """(value, kind) from a plan, a (value, kind) pair or a bare oracle value."""
    if isinstance(offline, OfflinePlan):
        return offline.total_cost, offline.kind
    if isinstance(offline, tuple):
        value, kind = offline
        if kind not in OFFLINE_KINDS:
            raise ValueError(f"unknown offline kind {kind!r}")
        return float(value), kind
    return float(offline), ORACLE_INFINITE


def report_for(trace, offline, instance=None):
    value, kind = offline_value(offline)
    algorithm, params = split_policy_name(trace.policy)
    return RatioReport(
        algorithm=algorithm,
        params=params,
        instance=instance or trace.source,
        online=trace.total_cost,
        offline=value,
        offline_kind=kind,
        ratio=ratio(trace.total_cost, value),
        stop_reason=trace.stop_reason,
    )


def ratio_table(runs):
    """Reports for (trace, offline) pairs, in input order."""
    return [report_for(trace, offline) for trace, offline in runs]


def to_frame(reports):
    return pd.DataFrame([report.as_row() for report in reports], columns=COLUMNS)


def to_csv(reports, path=None):
    """CSV text of the reports; also written to `path` when given."""
    text = to_frame(reports).to_csv(index=False, float_format='%.12g', lineterminator='\n')
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
        logger.info("wrote %s report rows to %s", len(reports), path)
    return text


def to_json(reports, path=None):
    """JSON records with the CSV columns; infinite ratios become null."""
    text = to_frame(reports).to_json(orient="records", indent=2)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text
