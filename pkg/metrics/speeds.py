"""Speed schedules s_2, s_3, ... for double coverage with per-server speeds."""

import logging
import re

from serverlab.exceptions import MetricError

logger = logging.getLogger(__name__)

NON_DECREASING = 'non-decreasing'
NON_INCREASING = 'non-increasing'


class SpeedSchedule:
    """
    Index i >= 2 maps to a speed >= 1.  Explicit lists repeat their last entry beyond their
    length.  `monotonic` records the direction the schedule is known to follow (or None).
    """

    def __init__(self, kind, values, description, monotonic=None):
        self.kind = kind
        self._values = tuple(float(v) for v in values)
        self.description = description
        self.monotonic = monotonic
        if not self._values:
            raise MetricError("speed schedule needs at least one value")
        if any(v < 1 for v in self._values):
            raise MetricError(f"every speed must be at least 1: {description}")
        if monotonic is not None:
            self.check_monotonic(len(self._values) + 1)

    @classmethod
    def constant(cls, c):
        return cls('constant', [c], f"const:{float(c):g}", monotonic=NON_DECREASING)

    @classmethod
    def geometric(cls, r):
        """s_i = r^(i-2); non-decreasing for r >= 1."""
        if r < 1:
            raise MetricError(f"geometric ratio must be at least 1, got {r}")
        return cls('geometric', [r], f"g:{float(r):g}", monotonic=NON_DECREASING)

    @classmethod
    def explicit(cls, values, monotonic=None):
        values = list(values)
        if monotonic is None:
            if all(a <= b for a, b in zip(values, values[1:])):
                monotonic = NON_DECREASING
            elif all(a >= b for a, b in zip(values, values[1:])):
                monotonic = NON_INCREASING
        text = ','.join(f"{float(v):g}" for v in values)
        return cls('explicit', values, f"list:{text}", monotonic=monotonic)

    @classmethod
    def parse(cls, expression):
        """Parse `2`, `const:2`, `g:1.5`, `1,2,3` or `list:1,2,3`."""
        text = str(expression).strip()
        try:
            if text.startswith('const:'):
                return cls.constant(float(text[6:]))
            if text.startswith('g:'):
                return cls.geometric(float(text[2:]))
            if text.startswith('list:'):
                text = text[5:]
            parts = [p for p in re.split(r'[,\s]+', text) if p]
            if len(parts) == 1:
                return cls.constant(float(parts[0]))
            return cls.explicit([float(p) for p in parts])
        except ValueError as exc:
            raise MetricError(f"cannot parse speed schedule {expression!r}: {exc}") from exc

    def speed(self, i):
        if i < 2:
            raise MetricError(f"speeds are indexed from 2, got {i}")
        if self.kind == 'geometric':
            return self._values[0] ** (i - 2)
        if self.kind == 'constant':
            return self._values[0]
        return self._values[min(i - 2, len(self._values) - 1)]

    def materialize(self, up_to):
        """[s_2, ..., s_up_to]."""
        return [self.speed(i) for i in range(2, up_to + 1)]

    def check_monotonic(self, up_to):
        values = self.materialize(max(up_to, 2))
        pairs = list(zip(values, values[1:]))
        if self.monotonic == NON_DECREASING and any(a > b for a, b in pairs):
            raise MetricError(f"{self.description} is not non-decreasing")
        if self.monotonic == NON_INCREASING and any(a < b for a, b in pairs):
            raise MetricError(f"{self.description} is not non-increasing")

    def __str__(self):
        return self.description

    def __repr__(self):
        return f"<SpeedSchedule {self.description}>"
