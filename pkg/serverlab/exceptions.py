"""Exception hierarchy shared by every serverlab app."""


class ServerLabError(Exception):
    """Base class for all lab errors."""


class MetricError(ServerLabError, ValueError):
    """Invalid metric parameters or points outside a space."""


class PolicyError(ServerLabError):
    """An online policy produced moves that do not serve the request."""

    def __init__(self, message, prefix=None):
        super().__init__(message)
        # Steps recorded before the failure, for diagnostics
        self.prefix = prefix or []


class TraceIntegrityError(ServerLabError):
    """A trace's stored totals disagree with its events."""


class OracleLimitError(ServerLabError):
    """An exact solver refused an instance above its size guard."""


class ConstructionError(ServerLabError):
    """An adversary construction was violated or its guard failed."""


class DescriptorError(ServerLabError, ValueError):
    """A CLI descriptor could not be resolved."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
