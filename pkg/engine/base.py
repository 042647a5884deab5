"""Interfaces shared by policies and request sources."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Request:
    t: int
    point: object


class OnlinePolicy:
    """
    A stateful online algorithm.

    `serve` receives the request and a fleet (or fleet slice) and performs its moves on it;
    after it returns the requested point must be covered.  Instances are single-run.
    """

    name = 'policy'

    def __init__(self, params=''):
        self.params = params

    def serve(self, request, fleet):
        raise NotImplementedError

    def describe(self):
        return f"{self.name}({self.params})" if self.params else self.name

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.describe()}>"


class RequestSource:
    """
    Produces the next request after observing a read-only view of the online fleet.

    `next_request` returns None to stop; `stop_reason` then says why.  Sources that build
    an offline strategy alongside their requests return it from `witness`.
    """

    name = 'source'
    stop_reason = None

    def next_request(self, view):
        raise NotImplementedError

    def witness(self):
        return None

    def describe(self):
        return self.name


class SequenceSource(RequestSource):
    """A fixed, non-adaptive request sequence."""

    name = 'sequence'

    def __init__(self, points, name=None):
        self.points = list(points)
        self._cursor = 0
        if name:
            self.name = name

    def next_request(self, view):
        if self._cursor >= len(self.points):
            self.stop_reason = 'exhausted'
            return None
        point = self.points[self._cursor]
        self._cursor += 1
        return point

    def describe(self):
        return f"{self.name}:m={len(self.points)}"
