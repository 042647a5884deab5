"""
Closed-form quantities used to check runs against the known bounds.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from serverlab.exceptions import ConstructionError, MetricError

logger = logging.getLogger(__name__)


def lambda_iterates(tolerance=1e-12, start=4.0, max_iterations=500):
    """
    Iterates of x <- 2 + ln x from `start`, ending with the first step shorter than
    `tolerance`.  From above the largest root they decrease to it.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    iterates = [float(start)]
    for _ in range(max_iterations):
        iterates.append(2.0 + float(np.log(iterates[-1])))
        if abs(iterates[-2] - iterates[-1]) <= tolerance:
            logger.debug("lambda: %s iterations to %.15g", len(iterates) - 1, iterates[-1])
            return np.array(iterates)
    raise ValueError(f"x = 2 + ln x did not settle within {max_iterations} iterations at tolerance {tolerance}")


def solve_lambda(tolerance=1e-12):
    """Largest root of x = 2 + ln x; the other root lies below 1."""
    return float(lambda_iterates(tolerance)[-1])


def lambda_residual(value):
    return abs(value - 2.0 - math.log(value))


def z_vector(speeds, n):
    """z_1 = 1, z_i = z_{i-1}/s_i + 1 + 1/s_i."""
    if n < 1:
        raise ValueError(f"need at least one coefficient, got n={n}")
    z = [1.0]
    for i in range(2, n + 1):
        s = speeds.speed(i)
        z.append(z[-1] / s + 1.0 + 1.0 / s)
    return z


def sdc_cost_identity(trace, speeds):
    """(cost, sum z_i x_i, gap) for a finished double-coverage run on the half-line."""
    if not trace.policy.startswith('sdc'):
        raise ConstructionError(f"cost identity applies to double coverage runs, got {trace.policy}")
    xs = sorted(trace.final_positions.values(), reverse=True)
    if not xs:
        return trace.total_cost, 0.0, abs(trace.total_cost)
    z = z_vector(speeds, len(xs))
    rhs = math.fsum(zi * x for zi, x in zip(z, xs))
    return trace.total_cost, rhs, abs(trace.total_cost - rhs)


def sdc_cascade(speeds, k, n, v):
    """
    Displacements while the group x_k..x_{k+n-1} shifts left by v and pulls x_{k+n}.

    Returns (left, right) where left[i-k] and right[i-k] are the distances x_i travels
    left and right, i = k..k+n.
    """
    if k < 1 or n < 1:
        raise ValueError("cascade needs k >= 1 and n >= 1")
    left = [0.0] * (n + 1)
    right = [0.0] * (n + 1)
    left[0] = v
    for offset in range(1, n + 1):
        right[offset] = speeds.speed(k + offset) * left[offset - 1]
        if offset < n:
            left[offset] = v + right[offset]
    return left, right


def cascade_denominator(speeds, m, n):
    """1 + sum_{i=m-n+1}^{m} prod_{j=i}^{m} s_j."""
    total, product = 1.0, 1.0
    for j in range(m, m - n, -1):
        product *= speeds.speed(j)
        total += product
    return total


@dataclass(frozen=True)
class LayerCensus:
    """counts[j-1] is the number of online servers in layer j, j = 1..D."""

    counts: tuple

    @property
    def depth(self):
        return len(self.counts)

    @property
    def total(self):
        return sum(self.counts)

    def n(self, j):
        return self.counts[j - 1] if 1 <= j <= self.depth else 0

    @classmethod
    def from_positions(cls, positions, graph):
        counts = [0] * graph.depth
        for p in positions:
            layer = graph.layer_of(p)
            if layer > 0:
                counts[layer - 1] += 1
        return cls(tuple(counts))

    @classmethod
    def from_trace(cls, trace):
        return cls.from_positions(trace.final_positions.values(), trace.metric)


@dataclass(frozen=True)
class MooBoundReport:
    census: LayerCensus
    cost: float
    census_cost: int
    opt: float
    opt_lower_bound: int
    ratio: float
    bound: float

    @property
    def cost_matches(self):
        return abs(self.cost - self.census_cost) <= 1e-9 * max(1.0, self.cost)

    @property
    def lower_bound_holds(self):
        return self.opt + 1e-9 >= self.opt_lower_bound

    @property
    def within_bound(self):
        return self.ratio <= self.bound + 1e-9


def moo_bounds(census, opt, cost=None):
    """
    Compare a finished move-only-outwards run with its layer census.

    The online cost is sum_j j*n_j; every offline solution pays at least
    sum_{j<=D-2} n_j + 2 n_D + (n_{D-1} - n_D)^+.
    """
    D = census.depth
    census_cost = sum(j * census.n(j) for j in range(1, D + 1))
    cost = census_cost if cost is None else cost
    lower = sum(census.n(j) for j in range(1, D - 1)) + 2 * census.n(D) + max(census.n(D - 1) - census.n(D), 0)
    ratio = cost / opt if opt > 0 else (math.inf if cost > 0 else 1.0)
    report = MooBoundReport(census, cost, census_cost, opt, lower, ratio, D - 0.5)
    if not report.lower_bound_holds:
        logger.error("offline optimum %s below the layer bound %s for census %s", opt, lower, census.counts)
    if not report.cost_matches:
        logger.error("online cost %s differs from the census cost %s", cost, census_cost)
    return report


def layer_potential(configuration, graph):
    """Number of servers in layer D-1."""
    top = graph.depth - 1
    return sum(1 for p in configuration if graph.layer_of(p) == top)


def moo_block_ratio(D, k, n):
    """Online over witness cost of the block-graph rounds: nk(2D-1) / (2nk + (D-2)k + n(D-1))."""
    if D < 2 or k < 1 or n < 1:
        raise MetricError("block rounds need D >= 2, k >= 1, n >= 1")
    return n * k * (2 * D - 1) / (2 * n * k + (D - 2) * k + n * (D - 1))


def moo_online_cost(D, k, n):
    return n * k * (2 * D - 1)


def moo_witness_cost(D, k, n):
    return 2 * n * k + (D - 2) * k + n * (D - 1)


def cluster_lower_bound(big_delta, local_rate, lam=None):
    """lambda (Delta + L) / (Delta + L + lambda), with L the local cost per spawn in units of delta."""
    lam = solve_lambda() if lam is None else lam
    return lam * (big_delta + local_rate) / (big_delta + local_rate + lam)


def ring_factor(r):
    """(4r - 1) / (r - 1): sum of ring optima against the global optimum."""
    if r <= 1:
        raise MetricError(f"ring ratio must exceed 1, got {r}")
    return (4 * r - 1) / (r - 1)


def ring_competitive_ratio(rho, r, uniform_source=False):
    """
    Ratio on the whole space from strict rho-competitiveness on every ring.  With
    `uniform_source` the rings are first pushed to source distance r^(n+1), costing
    another factor r.
    """
    ratio = ring_factor(r) * rho
    return ratio * r if uniform_source else ratio


def weak_fleet_size(h, eps, rho):
    """ceil((1 + 1/eps) rho h)."""
    if h < 1 or eps <= 0 or rho < 1:
        raise ValueError(f"need h >= 1, eps > 0, rho >= 1 (got {h}, {eps}, {rho})")
    return math.ceil((1 + 1 / eps) * rho * h - 1e-12)


def weak_ratio(eps, rho):
    """(3 + eps) rho."""
    return (3 + eps) * rho
