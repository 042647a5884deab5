import logging

logger = logging.getLogger(__name__)


def ensemble_bound(f, h, k, big_delta, delta=1.0):
    """
    Averaged cost of the forked offline ensemble against an uncovered-point run.

    `f[j-1]` is the online local cost accrued before the j-th spawn (j = 1..k).  With all
    lengths in units of delta the bound is
        h(Delta + 1) + (k - h) + sum_{j=h}^{k-1} (j-h+1)/j * (f_{j+1} - f_j),
    and the result is returned in the original units.
    """
    if not 1 <= h <= k:
        raise ValueError(f"need 1 <= h <= k, got h={h}, k={k}")
    if delta <= 0 or big_delta <= 0:
        raise ValueError("distances must be positive")
    f = [float(x) for x in f]
    if len(f) < k:
        raise ValueError(f"need f_1..f_{k}, got {len(f)} values")
    if any(a > b for a, b in zip(f[:k], f[1:k])):
        raise ValueError("f must be non-decreasing")
    local = sum((j - h + 1) / j * (f[j] - f[j - 1]) for j in range(h, k))
    return h * (big_delta + delta) + (k - h) * delta + local
