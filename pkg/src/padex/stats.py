"""Nonparametric statistics for the diagnosis step.

The Mann-Whitney U statistic counts wins of the first sample:

    U = #{(i,j): x_i > y_j} + 0.5 * #{(i,j): x_i = y_j}

computed through midranks, with a two-sided p-value from the normal
approximation using the tie-corrected variance

    sigma^2 = (n1*n2/12) * ((n+1) - sum(t^3 - t) / (n*(n-1)))

and a 0.5 continuity correction toward the mean. A fully tied pooled sample
has sigma = 0 and is reported as z = 0, p = 1. The approximation is intended
for the diagnosis group sizes (~100 per side); exact small-sample tables are
out of scope and covered only by test oracles.

Also here: empirical label distributions and the total variation distance
between them, quantifying predicted-strategy shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class UTestResult:
    u: float
    z: float
    p_two_sided: float
    n1: int
    n2: int
    tie_corrected: bool


def mann_whitney_u(xs, ys) -> UTestResult:
    """Two-sided Mann-Whitney U test; U counts wins of xs over ys."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or ys.ndim != 1:
        raise ConfigError("samples must be 1-d")
    n1, n2 = xs.shape[0], ys.shape[0]
    if n1 == 0 or n2 == 0:
        raise ConfigError("both samples must be non-empty")
    n = n1 + n2
    pooled = np.concatenate([xs, ys])
    order = np.argsort(pooled, kind="mergesort")
    svals = pooled[order]
    ranks = np.empty(n)
    tie_sum = 0.0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and svals[j + 1] == svals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # midrank, 1-based
        t = j - i + 1
        if t > 1:
            tie_sum += t ** 3 - t
        i = j + 1
    r1 = float(ranks[:n1].sum())
    u = r1 - n1 * (n1 + 1) / 2.0

    mean = n1 * n2 / 2.0
    var = (n1 * n2 / 12.0) * ((n + 1) - tie_sum / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return UTestResult(u, 0.0, 1.0, n1, n2, tie_sum > 0)
    diff = u - mean
    if diff > 0.5:
        z = (diff - 0.5) / math.sqrt(var)
    elif diff < -0.5:
        z = (diff + 0.5) / math.sqrt(var)
    else:
        z = 0.0
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return UTestResult(u, z, min(p, 1.0), n1, n2, tie_sum > 0)


def label_distribution(labels) -> dict:
    """Empirical frequencies keyed by label, ascending bitmask order."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ConfigError("label list must be non-empty")
    values, counts = np.unique(labels, return_counts=True)
    total = labels.size
    return {int(v): float(c) / total for v, c in zip(values, counts)}


def tv_distance(p: dict, q: dict) -> float:
    """Total variation distance, half the L1 gap over the union of labels."""
    for name, dist in (("p", p), ("q", q)):
        total = math.fsum(dist.values())
        if abs(total - 1.0) > 1e-9 or any(v < 0 for v in dist.values()):
            raise ConfigError(f"distribution {name} is not normalized (sum={total})")
    keys = sorted(set(p) | set(q))
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
