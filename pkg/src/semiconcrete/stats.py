"""Mann-Whitney U test and Vargha-Delaney A12 effect size."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

EXACT_LIMIT = 400  # exact null distribution when len(x) * len(y) <= EXACT_LIMIT

# |A12 - 0.5| upper bounds for negligible / small / medium
_BANDS = ((0.06, "negligible"), (0.14, "small"), (0.21, "medium"))


@dataclass(frozen=True)
class ComparisonResult:
    u_statistic: float
    p_value: float
    a12: float
    magnitude: str
    method: str


def _ranks(values: np.ndarray) -> np.ndarray:
    """Mid-ranks (1-based) with ties averaged."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_distribution(doubled_ranks: np.ndarray, n1: int) -> np.ndarray:
    """Number of size-*n1* subsets per doubled rank sum (index = sum)."""
    total = int(doubled_ranks.sum())
    ways = np.zeros((n1 + 1, total + 1), dtype=np.float64)
    ways[0, 0] = 1.0
    for r in doubled_ranks.astype(np.int64):
        # descending k so each item is used at most once
        for k in range(min(n1, len(doubled_ranks)), 0, -1):
            ways[k, r:] += ways[k - 1, : total + 1 - r]
    return ways[n1]


def _check(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(y) == 0:
        raise ValidationError("both samples need at least one observation")
    return x, y


def mann_whitney_u(x: Sequence[float], y: Sequence[float], method: str = "auto") -> tuple[float, float, str]:
    """Two-sided Mann-Whitney U test; returns ``(U_x, p, method)``.

    ``U_x`` counts pairs with ``x_i > y_j`` plus half the ties. The exact
    method enumerates the tie-aware permutation distribution of the rank sum;
    the normal approximation uses tie and continuity corrections.
    """
    x, y = _check(x, y)
    n1, n2 = len(x), len(y)
    ranks = _ranks(np.concatenate([x, y]))
    r1 = ranks[:n1].sum()
    u = r1 - n1 * (n1 + 1) / 2
    mu = n1 * n2 / 2
    if method == "auto":
        method = "exact" if n1 * n2 <= EXACT_LIMIT else "normal_approx"
    if method == "exact":
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _exact_distribution(doubled, n1)
        sums = np.arange(len(counts))
        # U = R1 - n1(n1+1)/2, with R1 = doubled sum / 2
        u_all = sums / 2 - n1 * (n1 + 1) / 2
        dev = abs(u - mu)
        mask = np.abs(u_all - mu) >= dev - 1e-9
        p = counts[mask].sum() / counts.sum()
    elif method == "normal_approx":
        n = n1 + n2
        _, tie_counts = np.unique(ranks, return_counts=True)
        tie_term = float(((tie_counts**3) - tie_counts).sum())
        var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
        if var <= 0:
            p = 1.0
        else:
            z = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(var)
            p = math.erfc(z / math.sqrt(2))
    else:
        raise ValidationError(f"unknown method {method!r}")
    return float(u), float(min(max(p, 0.0), 1.0)), method


def magnitude(a12: float) -> str:
    d = abs(a12 - 0.5)
    for bound, label in _BANDS:
        if d < bound - 1e-12 or (label != "negligible" and d <= bound + 1e-12):
            return label
    return "large"


def vargha_delaney_a12(x: Sequence[float], y: Sequence[float]) -> tuple[float, str]:
    """Probability that a draw from *x* exceeds one from *y*, ties counted half."""
    x, y = _check(x, y)
    diff = x[:, None] - y[None, :]
    a = (np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)) / (len(x) * len(y))
    return float(a), magnitude(a)


def compare(x: Sequence[float], y: Sequence[float]) -> ComparisonResult:
    u, p, method = mann_whitney_u(x, y)
    a, mag = vargha_delaney_a12(x, y)
    return ComparisonResult(u, p, a, mag, method)
