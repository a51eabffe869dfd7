"""Accuracy measures between two centrality results."""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np

from .result import CentralityResult

CSV_FIELDS = ("n", "mean_relative_error", "kendall_tau")


def _aligned(truth, approx):
    """Score arrays in a common node order; raises when the node sets differ."""
    if isinstance(truth, CentralityResult) and isinstance(approx, CentralityResult):
        if len(truth.labels) != len(approx.labels) or set(truth.labels.tolist()) != set(approx.labels.tolist()):
            raise ValueError("results cover different node sets")
        a = truth.scores[np.argsort(truth.labels, kind="stable")]
        b = approx.scores[np.argsort(approx.labels, kind="stable")]
        return a, b
    a = np.asarray(getattr(truth, "scores", truth), dtype=float)
    b = np.asarray(getattr(approx, "scores", approx), dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"score vectors differ in shape: {a.shape} vs {b.shape}")
    return a, b


def mean_relative_error(truth, approx) -> float:
    """``mean_u |H_u - H~_u| / H_u``."""
    a, b = _aligned(truth, approx)
    if len(a) == 0:
        raise ValueError("no nodes to compare")
    return float(np.mean(np.abs(a - b) / a))


@nb.njit(cache=True)
def _count_swaps(y):
    # bottom-up merge sort of y, counting pairs that are strictly out of order
    n = len(y)
    src = y.copy()
    dst = np.empty_like(src)
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        width *= 2
    return swaps


@nb.njit(cache=True)
def _tied_pairs(sorted_vals):
    total = 0
    run = 1
    for i in range(1, len(sorted_vals)):
        if sorted_vals[i] == sorted_vals[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


@nb.njit(cache=True)
def _joint_ties(x, y):
    # x, y already sorted lexicographically by (x, y)
    total = 0
    run = 1
    for i in range(1, len(x)):
        if x[i] == x[i - 1] and y[i] == y[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


def _concordance(a, b):
    """``(concordant - discordant, pairs)`` in O(n log n)."""
    n = len(a)
    order = np.lexsort((b, a))
    x, y = a[order], b[order]
    pairs = n * (n - 1) // 2
    tie_x = _tied_pairs(x)
    tie_y = _tied_pairs(np.sort(y))
    tie_xy = _joint_ties(x, y)
    swaps = _count_swaps(y)
    # pairs untied in both coordinates split into concordant and discordant
    untied = pairs - tie_x - tie_y + tie_xy
    return untied - 2 * swaps, pairs


def kendall_tau(truth, approx) -> float:
    """``2 (alpha - beta) / (n (n - 1))`` over all unordered node pairs.

    A pair tied in either ranking counts as neither concordant nor
    discordant; the denominator always counts every pair.
    """
    a, b = _aligned(truth, approx)
    if len(a) < 2:
        raise ValueError("kendall tau needs at least two nodes")
    diff, pairs = _concordance(a, b)
    return float(diff / pairs)


def kendall_tau_bruteforce(truth, approx) -> float:
    """O(n^2) pair enumeration of the same quantity, for checking."""
    a, b = _aligned(truth, approx)
    n = len(a)
    if n < 2:
        raise ValueError("kendall tau needs at least two nodes")
    sa = np.sign(a[:, None] - a[None, :])
    sb = np.sign(b[:, None] - b[None, :])
    upper = np.triu_indices(n, 1)
    return float((sa * sb)[upper].sum() / (n * (n - 1) / 2))


@dataclass
class RankingComparison:
    n: int
    mean_relative_error: float
    kendall_tau: float

    def as_dict(self):
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def csv_row(self) -> str:
        return ",".join(repr(getattr(self, f)) for f in CSV_FIELDS)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_FIELDS) + "\n")
        buf.write(self.csv_row() + "\n")
        return buf.getvalue()


def compare(truth, approx) -> RankingComparison:
    a, b = _aligned(truth, approx)
    return RankingComparison(len(a), mean_relative_error(a, b), kendall_tau(a, b))
