"""Sliding-window empirical quantiles over the trailing observations.

The decision statistic of the rule-based controller: thresholds are
nearest-rank (lower) quantiles of the last ``window_len`` powers. Exact,
no interpolation; the returned value is always an observed power.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from collections import deque

import numpy as np

__all__ = ["SlidingQuantile", "nearest_rank", "sort_quantile"]


def nearest_rank(q: float, n: int) -> int:
    """0-based index of the nearest-rank (lower) q-quantile of n sorted items.

    Rank is ceil(q*n) clamped to [1, n], so q=0 picks the minimum and q=1
    the maximum. The small bias guards against ceil(0.2*5) -> 2 style
    float-noise bumps.
    """
    rank = int(math.ceil(q * n - 1e-12))
    if rank < 1:
        rank = 1
    elif rank > n:
        rank = n
    return rank - 1


def sort_quantile(values, q: float) -> float:
    """Full-sort nearest-rank quantile; the brute-force oracle."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("empty sample")
    return float(arr[nearest_rank(q, arr.size)])


class SlidingQuantile:
    """FIFO window with rank queries.

    Keeps the window both in arrival order (for eviction) and sorted (for
    rank queries). Pushes cost O(window) memmove via bisect, which is exact
    and fast for the few-hundred-element windows used here; the compiled
    simulation kernel carries its own identical-by-construction copy of
    this logic.
    """

    __slots__ = ("window_len", "_fifo", "_sorted")

    def __init__(self, window_len: int):
        if window_len < 1:
            raise ValueError(f"window_len must be >= 1, got {window_len}")
        self.window_len = int(window_len)
        self._fifo: deque[float] = deque()
        self._sorted: list[float] = []

    def __len__(self) -> int:
        return len(self._fifo)

    def push(self, value: float) -> "SlidingQuantile":
        """Insert a value, evicting the oldest once the window is full."""
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value pushed: {value}")
        if len(self._fifo) == self.window_len:
            oldest = self._fifo.popleft()
            del self._sorted[bisect_left(self._sorted, oldest)]
        self._fifo.append(value)
        insort(self._sorted, value)
        return self

    def quantile(self, q: float) -> float:
        """Nearest-rank quantile of the current buffer."""
        n = len(self._sorted)
        if n == 0:
            raise ValueError("quantile of an empty window")
        return self._sorted[nearest_rank(q, n)]

    def buffer(self) -> list[float]:
        """Window contents in arrival order."""
        return list(self._fifo)
