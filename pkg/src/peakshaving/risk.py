"""Daily peak losses and CVaR / monthly-stratified CVaR tail objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["LossArchive", "daily_peaks", "cvar", "scvar", "risk_envelope_weights"]


@dataclass(frozen=True)
class LossArchive:
    """Per-day peak losses with their month labels."""

    losses: np.ndarray        # (D,) kW
    month_of_day: np.ndarray  # (D,) month ordinal per day
    day_of: np.ndarray        # (D,) day ordinal per day

    def __post_init__(self):
        losses = np.ascontiguousarray(self.losses, dtype=np.float64)
        months = np.ascontiguousarray(self.month_of_day, dtype=np.int64)
        days = np.ascontiguousarray(self.day_of, dtype=np.int64)
        if losses.size == 0 or losses.size != months.size or losses.size != days.size:
            raise DataError("losses, months and days must be non-empty and aligned")
        for a in (losses, months, days):
            a.setflags(write=False)
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "month_of_day", months)
        object.__setattr__(self, "day_of", days)

    def __len__(self) -> int:
        return self.losses.size

    @property
    def n_months(self) -> int:
        return int(np.unique(self.month_of_day).size)


def daily_peaks(grid: np.ndarray, day_labels: np.ndarray,
                month_labels: np.ndarray) -> LossArchive:
    """One loss per calendar day: the maximum post-battery power of that day."""
    grid = np.asarray(grid, dtype=np.float64)
    day_labels = np.asarray(day_labels, dtype=np.int64)
    month_labels = np.asarray(month_labels, dtype=np.int64)
    if grid.size == 0 or grid.size != day_labels.size or grid.size != month_labels.size:
        raise DataError("grid trace and day/month labels must be non-empty and aligned")
    days, first = np.unique(day_labels, return_index=True)
    losses = np.array([grid[day_labels == d].max() for d in days])
    return LossArchive(losses=losses, month_of_day=month_labels[first], day_of=days)


def _top_k(values: np.ndarray, k: int) -> np.ndarray:
    return np.sort(values)[::-1][:k]


def cvar(losses, alpha: float) -> float:
    """Mean of the k = ceil((1-alpha)*D) largest losses.

    The ceiling keeps k >= 1 for every alpha < 1; alpha = 0 recovers the
    plain mean.
    """
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise DataError("CVaR of an empty archive")
    if not 0.0 <= alpha < 1.0:
        raise DataError(f"alpha must lie in [0, 1), got {alpha}")
    k = math.ceil((1.0 - alpha) * losses.size - 1e-12)
    return float(_top_k(losses, k).mean())


def scvar(archive: LossArchive, alpha: float) -> float:
    """Monthly stratified CVaR: mean over months of each month's top-k_m mean.

    k_m = floor((1-alpha) * D / M); raises if the archive is too small for
    the requested level.
    """
    if not 0.0 <= alpha < 1.0:
        raise DataError(f"alpha must lie in [0, 1), got {alpha}")
    d = len(archive)
    months = np.unique(archive.month_of_day)
    m = months.size
    k_m = math.floor((1.0 - alpha) * d / m + 1e-12)
    if k_m < 1:
        need = math.ceil(m / (1.0 - alpha))
        raise DataError(
            f"stratified CVaR needs at least {need} days for alpha={alpha} "
            f"with {m} months; archive has {d}"
        )
    acc = 0.0
    for mo in months:
        sub = archive.losses[archive.month_of_day == mo]
        acc += _top_k(sub, min(k_m, sub.size)).mean()
    return float(acc / m)


def risk_envelope_weights(losses, alpha: float) -> np.ndarray:
    """Maximizing reweighting of the capped-weight dual form.

    Weight 1/k on each of the k largest losses (ties broken by index), so
    the inner product with the losses equals ``cvar(losses, alpha)``. Each
    weight respects the cap 1/((1-alpha)*D).
    """
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise DataError("weights of an empty archive")
    if not 0.0 <= alpha < 1.0:
        raise DataError(f"alpha must lie in [0, 1), got {alpha}")
    d = losses.size
    k = math.ceil((1.0 - alpha) * d - 1e-12)
    order = np.argsort(-losses, kind="stable")
    w = np.zeros(d)
    w[order[:k]] = 1.0 / k
    return w
