"""Meter time series: ingestion, resampling, splitting, calendar features.

A :class:`PowerSeries` is a uniformly sampled power profile in kW. All
calendar bookkeeping (hour of day, calendar-day and calendar-month labels)
is derived from the start timestamp and the step, so downstream modules
never touch raw timestamps.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError

__all__ = [
    "PowerSeries",
    "SplitSpec",
    "CalendarFeatures",
    "ingest_csv",
    "resample",
    "split",
    "make_features",
    "synth_fleet",
]

N_LAGS = 24


@dataclass(frozen=True)
class PowerSeries:
    """Uniformly sampled uncontrolled power profile of one meter.

    Attributes
    ----------
    meter_id : str
        Identifier of the meter (CSV column name or synthetic id).
    start : np.datetime64
        UTC timestamp of the first sample.
    step_hours : float
        Sampling step in hours (e.g. 0.25 for 15 minutes).
    values : np.ndarray
        Power in kW, one entry per step. Read-only.
    """

    meter_id: str
    start: np.datetime64
    step_hours: float
    values: np.ndarray

    def __post_init__(self):
        if self.step_hours <= 0:
            raise DataError(f"step must be positive, got {self.step_hours}")
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise DataError("values must be a non-empty 1-d array")
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise DataError(f"non-finite power at index {bad} of meter {self.meter_id}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start", np.datetime64(self.start, "s"))

    def __len__(self) -> int:
        return self.values.size

    @property
    def step_seconds(self) -> int:
        return int(round(self.step_hours * 3600.0))

    def timestamps(self) -> np.ndarray:
        """Per-sample UTC timestamps as datetime64[s]."""
        off = np.arange(len(self), dtype=np.int64) * self.step_seconds
        return self.start + off.astype("timedelta64[s]")

    def hour_of_day(self) -> np.ndarray:
        """Hour of day (0-23) of every sample."""
        secs = self.timestamps().astype("datetime64[s]").astype(np.int64)
        return (secs // 3600) % 24

    def day_of_week(self) -> np.ndarray:
        """Day of week (0 = Monday) of every sample."""
        days = self.timestamps().astype("datetime64[D]").astype(np.int64)
        # 1970-01-01 was a Thursday
        return (days + 3) % 7

    def day_labels(self) -> np.ndarray:
        """Calendar-day ordinal (days since epoch) of every sample."""
        return self.timestamps().astype("datetime64[D]").astype(np.int64)

    def month_labels(self) -> np.ndarray:
        """Calendar-month ordinal (months since epoch) of every sample."""
        return self.timestamps().astype("datetime64[M]").astype(np.int64)

    def n_days(self) -> int:
        """Number of distinct calendar days touched by the series."""
        return int(np.unique(self.day_labels()).size)

    def energy_kwh(self) -> float:
        """Total uncontrolled energy, sum(p) * dt."""
        return float(self.values.sum() * self.step_hours)

    def with_values(self, values: np.ndarray, meter_id: str | None = None) -> "PowerSeries":
        return dataclasses.replace(
            self, values=np.array(values, dtype=np.float64),
            meter_id=meter_id if meter_id is not None else self.meter_id,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split: either a fraction in (0, 1) or a boundary timestamp.

    The boundary timestamp is the first test sample.
    """

    train_fraction: float | None = None
    boundary: np.datetime64 | None = None

    def __post_init__(self):
        if (self.train_fraction is None) == (self.boundary is None):
            raise DataError("give exactly one of train_fraction or boundary")
        if self.train_fraction is not None and not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must lie in (0,1), got {self.train_fraction}")


@dataclass(frozen=True)
class CalendarFeatures:
    """Per-step forecasting features for steps t >= 24.

    lags[i] holds the previous 24 powers of step ``t0 + i``, most recent
    first. ``hour`` and ``dow`` are the calendar features of that step.
    """

    t0: int
    lags: np.ndarray     # (n, 24), most-recent-first
    hour: np.ndarray     # (n,)
    dow: np.ndarray      # (n,)
    target: np.ndarray   # (n,) power of the step itself

    def __len__(self) -> int:
        return self.target.size


def ingest_csv(
    path,
    timestamp_column: str | int = 0,
    meter_columns: list[str] | None = None,
    max_meters: int | None = None,
    decimal: str = ".",
    sep: str = ",",
    values_are_kwh: bool = False,
) -> list[PowerSeries]:
    """Parse a meter CSV into one PowerSeries per column.

    The expected layout is a header row, a timestamp column and one numeric
    column per meter. ``values_are_kwh`` interprets columns as energy per
    interval and converts to average kW by dividing by the step.

    Raises
    ------
    DataError
        On unparseable rows, duplicate timestamps or a non-uniform step.
    """
    try:
        frame = pd.read_csv(path, sep=sep, decimal=decimal)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if frame.shape[1] < 2:
        raise DataError(f"{path}: need a timestamp column and at least one meter column")

    ts_col = frame.columns[timestamp_column] if isinstance(timestamp_column, int) else timestamp_column
    try:
        stamps = pd.to_datetime(frame[ts_col], utc=True).dt.tz_localize(None)
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: cannot parse timestamp column {ts_col!r}: {exc}") from exc

    dup = stamps.duplicated()
    if dup.any():
        first = stamps[dup].iloc[0]
        raise DataError(f"{path}: duplicated timestamp {first}")
    if not stamps.is_monotonic_increasing:
        row = int(np.flatnonzero(np.diff(stamps.values.astype(np.int64)) < 0)[0]) + 1
        raise DataError(f"{path}: timestamps not increasing at row {row}")

    deltas = np.diff(stamps.values.astype("datetime64[s]").astype(np.int64))
    if stamps.size < 2:
        raise DataError(f"{path}: need at least two rows to infer the step")
    if np.unique(deltas).size != 1:
        bad = int(np.flatnonzero(deltas != deltas[0])[0]) + 1
        raise DataError(
            f"{path}: non-uniform raw step at row {bad}; resample explicitly after fixing the data"
        )
    step_hours = float(deltas[0]) / 3600.0

    cols = [c for c in frame.columns if c != ts_col]
    if meter_columns is not None:
        missing = [c for c in meter_columns if c not in cols]
        if missing:
            raise DataError(f"{path}: unknown meter columns {missing}")
        cols = meter_columns
    if max_meters is not None:
        cols = cols[:max_meters]

    out = []
    start = np.datetime64(stamps.iloc[0], "s")
    for col in cols:
        vals = pd.to_numeric(frame[col], errors="coerce").to_numpy(dtype=np.float64)
        if np.isnan(vals).any():
            row = int(np.flatnonzero(np.isnan(vals))[0])
            raise DataError(f"{path}: malformed value in column {col!r} at row {row}")
        if values_are_kwh:
            vals = vals / step_hours
        out.append(PowerSeries(meter_id=str(col), start=start, step_hours=step_hours, values=vals))
    return out


def resample(series: PowerSeries, target_step_hours: float) -> PowerSeries:
    """Downsample by averaging blocks (average power over the new step).

    The target step must be an integer multiple of the current step; a
    trailing partial block is dropped.
    """
    ratio_f = target_step_hours / series.step_hours
    ratio = int(round(ratio_f))
    if ratio < 1 or abs(ratio_f - ratio) > 1e-9:
        raise DataError(
            f"target step {target_step_hours} h is not an integer multiple "
            f"of the current step {series.step_hours} h"
        )
    if ratio == 1:
        return series
    n_out = len(series) // ratio
    if n_out == 0:
        raise DataError("series shorter than one target step")
    vals = series.values[: n_out * ratio].reshape(n_out, ratio).mean(axis=1)
    return dataclasses.replace(series, step_hours=target_step_hours, values=vals)


def split(series: PowerSeries, spec: SplitSpec) -> tuple[PowerSeries, PowerSeries]:
    """Split into contiguous (train, test) parts whose concatenation is the input."""
    n = len(series)
    if spec.train_fraction is not None:
        n_train = int(n * spec.train_fraction)
    else:
        boundary = np.datetime64(spec.boundary, "s")
        n_train = int(np.searchsorted(series.timestamps(), boundary, side="left"))
    if n_train <= 0 or n_train >= n:
        raise DataError(f"split at {n_train}/{n} leaves an empty train or test range")
    test_start = series.start + np.timedelta64(n_train * series.step_seconds, "s")
    train = dataclasses.replace(series, values=series.values[:n_train])
    test = dataclasses.replace(series, start=test_start, values=series.values[n_train:])
    return train, test


def month_boundary(series: PowerSeries, month: int) -> np.datetime64:
    """First timestamp of calendar month ``month`` (1-12) within the series' first year."""
    year = series.start.astype("datetime64[Y]").astype(int) + 1970
    return np.datetime64(f"{year:04d}-{month:02d}-01", "s")


def make_features(series: PowerSeries) -> CalendarFeatures:
    """Lag/calendar features for every step with a full 24-step lag window."""
    n = len(series)
    if n <= N_LAGS:
        raise DataError(f"series of length {n} is too short for {N_LAGS} lags")
    v = series.values
    idx = np.arange(N_LAGS, n)
    # lags most-recent-first: column j holds p[t-1-j]
    lag_idx = idx[:, None] - 1 - np.arange(N_LAGS)[None, :]
    lags = v[lag_idx]
    return CalendarFeatures(
        t0=N_LAGS,
        lags=lags,
        hour=series.hour_of_day()[idx],
        dow=series.day_of_week()[idx],
        target=v[idx],
    )


def synth_fleet(
    seed: int,
    n_meters: int,
    days: int,
    start: str = "2023-01-01",
    base_kw: float = 50.0,
    daily_amp_kw: float = 30.0,
    event_rate: float = 0.02,
) -> list[PowerSeries]:
    """Deterministic synthetic hourly meter fleet with heavy-tailed peak events.

    Each series is a strictly positive mix of base load, a daily sinusoid,
    weekly modulation, a slow seasonal trend and Pareto-tailed peak events
    whose intensity grows through the year, so the test half of a split is
    peakier than the train half.
    """
    if n_meters < 1:
        raise DataError(f"n_meters must be >= 1, got {n_meters}")
    if days < 60:
        raise DataError(f"need at least 60 days (two months), got {days}")
    rng = np.random.default_rng(seed)
    n = days * 24
    t = np.arange(n)
    hour = t % 24
    dow = (t // 24 + 6) % 7  # 2023-01-01 is a Sunday
    season_phase = 2.0 * np.pi * t / (365.0 * 24.0)

    fleet = []
    for m in range(n_meters):
        base = base_kw * rng.uniform(0.7, 1.3)
        amp = daily_amp_kw * rng.uniform(0.6, 1.4)
        peak_hour = rng.uniform(9.0, 19.0)
        daily = 0.5 * (1.0 + np.cos(2.0 * np.pi * (hour - peak_hour) / 24.0))
        weekly = np.where(dow >= 5, rng.uniform(0.55, 0.85), 1.0)
        seasonal = 1.0 + 0.15 * np.sin(season_phase + rng.uniform(0.0, 2.0 * np.pi))
        noise = rng.lognormal(mean=0.0, sigma=0.08, size=n)

        load = (base + amp * daily) * weekly * seasonal * noise

        # peak events: Pareto tail, more frequent and larger late in the range
        intensity = event_rate * (0.5 + 1.5 * t / n)
        hits = rng.random(n) < intensity
        spikes = np.zeros(n)
        n_hits = int(hits.sum())
        if n_hits:
            mag = (rng.pareto(2.5, size=n_hits) + 1.0) * 0.35 * (base + amp)
            grow = 1.0 + 1.0 * (t[hits] / n)
            spikes[hits] = mag * grow
        load = load + spikes

        fleet.append(
            PowerSeries(
                meter_id=f"synth-{seed}-{m:03d}",
                start=np.datetime64(start, "s"),
                step_hours=1.0,
                values=load,
            )
        )
    return fleet
