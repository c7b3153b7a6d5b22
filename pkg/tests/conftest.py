"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from peakshaving import _kernels
from peakshaving.timeseries import PowerSeries


@pytest.fixture(scope="session", autouse=True)
def _warm_kernel():
    # compile the simulation kernel once so timing-sensitive tests and the
    # fast-path comparisons run at steady state
    _kernels.warmup()


def make_series(values, start="2023-01-01", step_hours=1.0, meter_id="test"):
    return PowerSeries(meter_id=meter_id, start=np.datetime64(start, "s"),
                       step_hours=step_hours, values=np.asarray(values, dtype=np.float64))


def random_series(rng, n=500, start="2023-01-01", step_hours=1.0, base=50.0, spread=15.0):
    vals = np.abs(rng.normal(base, spread, n)) + 1.0
    return make_series(vals, start=start, step_hours=step_hours)


@pytest.fixture
def hourly_series():
    rng = np.random.default_rng(42)
    return random_series(rng, n=24 * 60)
