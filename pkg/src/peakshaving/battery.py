"""Battery dynamics and the generic closed-loop simulation engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .timeseries import PowerSeries

__all__ = ["BatterySpec", "SimulationResult", "step", "simulate", "check_result"]

#: absolute slack on power/SoC limit checks (kW / kWh)
LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class BatterySpec:
    """Physical battery parameters. Sign convention: p_b > 0 charges.

    ``e0`` defaults to the upper SoC bound: tuned rule-based controllers
    tend to hold the battery full, so starting full is the neutral choice.
    """

    e_bat: float            # energy capacity, kWh
    p_bat: float            # inverter power capacity, kW
    eta_ch: float = 0.95
    eta_ds: float = 0.95
    e_min: float = 0.0
    e_max: float | None = None   # defaults to e_bat
    p_max: float | None = None   # defaults to p_bat
    e0: float | None = None      # defaults to e_max

    def __post_init__(self):
        if self.e_bat < 0 or self.p_bat < 0:
            raise DataError("capacities must be non-negative")
        if not (0.0 < self.eta_ch <= 1.0 and 0.0 < self.eta_ds <= 1.0):
            raise DataError("efficiencies must lie in (0, 1]")
        if self.e_max is None:
            object.__setattr__(self, "e_max", self.e_bat)
        if self.p_max is None:
            object.__setattr__(self, "p_max", self.p_bat)
        if self.e0 is None:
            object.__setattr__(self, "e0", self.e_max)
        if not (0.0 <= self.e_min <= self.e0 <= self.e_max <= self.e_bat + LIMIT_TOL):
            raise DataError(
                f"need 0 <= e_min <= e0 <= e_max <= e_bat, got "
                f"({self.e_min}, {self.e0}, {self.e_max}, {self.e_bat})"
            )
        if self.p_max < 0 or self.p_max > self.p_bat + LIMIT_TOL:
            raise DataError("need 0 <= p_max <= p_bat")

    @classmethod
    def sized(cls, e_bat: float, p_bat: float, eta_ch: float = 0.95,
              eta_ds: float = 0.95) -> "BatterySpec":
        """Full usable window: e in [0, e_bat], power up to p_bat, start full."""
        return cls(e_bat=e_bat, p_bat=p_bat, eta_ch=eta_ch, eta_ds=eta_ds)


@dataclass(frozen=True)
class SimulationResult:
    """Closed-loop traces. ``soc`` has one more entry than the steps."""

    p_b: np.ndarray    # battery power, kW; positive = charging
    soc: np.ndarray    # stored energy, kWh; length steps+1
    grid: np.ndarray   # p + p_b, kW

    def __post_init__(self):
        for name in ("p_b", "soc", "grid"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def step(spec: BatterySpec, e: float, p_b: float, dt: float) -> float:
    """One step of the storage dynamics, e' = e + (eta_ch*ch - ds/eta_ds)*dt.

    Raises NumericalError if the request violates power or SoC limits:
    policies are expected to clamp before calling.
    """
    if abs(p_b) > spec.p_max + LIMIT_TOL:
        raise NumericalError(f"battery power {p_b} exceeds limit {spec.p_max}")
    ch = max(p_b, 0.0)
    ds = max(-p_b, 0.0)
    e_next = e + (spec.eta_ch * ch - ds / spec.eta_ds) * dt
    if e_next < spec.e_min - LIMIT_TOL or e_next > spec.e_max + LIMIT_TOL:
        raise NumericalError(
            f"SoC {e_next} outside [{spec.e_min}, {spec.e_max}] after power {p_b}"
        )
    return e_next


def simulate(series: PowerSeries, spec: BatterySpec, policy) -> SimulationResult:
    """Apply ``policy`` step by step over the series.

    The policy is called as ``policy.act(t, p, e, spec, dt)`` and must
    return a feasible battery power. ``policy.reset()`` is invoked first
    so a policy object can be reused across simulations.
    """
    policy.reset()
    n = len(series)
    dt = series.step_hours
    p = series.values
    p_b = np.empty(n)
    soc = np.empty(n + 1)
    soc[0] = spec.e0
    e = spec.e0
    for t in range(n):
        u = policy.act(t, p[t], e, spec, dt)
        if not np.isfinite(u):
            raise NumericalError(f"policy returned non-finite power {u} at step {t}")
        e = step(spec, e, u, dt)
        p_b[t] = u
        soc[t + 1] = e
    return SimulationResult(p_b=p_b, soc=soc, grid=p + p_b)


def check_result(series: PowerSeries, spec: BatterySpec, result: SimulationResult,
                 tol: float = LIMIT_TOL) -> float:
    """Re-validate traces post hoc; returns the max energy-balance residual.

    Raises NumericalError on any SoC or power bound violation.
    """
    dt = series.step_hours
    p_b, soc = result.p_b, result.soc
    if np.any(np.abs(p_b) > spec.p_max + tol):
        raise NumericalError("power limit violated in traces")
    if np.any(soc < spec.e_min - tol) or np.any(soc > spec.e_max + tol):
        raise NumericalError("SoC bounds violated in traces")
    ch = np.maximum(p_b, 0.0)
    ds = np.maximum(-p_b, 0.0)
    resid = np.abs(soc[1:] - soc[:-1] - (spec.eta_ch * ch - ds / spec.eta_ds) * dt)
    worst = float(resid.max()) if resid.size else 0.0
    if worst > tol:
        raise NumericalError(f"energy-balance residual {worst} exceeds {tol}")
    return worst
