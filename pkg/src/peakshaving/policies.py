"""Policies: the three-parameter rule-based controller and the policy protocol.

The RBC keeps a sliding window of the last ``theta1`` uncontrolled powers
and discharges when the current power exceeds the window's ``theta2``
quantile, charges when it falls below the ``theta3`` quantile, and idles
inside the band. Both branches clamp to power and SoC limits, so the
returned action is always feasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import _kernels
from .battery import BatterySpec, SimulationResult
from .errors import DataError
from .quantiles import SlidingQuantile
from .timeseries import PowerSeries

__all__ = ["RbcParams", "Policy", "rbc_step", "make_rbc", "RbcPolicy",
           "simulate_rbc", "ZeroPolicy"]

#: bounds for theta1 (steps) used by tuners; two weeks at hourly resolution
THETA1_MIN, THETA1_MAX = 1, 336


@dataclass(frozen=True)
class RbcParams:
    """Policy vector: window length, upper and lower quantile levels."""

    theta1: int
    theta2: float
    theta3: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", int(round(self.theta1)))
        if self.theta1 < 1:
            raise DataError(f"theta1 must be >= 1, got {self.theta1}")
        if not (0.0 <= self.theta3 <= 1.0 and 0.0 <= self.theta2 <= 1.0):
            raise DataError("quantile levels must lie in [0, 1]")
        if self.theta3 > self.theta2:
            raise DataError(
                f"lower level theta3={self.theta3} exceeds upper level theta2={self.theta2}"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3], dtype=np.float64)

    @classmethod
    def from_array(cls, x) -> "RbcParams":
        return cls(theta1=int(round(x[0])), theta2=float(x[1]), theta3=float(x[2]))


class Policy(Protocol):
    """State-carrying decision rule mapping (t, p, e, spec, dt) to battery power."""

    def reset(self) -> None: ...

    def act(self, t: int, p: float, e: float, spec: BatterySpec, dt: float) -> float: ...


def rbc_step(params: RbcParams, qstate: SlidingQuantile, p: float, e: float,
             spec: BatterySpec, dt: float) -> float:
    """One controller decision; pushes ``p`` into the window afterwards.

    With an empty window the controller idles (no thresholds yet).
    """
    u = 0.0
    if len(qstate) > 0:
        q_u = qstate.quantile(params.theta2)
        q_l = qstate.quantile(params.theta3)
        if p > q_u:
            mag = min(p - q_u, spec.p_max, (e - spec.e_min) * spec.eta_ds / dt)
            u = -max(mag, 0.0)
        elif p < q_l:
            mag = min(q_l - p, spec.p_max, (spec.e_max - e) / (spec.eta_ch * dt))
            u = max(mag, 0.0)
    qstate.push(p)
    return u


class RbcPolicy:
    """Policy wrapper owning the sliding-window state."""

    def __init__(self, params: RbcParams):
        self.params = params
        self._state = SlidingQuantile(params.theta1)

    def reset(self) -> None:
        self._state = SlidingQuantile(self.params.theta1)

    def act(self, t: int, p: float, e: float, spec: BatterySpec, dt: float) -> float:
        return rbc_step(self.params, self._state, p, e, spec, dt)


def make_rbc(params: RbcParams) -> RbcPolicy:
    """Fresh RBC policy instance for the generic simulation engine."""
    return RbcPolicy(params)


class ZeroPolicy:
    """Always-idle policy; the business-as-usual counterfactual."""

    def reset(self) -> None:
        pass

    def act(self, t, p, e, spec, dt) -> float:
        return 0.0


def simulate_rbc(series: PowerSeries, spec: BatterySpec,
                 params: RbcParams) -> SimulationResult:
    """Closed-loop RBC simulation via the compiled kernel.

    Produces traces identical to ``battery.simulate(series, spec,
    make_rbc(params))``; this fast path is what tuners and benchmarks call.
    """
    p_b, soc = _kernels.rbc_simulate_arrays(
        series.values, series.step_hours, params.theta1, params.theta2,
        params.theta3, spec.p_max, spec.e_min, spec.e_max,
        spec.eta_ch, spec.eta_ds, spec.e0,
    )
    return SimulationResult(p_b=p_b, soc=soc, grid=series.values + p_b)
