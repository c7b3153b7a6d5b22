"""Tariff and investment arithmetic: capex, opex, crf, LCOE.

All prices are stored in USD/kWh and USD/kW; convert MWh/MW figures at
the configuration boundary. The LCOE denominator always uses the
uncontrolled profile's energy, so battery losses show up in opex only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .timeseries import PowerSeries

__all__ = [
    "TariffModel", "CostModel", "CostBreakdown",
    "crf", "capex", "opex", "lcoe", "peak_shifted_tariff",
    "bau_lcoe", "cost_breakdown",
]


@dataclass(frozen=True)
class TariffModel:
    """Flat volumetric prices plus a monthly peak charge."""

    lambda_imp: float          # USD/kWh import
    lambda_exp: float = 0.0    # USD/kWh export compensation
    lambda_peak: float = 0.0   # USD/kW/month on the monthly peak

    def __post_init__(self):
        if self.lambda_imp < 0 or self.lambda_peak < 0 or self.lambda_exp < 0:
            raise DataError("tariff components must be non-negative")
        if self.lambda_exp > self.lambda_imp:
            # would reward fictitious simultaneous import/export in the LP
            raise DataError("export price above import price is not supported")


@dataclass(frozen=True)
class CostModel:
    """Investment parameters of the sizing problem."""

    c_energy: float = 120.0    # USD/kWh of battery capacity
    c_power: float = 50.0      # USD/kW of inverter capacity
    c_fixed: float = 1000.0    # USD per installation
    rate: float = 0.06         # interest rate, fraction per year
    lifetime: int = 15         # years

    def __post_init__(self):
        if self.rate <= 0:
            raise DataError("interest rate must be positive (use 1/n for the r->0 limit)")
        if self.lifetime < 1:
            raise DataError("lifetime must be >= 1 year")

    @property
    def crf(self) -> float:
        return crf(self.rate, self.lifetime)


@dataclass(frozen=True)
class CostBreakdown:
    """Cost components of one evaluated operation window."""

    capex: float
    energy_cost: float
    peak_cost: float
    monthly_peaks: dict[int, float]
    rho: float
    annual_energy: float       # rho * E, kWh
    lcoe: float

    @property
    def opex(self) -> float:
        return self.energy_cost + self.peak_cost


def crf(r: float, n: int) -> float:
    """Capital recovery factor r(1+r)^n / ((1+r)^n - 1)."""
    if r <= 0:
        raise DataError("crf undefined for r <= 0; use 1/n explicitly for r -> 0")
    g = (1.0 + r) ** n
    return r * g / (g - 1.0)


def capex(cost: CostModel, e_bat: float, p_bat: float) -> float:
    """Investment cost; the fixed project cost applies only if anything is installed."""
    if e_bat <= 0.0 and p_bat <= 0.0:
        return 0.0
    return cost.c_energy * e_bat + cost.c_power * p_bat + cost.c_fixed


def opex(grid: np.ndarray, dt: float, month_labels: np.ndarray,
         tariff: TariffModel) -> tuple[float, float, dict[int, float]]:
    """Operating cost of a grid trace.

    Returns (energy_cost, peak_cost, monthly_peaks). Monthly peaks are
    clamped at zero: a net-exporting month owes no peak charge.
    """
    grid = np.asarray(grid, dtype=np.float64)
    month_labels = np.asarray(month_labels)
    if grid.size == 0 or grid.size != month_labels.size:
        raise DataError("grid trace and month labels must be non-empty and aligned")
    p_plus = np.maximum(grid, 0.0)
    p_minus = np.maximum(-grid, 0.0)
    energy_cost = dt * float(tariff.lambda_imp * p_plus.sum()
                             - tariff.lambda_exp * p_minus.sum())
    peaks: dict[int, float] = {}
    for m in np.unique(month_labels):
        peaks[int(m)] = max(0.0, float(grid[month_labels == m].max()))
    peak_cost = tariff.lambda_peak * float(sum(peaks.values()))
    return energy_cost, peak_cost, peaks


def lcoe(capex_usd: float, opex_usd: float, rho: float, energy_kwh: float,
         crf_factor: float) -> float:
    """Levelised cost of energy (crf*C + rho*O) / (rho*E)."""
    if energy_kwh <= 0:
        raise DataError(f"energy must be positive, got {energy_kwh}")
    return (crf_factor * capex_usd + rho * opex_usd) / (rho * energy_kwh)


def rho_factor(n_days: int) -> float:
    """Annualization factor 365 / (represented days)."""
    if n_days < 1:
        raise DataError("need at least one represented day")
    return 365.0 / n_days


def cost_breakdown(series: PowerSeries, grid: np.ndarray, tariff: TariffModel,
                   cost: CostModel, e_bat: float, p_bat: float) -> CostBreakdown:
    """Full cost accounting of an operated window against its uncontrolled series."""
    energy_cost, peak_cost, peaks = opex(grid, series.step_hours,
                                         series.month_labels(), tariff)
    rho = rho_factor(series.n_days())
    energy = series.energy_kwh()
    c = capex(cost, e_bat, p_bat)
    return CostBreakdown(
        capex=c,
        energy_cost=energy_cost,
        peak_cost=peak_cost,
        monthly_peaks=peaks,
        rho=rho,
        annual_energy=rho * energy,
        lcoe=lcoe(c, energy_cost + peak_cost, rho, energy, cost.crf),
    )


def bau_lcoe(series: PowerSeries, tariff: TariffModel, cost: CostModel) -> float:
    """LCOE without a battery: zero capex, uncontrolled grid trace."""
    return cost_breakdown(series, series.values, tariff, cost, 0.0, 0.0).lcoe


def peak_shifted_tariff(base: TariffModel, grid_volumetric: float,
                        train: PowerSeries) -> TariffModel:
    """Shift half the grid-related volumetric charge onto the monthly peak.

    The new peak price is calibrated on the uncontrolled training profile
    so total grid revenue (volumetric grid share plus peak charges) is
    unchanged.
    """
    if grid_volumetric < 0 or grid_volumetric > base.lambda_imp:
        raise DataError("grid volumetric share must lie in [0, lambda_imp]")
    if grid_volumetric == 0.0:
        return base
    shift = grid_volumetric / 2.0
    p_plus = np.maximum(train.values, 0.0)
    shifted_revenue = shift * float(p_plus.sum()) * train.step_hours
    _, _, peaks = opex(train.values, train.step_hours, train.month_labels(), base)
    total_peak = float(sum(peaks.values()))
    if total_peak <= 0:
        raise DataError("cannot calibrate peak tariff: baseline monthly peaks are zero")
    return TariffModel(
        lambda_imp=base.lambda_imp - shift,
        lambda_exp=base.lambda_exp,
        lambda_peak=base.lambda_peak + shifted_revenue / total_peak,
    )
