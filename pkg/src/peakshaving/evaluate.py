"""Ex-post test-set evaluation: normalized peaks, sizes, LCOE tables.

Runs the controller x sizing-method matrix per meter, normalizes daily
peaks by the prescient MPC under the same sizing method, and emits
plot-ready fleet aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .battery import BatterySpec, check_result, simulate
from .economics import (CostModel, TariffModel, bau_lcoe, cost_breakdown,
                        peak_shifted_tariff)
from .errors import ConfigError, DataError
from .mpc import MpcConfig, fit_forecaster, make_mpc, normalized_mae
from .optimize import DeConfig, tune_rbc
from .policies import make_rbc, simulate_rbc
from .risk import LossArchive, daily_peaks
from .sizing import SizingResult, size_prescient, size_rbc
from .timeseries import PowerSeries, SplitSpec, split
from .quantiles import sort_quantile

__all__ = [
    "StudySettings", "MeterStudy", "normalized_daily_peaks", "fleet_quantiles",
    "lcoe_report", "run_meter_study",
]

CONTROLLERS = ("rbc", "rbc-adv", "mpc", "mpc-pre")
SIZING_METHODS = ("prescient", "rbc")
DEFAULT_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)
REFERENCE_CONTROLLER = "mpc-pre"


@dataclass(frozen=True)
class StudySettings:
    """Everything needed to evaluate one meter end to end."""

    split: SplitSpec
    base_tariff: TariffModel
    cost: CostModel
    grid_volumetric: float = 0.0       # USD/kWh shifted tariff calibration input
    alpha: float = 0.95
    de: DeConfig = DeConfig()
    mpc: MpcConfig = MpcConfig()
    eta_ch: float = 0.95
    eta_ds: float = 0.95
    controllers: tuple[str, ...] = CONTROLLERS
    sizing_methods: tuple[str, ...] = SIZING_METHODS
    quantile_levels: tuple[float, ...] = DEFAULT_LEVELS

    def __post_init__(self):
        for c in self.controllers:
            if c not in CONTROLLERS:
                raise ConfigError(f"unknown controller {c!r}")
        for s in self.sizing_methods:
            if s not in SIZING_METHODS:
                raise ConfigError(f"unknown sizing method {s!r}")


@dataclass
class ControllerCell:
    """One (controller, sizing-method) evaluation on the test set."""

    controller: str
    sizing_method: str
    lcoe_test: float
    breakdown: dict
    archive: LossArchive
    theta: tuple | None = None
    normalized_peaks: np.ndarray | None = None
    excluded_days: int = 0


@dataclass
class MeterStudy:
    meter_id: str
    bau_train: float
    bau_test: float
    tariff: TariffModel
    sizings: dict[str, SizingResult] = field(default_factory=dict)
    lcoe_sizing_time: dict[str, float] = field(default_factory=dict)
    cells: dict[tuple[str, str], ControllerCell] = field(default_factory=dict)
    forecaster_nmae: float | None = None


def normalized_daily_peaks(archive: LossArchive, reference: LossArchive
                           ) -> tuple[np.ndarray, int]:
    """Elementwise ratio of daily peaks against the reference controller.

    Days where the reference peak is not positive are excluded; their
    count is returned alongside.
    """
    if archive.day_of.size != reference.day_of.size or \
            np.any(archive.day_of != reference.day_of):
        raise DataError("archives cover different day sets")
    ok = reference.losses > 0.0
    ratios = archive.losses[ok] / reference.losses[ok]
    return ratios, int((~ok).sum())


def fleet_quantiles(ratios_per_meter: dict[str, np.ndarray],
                    levels=DEFAULT_LEVELS) -> dict[str, dict[float, float]]:
    """Per-meter nearest-rank quantiles of each meter's ratio distribution."""
    for q in levels:
        if not 0.0 <= q <= 1.0:
            raise DataError(f"quantile level {q} outside [0, 1]")
    out: dict[str, dict[float, float]] = {}
    for meter, ratios in ratios_per_meter.items():
        ratios = np.asarray(ratios, dtype=np.float64)
        if ratios.size == 0:
            raise DataError(f"no ratios for meter {meter}")
        out[meter] = {float(q): sort_quantile(ratios, q) for q in levels}
    return out


def lcoe_report(studies: list[MeterStudy]) -> list[dict]:
    """Normalized LCOE rows: test LCOE over BaU-train LCOE, per cell.

    Rows with ratio > 1 are flagged as not profitable ex post; sizing-time
    LCOE rides along for the gap analysis.
    """
    rows = []
    for st in studies:
        if st.bau_train <= 0:
            raise DataError(f"meter {st.meter_id}: BaU train LCOE is not positive")
        for (controller, sizing), cell in sorted(st.cells.items()):
            ratio = cell.lcoe_test / st.bau_train
            rows.append({
                "meter": st.meter_id,
                "controller": controller,
                "sizing": sizing,
                "lcoe_test": cell.lcoe_test,
                "bau_train": st.bau_train,
                "normalized_lcoe": ratio,
                "profitable_ex_post": bool(ratio <= 1.0),
                "lcoe_sizing_time": st.lcoe_sizing_time.get(sizing),
            })
    return rows


def _controller_result(controller: str, sizing: SizingResult, train: PowerSeries,
                       test: PowerSeries, spec: BatterySpec,
                       settings: StudySettings, forecaster):
    """Simulate one controller on the test window; returns (result, theta)."""
    if spec.e_bat <= 0.0 and spec.p_bat <= 0.0:
        # degenerate battery: every controller idles
        from .policies import ZeroPolicy
        return simulate(test, spec, ZeroPolicy()), None
    if controller == "rbc":
        if sizing.method == "rbc" and sizing.theta is not None:
            theta = sizing.theta
        else:
            theta, _ = tune_rbc(train, spec, "mean", settings.de)
        return simulate_rbc(test, spec, theta), theta
    if controller == "rbc-adv":
        theta, _ = tune_rbc(train, spec, "scvar", settings.de, alpha=settings.alpha)
        return simulate_rbc(test, spec, theta), theta
    if controller == "mpc":
        policy = make_mpc(forecaster, settings.mpc, test)
        return simulate(test, spec, policy), None
    if controller == "mpc-pre":
        policy = make_mpc("prescient", settings.mpc, test)
        return simulate(test, spec, policy), None
    raise ConfigError(f"unknown controller {controller!r}")


def run_meter_study(series: PowerSeries, settings: StudySettings) -> MeterStudy:
    """Full sizing x controller matrix for one meter."""
    train, test = split(series, settings.split)
    tariff = peak_shifted_tariff(settings.base_tariff, settings.grid_volumetric,
                                 train) if settings.grid_volumetric > 0 \
        else settings.base_tariff

    study = MeterStudy(
        meter_id=series.meter_id,
        bau_train=bau_lcoe(train, tariff, settings.cost),
        bau_test=bau_lcoe(test, tariff, settings.cost),
        tariff=tariff,
    )

    needs_forecaster = "mpc" in settings.controllers
    forecaster = fit_forecaster(train, horizon=settings.mpc.horizon) \
        if needs_forecaster else None
    if forecaster is not None:
        study.forecaster_nmae = normalized_mae(forecaster, test)

    controllers = list(settings.controllers)
    reference_needed = any(c != REFERENCE_CONTROLLER for c in controllers)
    run_list = list(controllers)
    if reference_needed and REFERENCE_CONTROLLER not in run_list:
        run_list.append(REFERENCE_CONTROLLER)

    for sizing_method in settings.sizing_methods:
        if sizing_method == "prescient":
            sizing = size_prescient(train, tariff, settings.cost,
                                    settings.eta_ch, settings.eta_ds)
        else:
            sizing = size_rbc(train, tariff, settings.cost, settings.de,
                              settings.eta_ch, settings.eta_ds)
        study.sizings[sizing_method] = sizing
        study.lcoe_sizing_time[sizing_method] = sizing.lcoe_sizing
        spec = BatterySpec.sized(sizing.e_bat, sizing.p_bat,
                                 settings.eta_ch, settings.eta_ds)

        archives: dict[str, LossArchive] = {}
        for controller in run_list:
            result, theta = _controller_result(controller, sizing, train, test,
                                               spec, settings, forecaster)
            check_result(test, spec, result)
            bd = cost_breakdown(test, result.grid, tariff, settings.cost,
                                sizing.e_bat, sizing.p_bat)
            archive = daily_peaks(result.grid, test.day_labels(),
                                  test.month_labels())
            archives[controller] = archive
            if controller in controllers:
                study.cells[(controller, sizing_method)] = ControllerCell(
                    controller=controller,
                    sizing_method=sizing_method,
                    lcoe_test=bd.lcoe,
                    breakdown={
                        "capex": bd.capex, "energy_cost": bd.energy_cost,
                        "peak_cost": bd.peak_cost, "rho": bd.rho,
                        "annual_energy": bd.annual_energy,
                        "monthly_peaks": {str(k): v for k, v in bd.monthly_peaks.items()},
                    },
                    archive=archive,
                    theta=(theta.theta1, theta.theta2, theta.theta3) if theta else None,
                )

        ref = archives.get(REFERENCE_CONTROLLER)
        if ref is not None:
            for controller in controllers:
                cell = study.cells.get((controller, sizing_method))
                if cell is None:
                    continue
                ratios, excluded = normalized_daily_peaks(cell.archive, ref)
                cell.normalized_peaks = ratios
                cell.excluded_days = excluded
    return study
