"""Run configuration: a strict YAML schema with the study's defaults.

Prices are entered in MWh/MW units as utilities quote them and converted
to kWh/kW internally. Unknown keys anywhere in the document are rejected
before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .economics import CostModel, TariffModel
from .errors import ConfigError
from .evaluate import (CONTROLLERS, DEFAULT_LEVELS, SIZING_METHODS,
                       StudySettings)
from .mpc import MpcConfig
from .optimize import DeConfig
from .timeseries import SplitSpec

__all__ = ["RunConfig", "load_config"]

_SCHEMA = {
    "data": {"source", "path", "sep", "decimal", "timestamp_column",
             "values_are_kwh", "meters", "max_meters", "year",
             "resample_hours", "synth"},
    "data.synth": {"seed", "n_meters", "days", "start"},
    "split": {"train_fraction", "boundary", "month"},
    "tariff": {"import_usd_per_mwh", "grid_volumetric_usd_per_mwh",
               "export_usd_per_mwh", "peak_usd_per_mw_month",
               "apply_peak_shift"},
    "cost": {"energy_usd_per_kwh", "power_usd_per_kw", "fixed_usd",
             "interest_rate", "lifetime_years"},
    "battery": {"eta_ch", "eta_ds"},
    "de": {"population", "mutation", "crossover", "max_generations", "tol",
           "seed"},
    "mpc": {"horizon", "qp_tol", "qp_max_iters"},
    "risk": {"alpha"},
    "study": {"controllers", "sizing", "quantile_levels"},
    "": {"data", "split", "tariff", "cost", "battery", "de", "mpc", "risk",
         "study", "output_dir", "jobs"},
}


def _check_keys(section: dict, path: str):
    allowed = _SCHEMA.get(path if path else "", set())
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} in section {path or '<root>'!r}")


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_meters: int = 10
    days: int = 180
    start: str = "2023-01-01"


@dataclass(frozen=True)
class DataConfig:
    source: str = "synth"
    path: str | None = None
    sep: str = ","
    decimal: str = "."
    timestamp_column: int | str = 0
    values_are_kwh: bool = False
    meters: list[str] | None = None
    max_meters: int | None = None
    year: int | None = None
    resample_hours: float = 1.0
    synth: SynthSpec = field(default_factory=SynthSpec)

    def __post_init__(self):
        if self.source not in ("synth", "csv"):
            raise ConfigError(f"data.source must be 'synth' or 'csv', got {self.source!r}")
        if self.source == "csv" and not self.path:
            raise ConfigError("data.path is required when data.source is 'csv'")


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig
    split: SplitSpec
    split_month: int | None
    base_tariff: TariffModel
    grid_volumetric: float
    cost: CostModel
    eta_ch: float
    eta_ds: float
    de: DeConfig
    mpc: MpcConfig
    alpha: float
    controllers: tuple[str, ...]
    sizing_methods: tuple[str, ...]
    quantile_levels: tuple[float, ...]
    output_dir: Path
    jobs: int

    def study_settings(self) -> StudySettings:
        return StudySettings(
            split=self.split,
            base_tariff=self.base_tariff,
            cost=self.cost,
            grid_volumetric=self.grid_volumetric,
            alpha=self.alpha,
            de=self.de,
            mpc=self.mpc,
            eta_ch=self.eta_ch,
            eta_ds=self.eta_ds,
            controllers=self.controllers,
            sizing_methods=self.sizing_methods,
            quantile_levels=self.quantile_levels,
        )


def load_config(path) -> RunConfig:
    """Parse and validate a YAML run config; all omitted blocks use defaults."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> RunConfig:
    _check_keys(doc, "")
    data_doc = doc.get("data", {}) or {}
    _check_keys(data_doc, "data")
    synth_doc = data_doc.pop("synth", {}) or {}
    _check_keys(synth_doc, "data.synth")
    data = DataConfig(**{**data_doc, "synth": SynthSpec(**synth_doc)})

    split_doc = doc.get("split", {}) or {}
    _check_keys(split_doc, "split")
    split_month = split_doc.get("month")
    if split_month is not None:
        if not 1 <= int(split_month) <= 12:
            raise ConfigError(f"split.month must be 1..12, got {split_month}")
        split = None  # resolved per meter against its first year
    elif "boundary" in split_doc:
        split = SplitSpec(boundary=np.datetime64(split_doc["boundary"], "s"))
    else:
        split = SplitSpec(train_fraction=float(split_doc.get("train_fraction", 0.5)))

    tariff_doc = doc.get("tariff", {}) or {}
    _check_keys(tariff_doc, "tariff")
    base_tariff = TariffModel(
        lambda_imp=float(tariff_doc.get("import_usd_per_mwh", 200.0)) / 1000.0,
        lambda_exp=float(tariff_doc.get("export_usd_per_mwh", 0.0)) / 1000.0,
        lambda_peak=float(tariff_doc.get("peak_usd_per_mw_month", 5750.0)) / 1000.0,
    )
    apply_shift = bool(tariff_doc.get("apply_peak_shift", True))
    grid_volumetric = float(tariff_doc.get("grid_volumetric_usd_per_mwh", 70.0)) / 1000.0 \
        if apply_shift else 0.0

    cost_doc = doc.get("cost", {}) or {}
    _check_keys(cost_doc, "cost")
    cost = CostModel(
        c_energy=float(cost_doc.get("energy_usd_per_kwh", 120.0)),
        c_power=float(cost_doc.get("power_usd_per_kw", 50.0)),
        c_fixed=float(cost_doc.get("fixed_usd", 1000.0)),
        rate=float(cost_doc.get("interest_rate", 0.06)),
        lifetime=int(cost_doc.get("lifetime_years", 15)),
    )

    battery_doc = doc.get("battery", {}) or {}
    _check_keys(battery_doc, "battery")
    de_doc = doc.get("de", {}) or {}
    _check_keys(de_doc, "de")
    mpc_doc = doc.get("mpc", {}) or {}
    _check_keys(mpc_doc, "mpc")
    risk_doc = doc.get("risk", {}) or {}
    _check_keys(risk_doc, "risk")
    study_doc = doc.get("study", {}) or {}
    _check_keys(study_doc, "study")

    controllers = tuple(study_doc.get("controllers", list(CONTROLLERS)))
    sizing_methods = tuple(study_doc.get("sizing", list(SIZING_METHODS)))

    return RunConfig(
        data=data,
        split=split,
        split_month=int(split_month) if split_month is not None else None,
        base_tariff=base_tariff,
        grid_volumetric=grid_volumetric,
        cost=cost,
        eta_ch=float(battery_doc.get("eta_ch", 0.95)),
        eta_ds=float(battery_doc.get("eta_ds", 0.95)),
        de=DeConfig(
            population=de_doc.get("population"),
            mutation=float(de_doc.get("mutation", 0.7)),
            crossover=float(de_doc.get("crossover", 0.9)),
            max_generations=int(de_doc.get("max_generations", 200)),
            tol=float(de_doc.get("tol", 1e-3)),
            seed=int(de_doc.get("seed", 0)),
        ),
        mpc=MpcConfig(
            horizon=int(mpc_doc.get("horizon", 24)),
            qp_tol=float(mpc_doc.get("qp_tol", 1e-6)),
            qp_max_iters=int(mpc_doc.get("qp_max_iters", 50_000)),
        ),
        alpha=float(risk_doc.get("alpha", 0.95)),
        controllers=controllers,
        sizing_methods=sizing_methods,
        quantile_levels=tuple(float(q) for q in
                              study_doc.get("quantile_levels", list(DEFAULT_LEVELS))),
        output_dir=Path(doc.get("output_dir", "out")),
        jobs=int(doc.get("jobs", 1)),
    )
