"""Command-line front end: ingest, study, bench, tune, size.

Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import _kernels
from .battery import BatterySpec
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, NumericalError, PeakShavingError
from .evaluate import MeterStudy, StudySettings, fleet_quantiles, lcoe_report, \
    run_meter_study
from .mpc import MpcConfig, mpc_step
from .optimize import tune_rbc
from .policies import RbcParams, simulate_rbc
from .sizing import size_prescient, size_rbc
from .timeseries import PowerSeries, SplitSpec, ingest_csv, month_boundary, \
    resample, split, synth_fleet

__all__ = ["main", "cli"]


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _dump_json(payload, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1,
                               default=_json_default) + "\n")


def load_fleet(config: RunConfig) -> list[PowerSeries]:
    """Materialize the meter fleet from the config's data block."""
    d = config.data
    if d.source == "synth":
        fleet = synth_fleet(d.synth.seed, d.synth.n_meters, d.synth.days,
                            start=d.synth.start)
    else:
        fleet = ingest_csv(
            d.path, timestamp_column=d.timestamp_column, meter_columns=d.meters,
            max_meters=d.max_meters, decimal=d.decimal, sep=d.sep,
            values_are_kwh=d.values_are_kwh,
        )
        if d.year is not None:
            fleet = [_select_year(s, d.year) for s in fleet]
    if d.resample_hours:
        fleet = [resample(s, d.resample_hours) for s in fleet]
    return fleet


def _select_year(series: PowerSeries, year: int) -> PowerSeries:
    years = series.timestamps().astype("datetime64[Y]").astype(int) + 1970
    sel = years == year
    if not sel.any():
        raise DataError(f"meter {series.meter_id}: no samples in year {year}")
    first = int(np.flatnonzero(sel)[0])
    last = int(np.flatnonzero(sel)[-1])
    start = series.start + np.timedelta64(first * series.step_seconds, "s")
    return dataclasses.replace(series, start=start,
                               values=series.values[first:last + 1])


def _settings_for(series: PowerSeries, config: RunConfig) -> StudySettings:
    settings = config.study_settings()
    if config.split_month is not None:
        boundary = month_boundary(series, config.split_month)
        settings = dataclasses.replace(settings,
                                       split=SplitSpec(boundary=boundary))
    return settings


def _meter_payload(study: MeterStudy) -> dict:
    cells = {}
    for (controller, sizing), cell in sorted(study.cells.items()):
        cells[f"{controller}|{sizing}"] = {
            "lcoe_test": cell.lcoe_test,
            "breakdown": cell.breakdown,
            "theta": cell.theta,
            "daily_peaks": cell.archive.losses,
            "day_of": cell.archive.day_of,
            "month_of_day": cell.archive.month_of_day,
            "normalized_peaks": cell.normalized_peaks,
            "excluded_days": cell.excluded_days,
        }
    return {
        "meter": study.meter_id,
        "bau_train": study.bau_train,
        "bau_test": study.bau_test,
        "tariff": dataclasses.asdict(study.tariff),
        "forecaster_nmae": study.forecaster_nmae,
        "sizes": {m: {"e_bat_kwh": s.e_bat, "p_bat_kw": s.p_bat,
                      "theta": None if s.theta is None else
                      (s.theta.theta1, s.theta.theta2, s.theta.theta3)}
                  for m, s in study.sizings.items()},
        "lcoe_sizing_time": study.lcoe_sizing_time,
        "cells": cells,
    }


def _study_worker(args):
    series, settings = args
    return _meter_payload(run_meter_study(series, settings))


def _write_csv(path: Path, header: list[str], rows: list[list]):
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _aggregate(payloads: list[dict], config: RunConfig, out: Path):
    payloads = sorted(payloads, key=lambda p: p["meter"])
    levels = config.quantile_levels

    fig2_rows = []
    pooled: dict[tuple[str, str], list[np.ndarray]] = {}
    for p in payloads:
        for key, cell in sorted(p["cells"].items()):
            controller, sizing = key.split("|")
            ratios = cell.get("normalized_peaks")
            if ratios is None:
                continue
            ratios = np.asarray(ratios, dtype=np.float64)
            if ratios.size == 0:
                continue
            q = fleet_quantiles({p["meter"]: ratios}, levels)[p["meter"]]
            for lvl in levels:
                fig2_rows.append([p["meter"], controller, sizing, lvl, q[lvl]])
            pooled.setdefault((controller, sizing), []).append(ratios)
    for (controller, sizing), chunks in sorted(pooled.items()):
        allr = np.concatenate(chunks)
        q = fleet_quantiles({"ALL": allr}, levels)["ALL"]
        for lvl in levels:
            fig2_rows.append(["ALL", controller, sizing, lvl, q[lvl]])
    _write_csv(out / "fig2_quantiles.csv",
               ["meter", "controller", "sizing", "level", "value"], fig2_rows)

    fig3_rows = [[p["meter"], m, s["e_bat_kwh"], s["p_bat_kw"]]
                 for p in payloads for m, s in sorted(p["sizes"].items())]
    _write_csv(out / "fig3_sizes.csv",
               ["meter", "sizing", "e_bat_kwh", "p_bat_kw"], fig3_rows)

    for sizing, fname in (("prescient", "fig4_lcoe_prescient.csv"),
                          ("rbc", "fig5_lcoe_rbc.csv")):
        rows = []
        for p in payloads:
            for key, cell in sorted(p["cells"].items()):
                controller, cell_sizing = key.split("|")
                if cell_sizing != sizing:
                    continue
                rows.append([
                    p["meter"], controller, cell["lcoe_test"], p["bau_train"],
                    cell["lcoe_test"] / p["bau_train"],
                    p["lcoe_sizing_time"].get(sizing, ""),
                ])
        _write_csv(out / fname,
                   ["meter", "controller", "lcoe_test", "bau_train",
                    "normalized_lcoe", "lcoe_sizing_time"], rows)

    _dump_json({"meters": payloads}, out / "summary.json")


@click.group()
def cli():
    """Battery sizing and peak-shaving study toolkit."""


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
def ingest(config_path):
    """Parse, resample and split input data; write canonical CSVs + manifest."""
    config = load_config(config_path)
    fleet = load_fleet(config)
    out = config.output_dir / "ingested"
    out.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for series in fleet:
        stamps = series.timestamps().astype("datetime64[s]").astype(str)
        lines = ["timestamp,power_kw"]
        lines += [f"{t},{repr(float(v))}" for t, v in zip(stamps, series.values)]
        body = "\n".join(lines) + "\n"
        fname = f"{series.meter_id}.csv"
        (out / fname).write_text(body)
        manifest[series.meter_id] = {
            "file": fname,
            "sha256": hashlib.sha256(body.encode()).hexdigest(),
            "n_samples": len(series),
            "step_hours": series.step_hours,
            "start": str(series.start),
        }
    _dump_json(manifest, out / "manifest.json")
    click.echo(f"ingested {len(fleet)} meters into {out}")


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--controllers", default=None, help="comma-separated subset")
@click.option("--sizing", default=None, help="comma-separated subset")
@click.option("--jobs", default=None, type=int, help="parallel meter workers")
def study(config_path, controllers, sizing, jobs):
    """Run the full sizing x controller matrix and write the results bundle."""
    config = load_config(config_path)
    if controllers:
        config = dataclasses.replace(config,
                                     controllers=tuple(controllers.split(",")))
    if sizing:
        config = dataclasses.replace(config,
                                     sizing_methods=tuple(sizing.split(",")))
    jobs = jobs or config.jobs
    fleet = load_fleet(config)
    out = config.output_dir
    meters_dir = out / "meters"
    meters_dir.mkdir(parents=True, exist_ok=True)

    todo = []
    payloads = []
    for series in fleet:
        cached = meters_dir / f"{series.meter_id}.json"
        if cached.exists():
            payloads.append(json.loads(cached.read_text()))
            click.echo(f"{series.meter_id}: cached")
        else:
            todo.append(series)

    tasks = [(series, _settings_for(series, config)) for series in todo]
    failures = 0
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_study_worker, tasks))
        for payload in results:
            _dump_json(payload, meters_dir / f"{payload['meter']}.json")
            payloads.append(payload)
            click.echo(f"{payload['meter']}: done")
    else:
        for task in tasks:
            series = task[0]
            try:
                payload = _study_worker(task)
            except PeakShavingError as exc:
                failures += 1
                click.echo(f"{series.meter_id}: FAILED ({exc})", err=True)
                continue
            _dump_json(payload, meters_dir / f"{payload['meter']}.json")
            payloads.append(payload)
            click.echo(f"{series.meter_id}: done")

    _aggregate(payloads, config, out)
    click.echo(f"study complete: {len(payloads)} meters, {failures} failures -> {out}")


@cli.command()
@click.option("--reps", default=100, show_default=True)
@click.option("--output", default=None, type=click.Path())
def bench(reps, output):
    """Microbenchmark: one-year RBC simulation and one MPC step."""
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    fleet = synth_fleet(0, 1, 365)
    series = fleet[0]
    if len(series) == 0:
        raise DataError("empty benchmark series")
    spec = BatterySpec.sized(200.0, 50.0)
    params = RbcParams(theta1=168, theta2=0.9, theta3=0.1)
    _kernels.warmup()
    simulate_rbc(series, spec, params)  # steady-state warmup at full size

    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        simulate_rbc(series, spec, params)
        times.append(time.perf_counter() - t0)
    rbc_mean = float(np.mean(times))
    rbc_std = float(np.std(times))

    forecast = series.values[:24]
    t0 = time.perf_counter()
    mpc_step(forecast, spec.e0, spec, 1.0, MpcConfig())
    mpc_time = time.perf_counter() - t0

    report = {
        "rbc_year_mean_s": rbc_mean,
        "rbc_year_std_s": rbc_std,
        "rbc_reps": reps,
        "mpc_step_s": mpc_time,
        "cpu": _cpu_model(),
        "steps": len(series),
    }
    click.echo(f"RBC one-year simulation: {rbc_mean * 1e6:.1f} +/- "
               f"{rbc_std * 1e6:.1f} us over {reps} reps")
    click.echo(f"MPC single step: {mpc_time * 1e3:.2f} ms")
    click.echo(f"CPU: {report['cpu']}")
    if output:
        _dump_json(report, Path(output))


def _cpu_model() -> str:
    try:
        for line in Path("/proc/cpuinfo").read_text().splitlines():
            if line.lower().startswith("model name"):
                return line.split(":", 1)[1].strip()
    except OSError:
        pass
    import platform
    return platform.processor() or platform.machine()


def _pick_meter(fleet: list[PowerSeries], meter: str | None) -> PowerSeries:
    if meter is None:
        return fleet[0]
    for series in fleet:
        if series.meter_id == meter:
            return series
    raise DataError(f"meter {meter!r} not found")


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--meter", default=None)
@click.option("--objective", default="mean", type=click.Choice(["mean", "scvar"]))
@click.option("--e-bat", required=True, type=float)
@click.option("--p-bat", required=True, type=float)
def tune(config_path, meter, objective, e_bat, p_bat):
    """Tune RBC parameters for one meter at a fixed battery size."""
    config = load_config(config_path)
    series = _pick_meter(load_fleet(config), meter)
    settings = _settings_for(series, config)
    train, _ = split(series, settings.split)
    spec = BatterySpec.sized(e_bat, p_bat, config.eta_ch, config.eta_ds)
    theta, result = tune_rbc(train, spec, objective, config.de,
                             alpha=config.alpha)
    click.echo(json.dumps({
        "meter": series.meter_id,
        "objective": objective,
        "theta": {"theta1": theta.theta1, "theta2": theta.theta2,
                  "theta3": theta.theta3},
        "objective_value": result.fun,
        "history": result.history,
        "de": dataclasses.asdict(config.de),
    }, sort_keys=True, default=_json_default))


@cli.command()
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--meter", default=None)
@click.option("--method", default="prescient",
              type=click.Choice(["prescient", "rbc"]))
def size(config_path, meter, method):
    """Size the battery for one meter with the chosen method."""
    config = load_config(config_path)
    series = _pick_meter(load_fleet(config), meter)
    settings = _settings_for(series, config)
    train, _ = split(series, settings.split)
    tariff = settings.base_tariff
    if settings.grid_volumetric > 0:
        from .economics import peak_shifted_tariff
        tariff = peak_shifted_tariff(tariff, settings.grid_volumetric, train)
    if method == "prescient":
        result = size_prescient(train, tariff, config.cost,
                                config.eta_ch, config.eta_ds)
    else:
        result = size_rbc(train, tariff, config.cost, config.de,
                          config.eta_ch, config.eta_ds)
    click.echo(json.dumps({
        "meter": series.meter_id,
        "method": result.method,
        "e_bat_kwh": result.e_bat,
        "p_bat_kw": result.p_bat,
        "theta": None if result.theta is None else
        {"theta1": result.theta.theta1, "theta2": result.theta.theta2,
         "theta3": result.theta.theta3},
        "lcoe_sizing": result.lcoe_sizing,
        "bau_train": result.bau_train,
    }, sort_keys=True, default=_json_default))


def main():
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
