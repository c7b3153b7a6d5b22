"""Receding-horizon MPC baseline and its linear lag/calendar forecaster.

The controller minimizes a quadratic penalty on the total profile over a
24-step horizon, re-solving every step and applying only the first
action. Forecasts come either from per-lead-time ridge regressions on the
previous 24 lags plus calendar one-hots, or from the true future series
(the prescient variant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .battery import BatterySpec
from .errors import DataError, NumericalError
from .lp import qp_factorize, solve_qp
from .timeseries import N_LAGS, PowerSeries

__all__ = ["Forecaster", "MpcConfig", "fit_forecaster", "forecast_horizon",
           "mpc_step", "MpcPolicy", "make_mpc", "normalized_mae"]


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 24
    qp_tol: float = 1e-6
    qp_max_iters: int = 50_000

    def __post_init__(self):
        if self.horizon < 1:
            raise DataError("horizon must be >= 1")


@dataclass(frozen=True)
class Forecaster:
    """One ridge model per lead time h = 1..horizon.

    Features per row: 24 lags (most recent first), hour-of-day one-hot of
    the target step, day-of-week one-hot of the target step, intercept.
    """

    coefs: np.ndarray        # (horizon, n_features)
    ridge: float
    train_mean: float
    horizon: int

    def predict_one(self, lags: np.ndarray, hour0: int, dow0: int) -> np.ndarray:
        """Forecast the next ``horizon`` steps.

        ``lags`` are the last 24 observed powers most-recent-first;
        ``hour0``/``dow0`` are the calendar labels of the first forecast
        step.
        """
        out = np.empty(self.horizon)
        for h in range(1, self.horizon + 1):
            hour = (hour0 + h - 1) % 24
            dow = (dow0 + (hour0 + h - 1) // 24) % 7
            out[h - 1] = self.coefs[h - 1] @ _feature_row(lags, hour, dow)
        return out


def _feature_row(lags: np.ndarray, hour: int, dow: int) -> np.ndarray:
    x = np.zeros(N_LAGS + 24 + 7 + 1)
    x[:N_LAGS] = lags
    x[N_LAGS + hour] = 1.0
    x[N_LAGS + 24 + dow] = 1.0
    x[-1] = 1.0
    return x


def fit_forecaster(train: PowerSeries, horizon: int = 24,
                   ridge: float = 1e-3) -> Forecaster:
    """Fit the per-lead ridge regressions on the training window."""
    n = len(train)
    if n <= 2 * N_LAGS:
        raise DataError(f"need more than {2 * N_LAGS} samples to fit, got {n}")
    v = train.values
    hours = train.hour_of_day()
    dows = train.day_of_week()
    if not np.all(np.isfinite(v)):
        raise DataError("non-finite feature in training series")

    n_feat = N_LAGS + 24 + 7 + 1
    coefs = np.empty((horizon, n_feat))
    reg = ridge * np.eye(n_feat)
    reg[-1, -1] = 0.0  # intercept unpenalized
    lag_cols = np.arange(N_LAGS)

    for h in range(1, horizon + 1):
        t_idx = np.arange(N_LAGS, n - h + 1)
        tgt = t_idx + h - 1
        x = np.zeros((t_idx.size, n_feat))
        x[:, :N_LAGS] = v[t_idx[:, None] - 1 - lag_cols[None, :]]
        x[np.arange(t_idx.size), N_LAGS + hours[tgt]] = 1.0
        x[np.arange(t_idx.size), N_LAGS + 24 + dows[tgt]] = 1.0
        x[:, -1] = 1.0
        gram = x.T @ x + reg
        try:
            coefs[h - 1] = np.linalg.solve(gram, x.T @ v[tgt])
        except np.linalg.LinAlgError as exc:
            raise DataError(f"degenerate design matrix for lead {h}: {exc}") from exc

    return Forecaster(coefs=coefs, ridge=ridge,
                      train_mean=float(v.mean()), horizon=horizon)


def normalized_mae(forecaster: Forecaster, series: PowerSeries) -> float:
    """One-step-ahead MAE on a series, normalized by the training mean."""
    feats_err = []
    v = series.values
    hours = series.hour_of_day()
    dows = series.day_of_week()
    for t in range(N_LAGS, len(series)):
        lags = v[t - 1::-1][:N_LAGS]
        pred = forecaster.coefs[0] @ _feature_row(lags, int(hours[t]), int(dows[t]))
        feats_err.append(abs(pred - v[t]))
    return float(np.mean(feats_err) / (forecaster.train_mean or 1.0))


# ---------------------------------------------------------------------------
# the horizon QP

class _QpTemplate:
    """Constraint matrices of the horizon QP; fixed given (spec, dt, horizon)."""

    def __init__(self, spec: BatterySpec, dt: float, horizon: int):
        h = horizon
        n = 3 * h
        p_mat = np.zeros((n, n))
        p_mat[:h, :h] = 2.0 * np.eye(h)
        p_mat[h:2 * h, h:2 * h] = 2.0 * np.eye(h)
        p_mat[:h, h:2 * h] = -2.0 * np.eye(h)
        p_mat[h:2 * h, :h] = -2.0 * np.eye(h)

        dyn = np.zeros((h, n))
        for t in range(h):
            dyn[t, 2 * h + t] = 1.0
            if t > 0:
                dyn[t, 2 * h + t - 1] = -1.0
            dyn[t, t] = -spec.eta_ch * dt
            dyn[t, h + t] = dt / spec.eta_ds
        a_mat = np.vstack([dyn, np.eye(n)])

        lo = np.concatenate([np.zeros(h), np.zeros(h), np.zeros(h),
                             np.full(h, spec.e_min)])
        hi = np.concatenate([np.zeros(h), np.full(h, spec.p_max),
                             np.full(h, spec.p_max), np.full(h, spec.e_max)])
        # rows: h dynamics (l=u, first row carries e0), then boxes
        self.h = h
        self.p_mat = p_mat
        self.a_mat = a_mat
        self.l_base = np.concatenate([np.zeros(h), lo[h:]])
        self.u_base = np.concatenate([np.zeros(h), hi[h:]])
        self.factor = qp_factorize(p_mat, a_mat)

    def bounds(self, e0: float):
        l = self.l_base.copy()
        u = self.u_base.copy()
        l[0] = u[0] = e0
        return l, u


def mpc_step(forecast: np.ndarray, e: float, spec: BatterySpec, dt: float,
             config: MpcConfig = MpcConfig(), template: _QpTemplate | None = None,
             warm=None):
    """Solve the horizon QP; returns (battery power plan, warm-start state).

    The plan minimizes sum_h (forecast_h + p_b_h)^2 subject to the battery
    dynamics and bounds, with free terminal SoC.
    """
    forecast = np.asarray(forecast, dtype=np.float64)
    if not np.all(np.isfinite(forecast)):
        raise NumericalError("non-finite forecast")
    h = forecast.size
    if spec.p_max <= 0.0 or spec.e_max - spec.e_min <= 0.0:
        return np.zeros(h), None
    if template is None:
        template = _QpTemplate(spec, dt, h)
    q = np.concatenate([2.0 * forecast, -2.0 * forecast, np.zeros(h)])
    l, u = template.bounds(e)
    x, y, _ = solve_qp(template.p_mat, q, template.a_mat, l, u,
                       tol=config.qp_tol, max_iters=config.qp_max_iters,
                       warm=warm, factor=template.factor)
    plan = x[:h] - x[h:2 * h]
    return plan, (x, y)


class MpcPolicy:
    """Receding-horizon policy; stateful, one instance per simulation.

    ``predictor`` is a :class:`Forecaster` or the string ``"prescient"``,
    in which case the bound series provides perfect forecasts. The policy
    reads only timestamps (and, when prescient, future values) from the
    bound series; observed powers arrive through ``act``.
    """

    def __init__(self, predictor, config: MpcConfig, series: PowerSeries):
        if not (isinstance(predictor, Forecaster) or predictor == "prescient"):
            raise DataError("predictor must be a Forecaster or 'prescient'")
        self.predictor = predictor
        self.config = config
        self.series = series
        self._hours = series.hour_of_day()
        self._dows = series.day_of_week()
        self.reset()

    def reset(self) -> None:
        self._history: list[float] = []
        self._warm = None
        self._template = None
        self._template_key = None

    def _forecast(self, t: int, p: float) -> np.ndarray:
        h = self.config.horizon
        if self.predictor == "prescient":
            v = self.series.values
            fc = v[t: t + h]
            if fc.size < h:
                fc = np.concatenate([fc, np.full(h - fc.size, v[-1])])
            return fc.astype(np.float64)
        if len(self._history) < N_LAGS:
            return np.full(h, p)  # not enough lags yet: persistence
        lags = np.array(self._history[-1:-N_LAGS - 1:-1])
        fc = self.predictor.predict_one(lags, int(self._hours[t]), int(self._dows[t]))
        if h <= fc.size:
            return fc[:h]
        return np.concatenate([fc, np.full(h - fc.size, fc[-1])])

    def act(self, t: int, p: float, e: float, spec: BatterySpec, dt: float) -> float:
        key = (id(spec), dt, self.config.horizon)
        if self._template_key != key and spec.p_max > 0.0 and spec.e_max > spec.e_min:
            self._template = _QpTemplate(spec, dt, self.config.horizon)
            self._template_key = key
        forecast = self._forecast(t, p)
        plan, self._warm = mpc_step(forecast, e, spec, dt, self.config,
                                    template=self._template, warm=self._warm)
        self._history.append(p)
        u = float(plan[0])
        # exact feasibility clamp on top of the solver tolerance
        u = min(max(u, -spec.p_max), spec.p_max)
        u = min(u, (spec.e_max - e) / (spec.eta_ch * dt))
        u = max(u, -(e - spec.e_min) * spec.eta_ds / dt)
        return u


def make_mpc(predictor, config: MpcConfig, series: PowerSeries) -> MpcPolicy:
    """Receding-horizon policy bound to the series it will run on."""
    return MpcPolicy(predictor, config, series)


def forecast_horizon(forecaster: Forecaster, series: PowerSeries, t: int,
                     horizon: int) -> np.ndarray:
    """Out-of-loop forecast helper used in diagnostics."""
    if t < N_LAGS:
        raise DataError("need 24 observed steps before forecasting")
    lags = series.values[t - 1::-1][:N_LAGS]
    fc = forecaster.predict_one(lags, int(series.hour_of_day()[t]),
                                int(series.day_of_week()[t]))
    return fc[:horizon]
