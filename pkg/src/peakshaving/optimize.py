"""Differential evolution (rand/1/bin) and the RBC parameter tuner.

Hand-rolled rather than delegated so runs are seed-deterministic with a
recorded per-generation history, and so integer dimensions can be rounded
on evaluation while the search itself stays continuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .battery import BatterySpec
from .errors import ConfigError, DataError
from .policies import RbcParams, THETA1_MAX, THETA1_MIN, simulate_rbc
from .risk import daily_peaks, scvar
from .timeseries import PowerSeries

__all__ = ["SearchSpace", "DeConfig", "DeResult", "minimize", "tune_rbc",
           "rbc_search_space", "rbc_objective"]


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds, with selected dimensions rounded at evaluation time."""

    bounds: np.ndarray                       # (dim, 2)
    integer_dims: frozenset[int] = frozenset()

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.bounds, dtype=np.float64))
        if b.shape[1] != 2 or np.any(b[:, 0] >= b[:, 1]):
            raise ConfigError("bounds must be (dim, 2) with lo < hi")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "integer_dims", frozenset(self.integer_dims))

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    def round_integers(self, x: np.ndarray) -> np.ndarray:
        if not self.integer_dims:
            return x
        y = x.copy()
        for i in self.integer_dims:
            y[i] = np.round(y[i])
        return y


@dataclass(frozen=True)
class DeConfig:
    population: int | None = None   # default 15 * dim
    mutation: float = 0.7
    crossover: float = 0.9
    max_generations: int = 200
    tol: float = 1e-3               # relative std of population objectives
    seed: int = 0

    def __post_init__(self):
        if self.population is not None and self.population < 4:
            raise ConfigError("DE/rand/1 needs a population of at least 4")
        if not 0.0 < self.mutation < 2.0:
            raise ConfigError("mutation factor must lie in (0, 2)")
        if not 0.0 <= self.crossover <= 1.0:
            raise ConfigError("crossover rate must lie in [0, 1]")
        if self.max_generations < 1:
            raise ConfigError("max_generations must be >= 1")


@dataclass
class DeResult:
    x: np.ndarray
    fun: float
    history: list[float] = field(default_factory=list)  # per-generation best
    n_evals: int = 0
    n_generations: int = 0


def minimize(objective: Callable[[np.ndarray], float], space: SearchSpace,
             config: DeConfig = DeConfig()) -> DeResult:
    """DE/rand/1/bin with bound clipping and greedy selection.

    Non-finite objective values are treated as +inf (candidate rejected).
    Stops when the relative spread of population objectives drops below
    ``config.tol`` or after ``config.max_generations``.
    """
    dim = space.dim
    npop = config.population or 15 * dim
    if npop < 4:
        npop = 4
    rng = np.random.default_rng(config.seed)
    lo, hi = space.bounds[:, 0], space.bounds[:, 1]

    def evaluate(x: np.ndarray) -> float:
        val = objective(space.round_integers(x))
        return float(val) if np.isfinite(val) else np.inf

    pop = rng.uniform(lo, hi, size=(npop, dim))
    fitness = np.array([evaluate(x) for x in pop])
    n_evals = npop
    result = DeResult(x=pop[0].copy(), fun=np.inf)

    for gen in range(config.max_generations):
        for i in range(npop):
            a, b, c = _pick_three(rng, npop, i)
            mutant = np.clip(pop[a] + config.mutation * (pop[b] - pop[c]), lo, hi)
            cross = rng.random(dim) < config.crossover
            cross[rng.integers(dim)] = True
            trial = np.where(cross, mutant, pop[i])
            f_trial = evaluate(trial)
            n_evals += 1
            if f_trial <= fitness[i]:
                pop[i] = trial
                fitness[i] = f_trial
        best = int(np.argmin(fitness))
        result.history.append(float(fitness[best]))
        result.n_generations = gen + 1
        finite = fitness[np.isfinite(fitness)]
        if finite.size == npop:
            spread = np.std(finite)
            scale = abs(np.mean(finite)) + 1e-12
            if spread <= config.tol * scale:
                break

    best = int(np.argmin(fitness))
    result.x = space.round_integers(pop[best])
    result.fun = float(fitness[best])
    result.n_evals = n_evals
    return result


def _pick_three(rng: np.random.Generator, npop: int, skip: int):
    idx = []
    while len(idx) < 3:
        j = int(rng.integers(npop))
        if j != skip and j not in idx:
            idx.append(j)
    return idx


# ---------------------------------------------------------------------------
# RBC tuning

def rbc_search_space() -> SearchSpace:
    return SearchSpace(
        bounds=np.array([[THETA1_MIN, THETA1_MAX], [0.0, 1.0], [0.0, 1.0]]),
        integer_dims={0},
    )


def _params_from_vector(x: np.ndarray) -> RbcParams:
    t2, t3 = float(x[1]), float(x[2])
    if t3 > t2:
        # symmetric repair keeps the whole box searchable
        t2, t3 = t3, t2
    return RbcParams(theta1=int(round(x[0])), theta2=t2, theta3=t3)


def rbc_objective(train: PowerSeries, spec: BatterySpec,
                  objective_kind: str, alpha: float = 0.95) -> Callable[[np.ndarray], float]:
    """Objective over theta: simulate, collect daily peaks, aggregate.

    ``objective_kind`` is "mean" (average daily peak) or "scvar"
    (monthly-stratified CVaR at ``alpha``).
    """
    if objective_kind not in ("mean", "scvar"):
        raise ConfigError(f"unknown objective kind {objective_kind!r}")
    day_labels = train.day_labels()
    month_labels = train.month_labels()

    def objective(x: np.ndarray) -> float:
        params = _params_from_vector(x)
        result = simulate_rbc(train, spec, params)
        archive = daily_peaks(result.grid, day_labels, month_labels)
        if objective_kind == "mean":
            return float(archive.losses.mean())
        return scvar(archive, alpha)

    return objective


def tune_rbc(train: PowerSeries, spec: BatterySpec, objective_kind: str = "mean",
             config: DeConfig = DeConfig(), alpha: float = 0.95,
             space: SearchSpace | None = None) -> tuple[RbcParams, DeResult]:
    """Tune the three RBC parameters on the training window."""
    if objective_kind == "scvar" and np.unique(train.month_labels()).size < 2:
        raise DataError("stratified CVaR tuning needs at least two months of data")
    space = space or rbc_search_space()
    result = minimize(rbc_objective(train, spec, objective_kind, alpha), space, config)
    return _params_from_vector(result.x), result
