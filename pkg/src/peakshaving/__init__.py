"""Battery sizing and rule-based peak-shaving control toolkit.

Library surface: time-series handling, the sliding-quantile RBC with its
compiled simulator, CVaR-based robust tuning, prescient LP sizing, a
deterministic MPC baseline and the ex-post evaluation pipeline.
"""

from .battery import BatterySpec, SimulationResult, simulate, step
from .economics import (CostModel, TariffModel, bau_lcoe, cost_breakdown, crf,
                        lcoe, opex, peak_shifted_tariff)
from .errors import ConfigError, DataError, NumericalError, PeakShavingError
from .evaluate import (StudySettings, fleet_quantiles, lcoe_report,
                       normalized_daily_peaks, run_meter_study)
from .mpc import Forecaster, MpcConfig, fit_forecaster, make_mpc, mpc_step
from .optimize import DeConfig, SearchSpace, minimize, tune_rbc
from .policies import Policy, RbcParams, make_rbc, rbc_step, simulate_rbc
from .quantiles import SlidingQuantile
from .risk import LossArchive, cvar, daily_peaks, risk_envelope_weights, scvar
from .sizing import SizingResult, size_prescient, size_rbc
from .timeseries import (PowerSeries, SplitSpec, ingest_csv, make_features,
                         resample, split, synth_fleet)

__version__ = "0.1.0"
