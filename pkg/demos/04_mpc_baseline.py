"""Compare the rule-based controller with receding-horizon MPC.

The MPC re-solves a 24-step quadratic program every hour, flattening the
forecast grid profile; its prescient variant is fed the true future and
marks the best any forecast-driven controller could do. The rule-based
controller only knows the trailing window — yet stays surprisingly close.
"""

import numpy as np

from peakshaving.battery import BatterySpec, simulate
from peakshaving.mpc import MpcConfig, fit_forecaster, make_mpc, normalized_mae
from peakshaving.policies import RbcParams, simulate_rbc
from peakshaving.risk import daily_peaks
from peakshaving.timeseries import SplitSpec, split, synth_fleet


def main():
    series = synth_fleet(seed=4, n_meters=1, days=120)[0]
    train, test = split(series, SplitSpec(train_fraction=0.5))
    spec = BatterySpec.sized(e_bat=180.0, p_bat=45.0)

    forecaster = fit_forecaster(train)
    print(f"forecaster one-step error: {normalized_mae(forecaster, test):.1%} "
          f"of the training mean")

    days, months = test.day_labels(), test.month_labels()
    runs = {
        "rule-based": simulate_rbc(test, spec, RbcParams(168, 0.9, 0.1)),
        "MPC (forecast)": simulate(test, spec,
                                   make_mpc(forecaster, MpcConfig(), test)),
        "MPC (prescient)": simulate(test, spec,
                                    make_mpc("prescient", MpcConfig(), test)),
    }
    base = daily_peaks(test.values, days, months)
    print(f"\n{'controller':<18} {'mean daily peak':>16} {'worst day':>10}")
    print(f"{'no battery':<18} {base.losses.mean():>16.2f} "
          f"{base.losses.max():>10.2f}")
    for name, result in runs.items():
        peaks = daily_peaks(result.grid, days, months)
        print(f"{name:<18} {peaks.losses.mean():>16.2f} "
              f"{peaks.losses.max():>10.2f}")


if __name__ == "__main__":
    main()
