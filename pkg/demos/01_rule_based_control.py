"""Shave daily peaks with the sliding-quantile rule-based controller.

The controller keeps a trailing window of observed powers. When the
current draw exceeds the window's upper quantile it discharges toward
that threshold; when the draw falls below the lower quantile it
recharges. Run this to see how the three parameters (window length,
upper level, lower level) trade peak reduction against battery cycling.
"""

import numpy as np

from peakshaving.battery import BatterySpec
from peakshaving.policies import RbcParams, simulate_rbc
from peakshaving.risk import daily_peaks
from peakshaving.timeseries import synth_fleet


def main():
    series = synth_fleet(seed=3, n_meters=1, days=60)[0]
    spec = BatterySpec.sized(e_bat=150.0, p_bat=40.0)
    days = series.day_labels()
    months = series.month_labels()
    uncontrolled = daily_peaks(series.values, days, months)

    print(f"meter {series.meter_id}: {len(series)} hourly steps, "
          f"battery {spec.e_bat:.0f} kWh / {spec.p_bat:.0f} kW")
    print(f"{'window':>8} {'upper':>6} {'lower':>6} "
          f"{'mean daily peak':>16} {'worst day':>10} {'cycles kWh':>11}")

    for theta in [RbcParams(24, 0.95, 0.05), RbcParams(72, 0.90, 0.10),
                  RbcParams(168, 0.85, 0.20), RbcParams(336, 0.99, 0.01)]:
        result = simulate_rbc(series, spec, theta)
        peaks = daily_peaks(result.grid, days, months)
        throughput = float(np.abs(result.p_b).sum()) * series.step_hours
        print(f"{theta.theta1:>8} {theta.theta2:>6.2f} {theta.theta3:>6.2f} "
              f"{peaks.losses.mean():>16.2f} {peaks.losses.max():>10.2f} "
              f"{throughput:>11.0f}")

    print(f"{'(no battery)':>22} {uncontrolled.losses.mean():>16.2f} "
          f"{uncontrolled.losses.max():>10.2f} {0.0:>11.0f}")


if __name__ == "__main__":
    main()
