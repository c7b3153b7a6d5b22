"""Run the full controller-by-sizing study over a small synthetic fleet.

This is the library-level equivalent of the `study` CLI command: per
meter it sizes the battery (with and without foresight), runs each
controller on the held-out window, normalizes daily peaks by the
prescient MPC reference, and prints the plot-ready aggregates.
"""

import numpy as np

from peakshaving.economics import CostModel, TariffModel
from peakshaving.evaluate import (StudySettings, fleet_quantiles, lcoe_report,
                                  run_meter_study)
from peakshaving.optimize import DeConfig
from peakshaving.timeseries import SplitSpec, synth_fleet


def main():
    fleet = synth_fleet(seed=1, n_meters=3, days=120)
    settings = StudySettings(
        split=SplitSpec(train_fraction=0.5),
        base_tariff=TariffModel(lambda_imp=0.200, lambda_peak=5.75),
        cost=CostModel(),
        grid_volumetric=0.070,      # folded into the peak charge
        de=DeConfig(population=10, max_generations=12, seed=0),
        controllers=("rbc", "rbc-adv"),
        sizing_methods=("prescient", "rbc"),
    )

    studies = [run_meter_study(series, settings) for series in fleet]

    print("normalized daily-peak quantiles (reference: prescient MPC)")
    ratios = {st.meter_id: st.cells[("rbc-adv", "prescient")].normalized_peaks
              for st in studies}
    for meter, quantiles in fleet_quantiles(ratios, (0.5, 0.95, 0.99)).items():
        line = "  ".join(f"q{int(q * 100)}={v:.3f}" for q, v in quantiles.items())
        print(f"  {meter}: {line}")

    print("\nnormalized LCOE on the held-out window (<= 1 means profitable)")
    for row in lcoe_report(studies):
        marker = "" if row["profitable_ex_post"] else "  <- not profitable"
        print(f"  {row['meter']} {row['controller']:<8} {row['sizing']:<10} "
              f"{row['normalized_lcoe']:.4f}{marker}")


if __name__ == "__main__":
    main()
