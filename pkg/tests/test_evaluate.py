import numpy as np
import pytest

from peakshaving.economics import CostModel, TariffModel
from peakshaving.errors import ConfigError, DataError
from peakshaving.evaluate import (MeterStudy, StudySettings, fleet_quantiles,
                                  lcoe_report, normalized_daily_peaks,
                                  run_meter_study)
from peakshaving.optimize import DeConfig
from peakshaving.risk import LossArchive
from peakshaving.timeseries import SplitSpec, synth_fleet


def _archive(losses, days=None):
    losses = np.asarray(losses, dtype=np.float64)
    days = np.arange(losses.size) if days is None else np.asarray(days)
    return LossArchive(losses=losses, month_of_day=np.zeros(losses.size, int),
                       day_of=days)


def _settings(**kw):
    defaults = dict(
        split=SplitSpec(train_fraction=0.5),
        base_tariff=TariffModel(lambda_imp=0.165, lambda_peak=5.75),
        cost=CostModel(),
        de=DeConfig(population=8, max_generations=8, seed=0),
    )
    defaults.update(kw)
    return StudySettings(**defaults)


class TestStudySettings:
    def test_unknown_controller_rejected(self):
        with pytest.raises(ConfigError):
            _settings(controllers=("rbc", "oracle"))

    def test_unknown_sizing_rejected(self):
        with pytest.raises(ConfigError):
            _settings(sizing_methods=("prescient", "magic"))


class TestNormalizedDailyPeaks:
    def test_elementwise_ratio(self):
        ratios, excluded = normalized_daily_peaks(
            _archive([2.0, 9.0, 5.0]), _archive([4.0, 3.0, 5.0]))
        np.testing.assert_allclose(ratios, [0.5, 3.0, 1.0])
        assert excluded == 0

    def test_non_positive_reference_days_excluded(self):
        ratios, excluded = normalized_daily_peaks(
            _archive([2.0, 9.0]), _archive([4.0, 0.0]))
        np.testing.assert_allclose(ratios, [0.5])
        assert excluded == 1

    def test_mismatched_day_sets_rejected(self):
        with pytest.raises(DataError):
            normalized_daily_peaks(_archive([1.0, 2.0]),
                                   _archive([1.0, 2.0], days=[5, 6]))


class TestFleetQuantiles:
    def test_nearest_rank_per_meter(self):
        out = fleet_quantiles({"m1": np.arange(1.0, 101.0)}, levels=(0.5, 0.95))
        assert out["m1"][0.5] == 50.0
        assert out["m1"][0.95] == 95.0

    def test_invalid_level_rejected(self):
        with pytest.raises(DataError):
            fleet_quantiles({"m": np.ones(3)}, levels=(1.5,))

    def test_empty_meter_rejected(self):
        with pytest.raises(DataError):
            fleet_quantiles({"m": np.array([])})


class TestLcoeReport:
    def test_profitability_flag(self):
        from peakshaving.evaluate import ControllerCell
        study = MeterStudy(meter_id="m", bau_train=0.2, bau_test=0.21,
                           tariff=TariffModel(0.165))
        study.lcoe_sizing_time["prescient"] = 0.15
        study.cells[("rbc", "prescient")] = ControllerCell(
            controller="rbc", sizing_method="prescient", lcoe_test=0.18,
            breakdown={}, archive=_archive([1.0]))
        study.cells[("mpc", "prescient")] = ControllerCell(
            controller="mpc", sizing_method="prescient", lcoe_test=0.25,
            breakdown={}, archive=_archive([1.0]))
        rows = lcoe_report([study])
        by_controller = {r["controller"]: r for r in rows}
        assert by_controller["rbc"]["profitable_ex_post"] is True
        assert by_controller["mpc"]["profitable_ex_post"] is False
        assert by_controller["rbc"]["normalized_lcoe"] == pytest.approx(0.9)
        assert by_controller["rbc"]["lcoe_sizing_time"] == 0.15

    def test_non_positive_bau_rejected(self):
        study = MeterStudy(meter_id="m", bau_train=0.0, bau_test=0.1,
                           tariff=TariffModel(0.165))
        with pytest.raises(DataError):
            lcoe_report([study])


@pytest.fixture(scope="module")
def study():
    series = synth_fleet(seed=1, n_meters=1, days=90)[0]
    settings = _settings(controllers=("rbc", "mpc-pre"),
                         sizing_methods=("prescient",))
    return run_meter_study(series, settings)


class TestRunMeterStudy:
    def test_cells_cover_requested_matrix(self, study):
        assert set(study.cells) == {("rbc", "prescient"),
                                    ("mpc-pre", "prescient")}
        assert set(study.sizings) == {"prescient"}

    def test_reference_normalizes_to_one(self, study):
        ref = study.cells[("mpc-pre", "prescient")]
        assert ref.normalized_peaks is not None
        np.testing.assert_allclose(ref.normalized_peaks, 1.0)

    def test_rbc_cell_has_theta_and_ratios(self, study):
        cell = study.cells[("rbc", "prescient")]
        assert cell.theta is not None and len(cell.theta) == 3
        assert cell.normalized_peaks is not None
        assert cell.normalized_peaks.size + cell.excluded_days == \
            study.cells[("mpc-pre", "prescient")].archive.losses.size

    def test_bau_values_positive(self, study):
        assert study.bau_train > 0.0 and study.bau_test > 0.0

    def test_sizing_time_lcoe_recorded(self, study):
        sizing = study.sizings["prescient"]
        assert study.lcoe_sizing_time["prescient"] == sizing.lcoe_sizing
        assert sizing.lcoe_sizing <= sizing.bau_train + 1e-12
