import numpy as np
import pytest

from peakshaving.economics import (CostModel, TariffModel, bau_lcoe, capex,
                                   cost_breakdown, crf, lcoe, opex,
                                   peak_shifted_tariff, rho_factor)
from peakshaving.errors import DataError
from peakshaving.timeseries import synth_fleet

from conftest import make_series


class TestCrf:
    def test_reference_value(self):
        # 6% over 15 years
        assert crf(0.06, 15) == pytest.approx(0.1029628, abs=1e-6)

    def test_one_year(self):
        assert crf(0.1, 1) == pytest.approx(1.1)

    def test_decreases_with_lifetime(self):
        assert crf(0.06, 20) < crf(0.06, 10)

    def test_rejects_non_positive_rate(self):
        with pytest.raises(DataError):
            crf(0.0, 10)

    def test_model_property(self):
        assert CostModel().crf == crf(0.06, 15)


class TestCapex:
    def test_nothing_installed_costs_nothing(self):
        assert capex(CostModel(), 0.0, 0.0) == 0.0

    def test_fixed_cost_applies_once_installed(self):
        cost = CostModel(c_energy=120.0, c_power=50.0, c_fixed=1000.0)
        assert capex(cost, 10.0, 5.0) == pytest.approx(120 * 10 + 50 * 5 + 1000)
        assert capex(cost, 0.0, 5.0) == pytest.approx(50 * 5 + 1000)


class TestOpex:
    def test_energy_and_peak_terms(self):
        grid = np.full(24, 10.0)
        months = np.zeros(24, dtype=int)
        tariff = TariffModel(lambda_imp=0.2, lambda_peak=5.75)
        energy_cost, peak_cost, peaks = opex(grid, 1.0, months, tariff)
        assert energy_cost == pytest.approx(0.2 * 240.0)
        assert peaks == {0: 10.0}
        assert peak_cost == pytest.approx(5.75 * 10.0)

    def test_per_month_peaks(self):
        grid = np.array([5.0, 9.0, 3.0, 7.0])
        months = np.array([0, 0, 1, 1])
        _, peak_cost, peaks = opex(grid, 1.0, months, TariffModel(0.1, lambda_peak=1.0))
        assert peaks == {0: 9.0, 1: 7.0}
        assert peak_cost == pytest.approx(16.0)

    def test_export_compensation(self):
        grid = np.array([10.0, -4.0])
        months = np.zeros(2, dtype=int)
        tariff = TariffModel(lambda_imp=0.2, lambda_exp=0.05)
        energy_cost, _, _ = opex(grid, 0.5, months, tariff)
        assert energy_cost == pytest.approx(0.5 * (0.2 * 10.0 - 0.05 * 4.0))

    def test_exporting_month_owes_no_peak_charge(self):
        grid = np.array([-2.0, -1.0])
        months = np.zeros(2, dtype=int)
        _, peak_cost, peaks = opex(grid, 1.0, months, TariffModel(0.2, lambda_peak=5.0))
        assert peaks == {0: 0.0}
        assert peak_cost == 0.0

    def test_misaligned_inputs_rejected(self):
        with pytest.raises(DataError):
            opex(np.ones(3), 1.0, np.zeros(2, dtype=int), TariffModel(0.2))


class TestLcoe:
    def test_formula(self):
        # (crf*C + rho*O) / (rho*E)
        val = lcoe(1000.0, 50.0, 2.0, 400.0, 0.1)
        assert val == pytest.approx((0.1 * 1000 + 2.0 * 50) / (2.0 * 400))

    def test_zero_energy_rejected(self):
        with pytest.raises(DataError):
            lcoe(0.0, 0.0, 1.0, 0.0, 0.1)

    def test_rho_factor(self):
        assert rho_factor(365) == pytest.approx(1.0)
        assert rho_factor(73) == pytest.approx(5.0)
        with pytest.raises(DataError):
            rho_factor(0)


class TestCostBreakdown:
    def test_consistent_with_parts(self):
        s = make_series(np.full(48, 10.0))
        tariff = TariffModel(lambda_imp=0.2, lambda_peak=5.75)
        cost = CostModel()
        bd = cost_breakdown(s, s.values, tariff, cost, 5.0, 2.0)
        assert bd.capex == capex(cost, 5.0, 2.0)
        assert bd.opex == bd.energy_cost + bd.peak_cost
        assert bd.rho == pytest.approx(365.0 / 2.0)
        assert bd.annual_energy == pytest.approx(bd.rho * s.energy_kwh())
        assert bd.lcoe == pytest.approx(
            (cost.crf * bd.capex + bd.rho * bd.opex) / bd.annual_energy)

    def test_bau_has_no_capex(self):
        s = make_series(np.full(24, 10.0))
        tariff = TariffModel(lambda_imp=0.2, lambda_peak=5.75)
        cost = CostModel()
        bd = cost_breakdown(s, s.values, tariff, cost, 0.0, 0.0)
        assert bd.capex == 0.0
        assert bau_lcoe(s, tariff, cost) == bd.lcoe

    def test_battery_losses_raise_lcoe_not_denominator(self):
        s = make_series(np.full(24, 10.0))
        tariff = TariffModel(lambda_imp=0.2)
        cost = CostModel()
        # a lossy round trip adds 1 kW of import for one hour
        grid = s.values.copy()
        grid[3] += 1.0
        bd = cost_breakdown(s, grid, tariff, cost, 0.0, 0.0)
        bau = cost_breakdown(s, s.values, tariff, cost, 0.0, 0.0)
        assert bd.annual_energy == bau.annual_energy
        assert bd.lcoe > bau.lcoe


class TestTariffModel:
    def test_validation(self):
        with pytest.raises(DataError):
            TariffModel(lambda_imp=-0.1)
        with pytest.raises(DataError):
            TariffModel(lambda_imp=0.1, lambda_exp=0.2)


class TestPeakShiftedTariff:
    def test_import_price_drops_by_half_grid_share(self):
        train = synth_fleet(seed=0, n_meters=1, days=90)[0]
        base = TariffModel(lambda_imp=0.200, lambda_peak=5.75)
        shifted = peak_shifted_tariff(base, 0.070, train)
        assert shifted.lambda_imp == pytest.approx(0.165, abs=1e-12)
        assert shifted.lambda_peak > base.lambda_peak

    def test_revenue_neutral_on_training_profile(self):
        train = synth_fleet(seed=8, n_meters=1, days=120)[0]
        base = TariffModel(lambda_imp=0.200, lambda_peak=5.75)
        shifted = peak_shifted_tariff(base, 0.070, train)
        months = train.month_labels()
        e_base, p_base, _ = opex(train.values, 1.0, months, base)
        e_new, p_new, _ = opex(train.values, 1.0, months, shifted)
        total_base = e_base + p_base
        total_new = e_new + p_new
        assert abs(total_new - total_base) <= 1e-9 * total_base

    def test_zero_share_is_identity(self):
        train = synth_fleet(seed=0, n_meters=1, days=60)[0]
        base = TariffModel(lambda_imp=0.2, lambda_peak=5.75)
        assert peak_shifted_tariff(base, 0.0, train) is base

    def test_share_above_import_price_rejected(self):
        train = synth_fleet(seed=0, n_meters=1, days=60)[0]
        with pytest.raises(DataError):
            peak_shifted_tariff(TariffModel(lambda_imp=0.1), 0.2, train)
