import numpy as np
import pytest

from peakshaving.economics import CostModel, TariffModel, bau_lcoe
from peakshaving.optimize import DeConfig
from peakshaving.sizing import (size_prescient, size_rbc, size_search_space)
from peakshaving.timeseries import synth_fleet

from conftest import random_series

TARIFF = TariffModel(lambda_imp=0.165, lambda_peak=5.75)
SMALL_DE = DeConfig(population=10, max_generations=15, seed=0)


def _train(seed=0, days=90):
    return synth_fleet(seed=seed, n_meters=1, days=days)[0]


class TestSizePrescient:
    def test_zero_prices_install_nothing(self):
        train = _train()
        tariff = TariffModel(lambda_imp=0.0, lambda_peak=0.0)
        cost = CostModel()
        result = size_prescient(train, tariff, cost)
        assert result.e_bat == 0.0 and result.p_bat == 0.0
        assert result.theta is None
        assert result.lcoe_sizing == bau_lcoe(train, tariff, cost)

    def test_never_worse_than_no_battery(self):
        train = _train(seed=3)
        result = size_prescient(train, TARIFF, CostModel())
        assert result.lcoe_sizing <= result.bau_train + 1e-12

    def test_cheap_battery_high_peak_price_installs(self):
        train = _train(seed=1)
        tariff = TariffModel(lambda_imp=0.165, lambda_peak=50.0)
        cost = CostModel(c_energy=1.0, c_power=1.0, c_fixed=0.0)
        result = size_prescient(train, tariff, cost)
        assert result.e_bat > 0.0
        assert result.p_bat > 0.0
        assert result.lcoe_sizing < result.bau_train

    def test_diagnostics_recorded(self):
        result = size_prescient(_train(seed=2, days=60), TARIFF, CostModel())
        assert result.diagnostics["lp_status"] == "optimal"


class TestSizeSearchSpace:
    def test_bounds_derived_from_data(self):
        train = _train()
        space = size_search_space(train, TARIFF)
        assert space.dim == 5
        p_hi = float(train.values.max())
        assert space.bounds[1, 1] == pytest.approx(p_hi)
        assert space.bounds[0, 1] >= 24.0 * p_hi
        assert space.bounds[2, 0] == 1.0 and space.bounds[2, 1] == 336.0
        assert 2 in space.integer_dims


class TestSizeRbc:
    def test_zero_prices_install_nothing(self):
        train = _train(days=60)
        tariff = TariffModel(lambda_imp=0.0, lambda_peak=0.0)
        cost = CostModel()
        result = size_rbc(train, tariff, cost, SMALL_DE)
        assert result.e_bat == 0.0 and result.p_bat == 0.0
        assert result.lcoe_sizing == bau_lcoe(train, tariff, cost)

    def test_reproducible_under_seed(self):
        train = _train(seed=4, days=60)
        r1 = size_rbc(train, TARIFF, CostModel(), SMALL_DE)
        r2 = size_rbc(train, TARIFF, CostModel(), SMALL_DE)
        assert r1.e_bat == r2.e_bat and r1.p_bat == r2.p_bat
        assert r1.lcoe_sizing == r2.lcoe_sizing

    def test_sizes_within_search_box(self):
        train = _train(seed=5, days=60)
        space = size_search_space(train, TARIFF)
        result = size_rbc(train, TARIFF, CostModel(), SMALL_DE, space=space)
        assert 0.0 <= result.e_bat <= space.bounds[0, 1]
        assert 0.0 <= result.p_bat <= space.bounds[1, 1]
        if result.theta is not None:
            assert result.theta.theta3 <= result.theta.theta2

    def test_never_worse_than_no_battery(self):
        train = _train(seed=6, days=60)
        result = size_rbc(train, TARIFF, CostModel(), SMALL_DE)
        assert result.lcoe_sizing <= result.bau_train + 1e-12

    def test_prescient_lower_bounds_rbc_sizing(self):
        for seed in (0, 1, 2):
            train = _train(seed=seed, days=90)
            pre = size_prescient(train, TARIFF, CostModel())
            rbc = size_rbc(train, TARIFF, CostModel(), SMALL_DE)
            assert pre.lcoe_sizing <= rbc.lcoe_sizing + 1e-6
