import numpy as np
import pytest

from peakshaving.config import config_from_dict, load_config
from peakshaving.errors import ConfigError


class TestSchema:
    def test_unknown_root_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"outputt_dir": "out"})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"tariff": {"import_usd_per_kwh": 0.2}})

    def test_non_mapping_root_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("- just\n- a\n- list\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.yaml")


class TestDefaultsAndUnits:
    def test_bare_config_uses_published_defaults(self):
        cfg = config_from_dict({})
        # prices quoted per MWh/MW convert to kWh/kW internally
        assert cfg.base_tariff.lambda_imp == pytest.approx(0.200)
        assert cfg.base_tariff.lambda_peak == pytest.approx(5.75)
        assert cfg.grid_volumetric == pytest.approx(0.070)
        assert cfg.alpha == 0.95
        assert cfg.mpc.horizon == 24
        assert cfg.eta_ch == 0.95 and cfg.eta_ds == 0.95

    def test_peak_shift_opt_out(self):
        cfg = config_from_dict({"tariff": {"apply_peak_shift": False}})
        assert cfg.grid_volumetric == 0.0

    def test_mwh_units_converted(self):
        cfg = config_from_dict({"tariff": {"import_usd_per_mwh": 150.0,
                                           "peak_usd_per_mw_month": 20044.0}})
        assert cfg.base_tariff.lambda_imp == pytest.approx(0.150)
        assert cfg.base_tariff.lambda_peak == pytest.approx(20.044)

    def test_boundary_split_parsed(self):
        cfg = config_from_dict({"split": {"boundary": "2023-07-01"}})
        assert cfg.split.boundary == np.datetime64("2023-07-01", "s")

    def test_month_split_validated(self):
        with pytest.raises(ConfigError):
            config_from_dict({"split": {"month": 13}})
        cfg = config_from_dict({"split": {"month": 7}})
        assert cfg.split_month == 7
        assert cfg.split is None  # resolved per meter later

    def test_csv_source_requires_path(self):
        with pytest.raises(ConfigError):
            config_from_dict({"data": {"source": "csv"}})

    def test_study_settings_round_trip(self):
        cfg = config_from_dict({"study": {"controllers": ["rbc", "mpc-pre"],
                                          "sizing": ["prescient"]}})
        settings = cfg.study_settings()
        assert settings.controllers == ("rbc", "mpc-pre")
        assert settings.sizing_methods == ("prescient",)
