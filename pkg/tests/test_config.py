import math

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.backend.engines.ode import BlochRhs
from src.backend.model.scenario import scenario_params
from src.backend.parsers.config_parser import RunConfigParser
from src.common.config import CONFIG, omega_max
from src.common.data_repository import RESULT_TYPES, ResultRepository, read_csv, write_csv
from src.common.errors import ConfigError
from src.common.run_config import RunConfig

CONFIG_TEXT = """
[run]
scenario = calibrated
engine = ode
t_end = 3
points = 31

[scenario:calibrated]
delta = 0.25

[scenario:constant]
alpha = 0.9
"""


def test_parse_run_and_scenario_sections(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(CONFIG_TEXT, encoding="utf-8")
    settings = RunConfigParser(str(path)).parse()
    assert settings["scenario"] == "calibrated"
    assert settings["engine"] == "ode"
    assert settings["t_end"] == 3.0 and settings["points"] == 31
    assert settings["params"] == {"delta": 0.25}
    config = RunConfig(**settings)
    assert config.params.delta == 0.25


def test_single_scenario_section_selects_scenario(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[scenario:eta-optimal]\neta = 0.85\n", encoding="utf-8")
    settings = RunConfigParser().parse(str(path))
    assert settings["scenario"] == "eta-optimal"
    assert settings["params"]["eta"] == 0.85


def test_dashes_in_keys(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nn-traj = 500\n\n[scenario:noisy]\ngamma-iso = 0.05\n", encoding="utf-8")
    settings = RunConfigParser(str(path)).parse()
    assert settings["n_traj"] == 500
    assert settings["params"]["gamma_iso"] == 0.05


def test_unknown_key(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nresolution = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfigParser(str(path)).parse()


def test_bad_value(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\npoints = many\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfigParser(str(path)).parse()


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        RunConfigParser(str(tmp_path / "absent.ini")).parse()


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(points=1)
    with pytest.raises(ValidationError):
        RunConfig(engine="euler")
    with pytest.raises(ValidationError):
        RunConfig(params={"eta": 1.5})
    with pytest.raises(ValidationError):
        RunConfig(colour="red")


def test_run_config_defaults():
    config = RunConfig(engine="sme")
    assert config.engine_dt() == 1e-3
    assert RunConfig().engine_dt() == 1e-4
    assert RunConfig(dt=0.01).engine_dt() == 0.01
    grid = RunConfig(t_end=2.0, points=5).time_grid()
    assert grid == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])


def test_csv_round_trip_is_exact(tmp_path):
    values = np.random.default_rng(0).random(50) / 3.0
    frame = pd.DataFrame({"t": np.linspace(0.0, 1.0, 50), "value": values})
    path = write_csv(frame, tmp_path / "nested" / "curve.csv")
    back = read_csv(path)
    assert np.array_equal(back["value"].to_numpy(), values)
    assert list(back.columns) == ["t", "value"]


def test_repository(tmp_path):
    repository = ResultRepository(str(tmp_path / "store"))
    for result_type in RESULT_TYPES:
        assert (tmp_path / "store" / result_type).is_dir()
    frame = pd.DataFrame({"t": [0.25, 1.5], "value": [0.125, 0.5]})
    repository.save_data("curves", frame, "ideal_analytic")
    assert repository.load_data("curves", "ideal_analytic").equals(frame)
    assert repository.load_data("curves", "missing") is None
    assert repository.list_available_data() == {"curves": ["ideal_analytic.csv"]}
    with pytest.raises(ValueError):
        repository.save_data("plots", frame, "x")


def test_scenario_from_caller_selects_its_section(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(CONFIG_TEXT, encoding="utf-8")
    settings = RunConfigParser(str(path)).parse(scenario="constant")
    assert settings["scenario"] == "constant"
    assert settings["params"] == {"alpha": 0.9}
    assert settings["engine"] == "ode"


def test_feedback_cap_follows_config(monkeypatch):
    monkeypatch.setitem(CONFIG, "omega_max_factor", 10.0)
    assert omega_max(2.0) == pytest.approx(20.0)
    rhs = BlochRhs(scenario_params("ideal"))
    assert rhs.omega(0.0, 0.0) == pytest.approx(10.0 * math.sqrt(2.0))
