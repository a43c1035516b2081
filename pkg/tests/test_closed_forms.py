import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.backend.analytic import closed_forms as cf
from src.backend.analytic.curves import (
    benchmark_curve,
    delay_constant_curve,
    scenario_curve,
    steady_state,
)
from src.backend.model.scenario import SCENARIO_NAMES, scenario_params
from src.common.errors import ConfigError, DomainError, ScheduleDivergenceError

# erf(0.1), erf(0.2), ..., erf(2.0) to ten decimals
ERF_TABLE = [
    0.1124629160, 0.2227025892, 0.3286267595, 0.4283923550, 0.5204998778,
    0.6038560908, 0.6778011938, 0.7421009647, 0.7969082124, 0.8427007929,
    0.8802050696, 0.9103139782, 0.9340079449, 0.9522851198, 0.9661051465,
    0.9763483833, 0.9837904586, 0.9890905016, 0.9927904292, 0.9953222650,
]

times = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)


def test_erf_table():
    arguments = 0.1 * np.arange(1, 21)
    assert cf.openloop_x(arguments**2) == pytest.approx(ERF_TABLE, abs=1e-10)
    for a in arguments:
        assert cf.openloop_x(a * a) == pytest.approx(math.erf(a), abs=1e-14)


def test_openloop_examples():
    assert cf.openloop_lambda(0.0) == 0.5
    assert cf.openloop_lambda(1.0) == pytest.approx(0.921350, abs=1e-6)
    assert cf.openloop_lambda(np.array([0.0, 1.0])).shape == (2,)


def test_openloop_longtime_form(caplog):
    assert cf.openloop_lambda_longtime(10.0) == pytest.approx(cf.openloop_lambda(10.0), abs=1e-6)
    with caplog.at_level(logging.WARNING):
        cf.openloop_lambda_longtime(0.5)
    assert "not valid" in caplog.text
    with pytest.raises(DomainError):
        cf.openloop_lambda_longtime(0.0)


def test_negative_time():
    with pytest.raises(DomainError):
        cf.ideal_x(-1.0)


def test_ideal_examples():
    assert cf.ideal_x(0.0) == 0.0
    assert cf.ideal_x(1.0) == pytest.approx(math.sqrt(1.0 - math.exp(-2.0)), rel=1e-15)
    assert cf.ideal_x(1e-12) == pytest.approx(math.sqrt(2e-12), rel=1e-6)
    assert cf.ideal_omega(1.0) == pytest.approx(math.sqrt(2.0) / cf.ideal_x(1.0))
    with pytest.raises(ScheduleDivergenceError):
        cf.ideal_omega(0.0)


@pytest.mark.parametrize("alpha, t, expected", [(1.0, 1.0, 1.0 - math.exp(-2.0)), (1.0, 5.0, 1.0 - math.exp(-10.0))])
def test_constant_examples(alpha, t, expected):
    assert cf.constant_x(t, alpha) == pytest.approx(expected, rel=1e-14)


def test_constant_steady_state():
    assert cf.constant_x(200.0, 3.0) == pytest.approx(0.6)
    assert steady_state(scenario_curve("constant", scenario_params("constant", alpha=3.0))) == pytest.approx(0.6)


def test_speedup_ratio():
    assert cf.speedup_ratio(0.25) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(DomainError):
        cf.speedup_ratio(0.5)


def test_calibrated_example():
    assert cf.calibrated_x(50.0, 0.25) == pytest.approx(math.sqrt(1.0 - 0.0625))
    with pytest.raises(DomainError):
        cf.calibrated_x(1.0, 1.5)


def test_eta_oblivious_failure(caplog):
    with caplog.at_level(logging.WARNING):
        values = cf.eta_oblivious_x(np.array([1.0, 2.0]), 0.5)
    assert np.all(values == 0.0)
    assert "fails" in caplog.text
    assert cf.eta_oblivious_fails(0.5)
    assert not cf.eta_oblivious_fails(0.51)
    curve = scenario_curve("eta-oblivious", scenario_params("eta-oblivious", eta=0.4))
    assert curve.failed and curve.steady_state == 0.0


def test_eta_optimal_beats_oblivious():
    t = np.linspace(0.1, 5.0, 20)
    assert np.all(cf.eta_optimal_x(t, 0.8) > cf.eta_oblivious_x(t, 0.8))


def test_delay_omega_opt_expansion():
    exact, expansion = cf.delay_omega_opt(1.0, 1.0, 0.01)
    assert abs(exact - expansion) < 2e-3 * math.sqrt(2.0)
    # the gap is second order in τ
    for tau in (0.01, 0.005, 0.0025):
        exact, expansion = cf.delay_omega_opt(1.0, 1.0, tau)
        assert 0.0 < (exact - expansion) / tau**2 < 20.0 * math.sqrt(2.0)
    with pytest.raises(ScheduleDivergenceError):
        cf.delay_omega_opt(0.0, 1.0, 0.01)


def test_delay_omega_opt_without_delay():
    exact, expansion = cf.delay_omega_opt(0.5, 0.9, 0.0)
    assert exact == pytest.approx(math.sqrt(2.0) * 0.9 / 0.5)
    assert expansion == pytest.approx(exact)


def test_delay_curves():
    assert cf.delay_oblivious_x(100.0, 0.05) == pytest.approx(0.95)
    with pytest.raises(DomainError):
        cf.delay_asymptotic_x(1.0, 0.34)
    # α = 1 in the delay-corrected constant solution is the delay-oblivious curve
    t = np.linspace(0.0, 5.0, 11)
    assert cf.delay_constant_x(t, 0.05, 1.0) == pytest.approx(cf.delay_oblivious_x(t, 0.05), abs=1e-15)


def test_delay_validity_warning(caplog):
    with caplog.at_level(logging.WARNING):
        cf.delay_oblivious_x(1.0, 0.25)
    assert "unreliable" in caplog.text


def test_delay_asymptotic_deficit_is_second_order():
    for tau in (1e-2, 1e-3):
        deficit = 1.0 - cf.delay_asymptotic_x(1e3, tau, warn=False)
        assert deficit / tau**2 < 10.0


def test_noisy_system():
    assert cf.noisy_system_x(100.0, 0.9, 0.05, 0.1) == pytest.approx(math.sqrt(2.0 * 0.9 / 2.5))
    with pytest.raises(DomainError):
        cf.noisy_system_x(1.0, 0.9, -0.1, 0.0)


def test_measurement_only():
    assert cf.measurement_only_y(1.0, 0.5) == pytest.approx(0.5 * math.exp(-1.0))


@settings(max_examples=100)
@given(times)
def test_reduction_web(t):
    ideal = cf.ideal_x(t)
    constant = cf.constant_x(t, 1.0)
    assert abs(cf.calibrated_x(t, 0.0) - ideal) < 1e-12
    assert abs(cf.eta_optimal_x(t, 1.0) - ideal) < 1e-12
    assert abs(cf.eta_oblivious_x(t, 1.0) - ideal) < 1e-12
    assert abs(cf.noisy_system_x(t, 1.0, 0.0, 0.0) - ideal) < 1e-12
    assert abs(cf.delay_oblivious_x(t, 0.0) - constant) < 1e-12
    assert abs(cf.delay_asymptotic_x(t, 0.0) - constant) < 1e-12
    assert abs(cf.delay_constant_x(t, 0.0, 1.0) - constant) < 1e-12


@settings(max_examples=50)
@given(times, st.floats(min_value=0.3, max_value=3.0))
def test_constant_never_exceeds_steady_state(t, alpha):
    assert cf.constant_x(t, alpha) <= 2.0 * alpha / (1.0 + alpha * alpha) + 1e-15


@pytest.mark.parametrize("name", [n for n in SCENARIO_NAMES if n != "delay-optimal"])
def test_scenario_curves_start_at_initial_value(name):
    curve = scenario_curve(name)
    start = curve(0.0)
    if curve.component == "lambda":
        assert start == 0.5
    elif curve.component == "y":
        assert start == 0.5
    else:
        assert start == 0.0


def test_delay_optimal_has_no_closed_form():
    with pytest.raises(ConfigError):
        scenario_curve("delay-optimal")


def test_benchmark_curve():
    assert benchmark_curve("lambda")(1.0) == pytest.approx(0.921350, abs=1e-6)
    assert benchmark_curve("bloch").component == "x"


def test_delay_constant_curve_steady_state():
    params = scenario_params("delay-asymptotic", tau=0.05)
    alpha = 0.85
    curve = delay_constant_curve(params, alpha)
    assert curve(1e3) == pytest.approx(curve.steady_state)


rates = st.floats(min_value=0.5, max_value=2.0)
rising_scenarios = {
    "open-loop": st.fixed_dictionaries({}),
    "ideal": st.fixed_dictionaries({}),
    "constant": st.fixed_dictionaries({"alpha": st.floats(min_value=0.05, max_value=5.0)}),
    "calibrated": st.fixed_dictionaries({"delta": st.floats(min_value=-0.95, max_value=0.95)}),
    "eta-oblivious": st.fixed_dictionaries({"eta": st.floats(min_value=0.05, max_value=1.0)}),
    "eta-optimal": st.fixed_dictionaries({"eta": st.floats(min_value=0.05, max_value=1.0)}),
    "delay-oblivious": st.fixed_dictionaries({"gamma_tau": st.floats(min_value=0.0, max_value=0.3)}),
    "delay-asymptotic": st.fixed_dictionaries({"gamma_tau": st.floats(min_value=0.0, max_value=0.3)}),
    "noisy": st.fixed_dictionaries(
        {
            "eta": st.floats(min_value=0.05, max_value=1.0),
            "gamma_iso": st.floats(min_value=0.0, max_value=1.0),
            "gamma_d": st.floats(min_value=0.0, max_value=1.0),
        }
    ),
}


@settings(max_examples=200)
@given(st.sampled_from(sorted(rising_scenarios)), rates, st.data())
def test_scenario_curves_stay_bounded_and_rise(name, gamma, data):
    values = data.draw(rising_scenarios[name])
    if "gamma_tau" in values:
        values = {"tau": values.pop("gamma_tau") / gamma}
    curve = scenario_curve(name, scenario_params(name, gamma=gamma, **values))
    grid = np.linspace(0.0, 10.0, 401)
    path = curve.values(grid)
    assert np.all(np.abs(path) <= 1.0 + 1e-12)
    assert np.all(np.diff(path) >= -1e-12)
    assert abs(path[-1]) <= abs(curve.steady_state) + 1e-12


@settings(max_examples=50)
@given(rates, times)
def test_measurement_only_curve_decays(gamma, t):
    curve = scenario_curve("measurement-only", scenario_params("measurement-only", gamma=gamma))
    assert 0.0 <= curve(t + 0.1) <= curve(t) <= 0.5
