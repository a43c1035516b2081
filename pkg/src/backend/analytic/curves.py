import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from src.backend.analytic import closed_forms as cf
from src.backend.model.scenario import BenchmarkConvention, ScenarioParams, initial_state, scenario_params
from src.common.errors import ConfigError

logger = logging.getLogger("Curves")


@dataclass(frozen=True)
class Curve:
    """
    A closed-form curve of one scenario.

    Args:
        scenario (str): Scenario tag.
        params (ScenarioParams): Parameters the curve was built from.
        evaluator (callable): t ↦ value, vectorized over numpy arrays.
        component (str): "x", "y" or "lambda" (verification probability).
        steady_state (float): Limit of the curve for t → ∞.
        failed (bool): Protocol failure flag (η-oblivious feedback with η ≤ ½).
    """

    scenario: str
    params: ScenarioParams
    evaluator: Callable = field(compare=False, repr=False)
    component: str = "x"
    steady_state: float = 1.0
    failed: bool = False

    def __call__(self, t):
        return self.evaluator(t)

    def values(self, times):
        return np.asarray(self.evaluator(np.asarray(times, dtype=float)), dtype=float)


def steady_state(curve):
    return curve.steady_state


def scenario_curve(name, params=None):
    """
    Closed-form curve of a named scenario.

    Args:
        name (str): Scenario name, see SCENARIO_NAMES.
        params (ScenarioParams, optional): Parameters; defaults to γ = 1 and no imperfection.

    Returns:
        Curve: Evaluator plus steady state.
    """
    params = scenario_params(name, params)
    g = params.gamma

    if name == "open-loop":
        return Curve(name, params, partial(cf.openloop_lambda, gamma=g), "lambda", 1.0)
    if name == "ideal":
        return Curve(name, params, partial(cf.ideal_x, gamma=g), "x", 1.0)
    if name == "constant":
        a = params.alpha
        return Curve(name, params, partial(cf.constant_x, alpha=a, gamma=g), "x", 2.0 * a / (1.0 + a * a))
    if name == "calibrated":
        d = params.delta
        return Curve(name, params, partial(cf.calibrated_x, delta=d, gamma=g), "x", float(np.sqrt(1.0 - d * d)))
    if name == "eta-oblivious":
        eta = params.eta
        failed = cf.eta_oblivious_fails(eta)
        if failed:
            logger.warning(f"η-oblivious feedback fails for η = {eta:g}; curve is identically zero")
        ss = 0.0 if failed else float(np.sqrt((2.0 * eta - 1.0) / eta))
        evaluator = partial(cf.eta_oblivious_x, eta=eta, gamma=g, warn=False)
        return Curve(name, params, evaluator, "x", ss, failed=failed)
    if name == "eta-optimal":
        eta = params.eta
        return Curve(name, params, partial(cf.eta_optimal_x, eta=eta, gamma=g), "x", float(np.sqrt(eta)))
    if name == "delay-oblivious":
        tau = params.tau
        cf.delay_oblivious_x(0.0, tau, gamma=g)
        evaluator = partial(cf.delay_oblivious_x, tau=tau, gamma=g, warn=False)
        return Curve(name, params, evaluator, "x", 1.0 - g * tau)
    if name == "delay-asymptotic":
        tau = params.tau
        cf.delay_asymptotic_x(0.0, tau, gamma=g)
        evaluator = partial(cf.delay_asymptotic_x, tau=tau, gamma=g, warn=False)
        alpha = 1.0 - 3.0 * g * tau
        return Curve(name, params, evaluator, "x", 2.0 * alpha / (1.0 + alpha * alpha))
    if name == "noisy":
        total = 2.0 * g + 8.0 * params.gamma_iso + params.gamma_d
        evaluator = partial(
            cf.noisy_system_x, eta=params.eta, gamma_iso=params.gamma_iso, gamma_d=params.gamma_d, gamma=g
        )
        return Curve(name, params, evaluator, "x", float(np.sqrt(2.0 * g * params.eta / total)))
    if name == "measurement-only":
        y0 = initial_state(name).y
        return Curve(name, params, partial(cf.measurement_only_y, y0=y0, gamma=g), "y", 0.0)
    raise ConfigError(f"Scenario '{name}' has no closed form; use the ode or sme engine")


def benchmark_curve(convention, gamma=1.0):
    """Open-loop benchmark as a Curve, in the Bloch-length or λ_max convention."""
    convention = BenchmarkConvention(convention)
    params = scenario_params("open-loop", gamma=gamma)
    if convention is BenchmarkConvention.LAMBDA_MAX:
        return Curve("open-loop", params, partial(cf.openloop_lambda, gamma=gamma), "lambda", 1.0)
    return Curve("open-loop", params, partial(cf.openloop_x, gamma=gamma), "x", 1.0)


def delay_constant_curve(params, alpha):
    """Constant feedback √(2γ)α with the delay correction, used as the ODE reference for delay laws."""
    g, tau = params.gamma, params.tau
    evaluator = partial(cf.delay_constant_x, tau=tau, alpha=alpha, gamma=g, warn=False)
    ss = (2.0 * alpha - 2.0 * g * tau * alpha**3) / (1.0 + alpha * alpha)
    return Curve("delay-constant", params, evaluator, "x", ss)
