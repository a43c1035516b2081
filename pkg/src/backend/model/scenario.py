import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import erf

from src.backend.model.bloch import BlochVector
from src.common.errors import ConfigError, DomainError, ScheduleDivergenceError

logger = logging.getLogger("ScenarioModel")


def _finish(values):
    return float(values) if np.ndim(values) == 0 else values


def _state_form(gain, x, omega_max, law_name):
    """Ω = gain/x, capped at omega_max; x ≤ 0 maps to the cap."""
    x = np.asarray(x, dtype=float)
    if omega_max is None:
        if np.any(x <= 0.0):
            raise ScheduleDivergenceError(
                f"{law_name} feedback diverges at x = 0 (t = 0); apply an Ω_max cap"
            )
        return _finish(gain / x)
    safe = np.where(x > 0.0, x, 1.0)
    raw = np.where(x > 0.0, gain / safe, np.inf)
    return _finish(np.minimum(raw, omega_max))


class FeedbackLaw:
    """
    Base class of the feedback schedules Ω(t, x).

    ``omega`` takes the time, the (averaged) x component, the scenario
    parameters and a cap; ``omega_max=None`` evaluates the law uncapped.
    """

    name = "feedback"
    # Ω depends on the state, so stochastic runs need the averaged path
    state_dependent = False

    def omega(self, t, x, params, omega_max=None):
        raise NotImplementedError

    def singular_at_zero(self, params):
        return False


@dataclass(frozen=True)
class OpenLoop(FeedbackLaw):
    name = "open-loop"

    def omega(self, t, x, params, omega_max=None):
        return _finish(np.zeros_like(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class IdealTimeDependent(FeedbackLaw):
    """Ω = √(2γ)/x, the time-optimal law for perfect detection."""

    name = "ideal"
    state_dependent = True

    def omega(self, t, x, params, omega_max=None):
        return _state_form(math.sqrt(2.0 * params.gamma), x, omega_max, self.name)

    def singular_at_zero(self, params):
        return True


@dataclass(frozen=True)
class Constant(FeedbackLaw):
    alpha: float = 1.0
    name = "constant"

    def omega(self, t, x, params, omega_max=None):
        value = math.sqrt(2.0 * params.gamma) * self.alpha
        return _finish(np.full_like(np.asarray(x, dtype=float), value))


@dataclass(frozen=True)
class Calibrated(FeedbackLaw):
    """Ideal law with a calibration error: Ω = (1+δ)√(2γ)/x."""

    delta: float = 0.0
    name = "calibrated"
    state_dependent = True

    def omega(self, t, x, params, omega_max=None):
        return _state_form((1.0 + self.delta) * math.sqrt(2.0 * params.gamma), x, omega_max, self.name)

    def singular_at_zero(self, params):
        return True


@dataclass(frozen=True)
class EtaOptimal(FeedbackLaw):
    name = "eta-optimal"
    state_dependent = True

    def omega(self, t, x, params, omega_max=None):
        return _state_form(params.eta * math.sqrt(2.0 * params.gamma), x, omega_max, self.name)

    def singular_at_zero(self, params):
        return True


@dataclass(frozen=True)
class DelayOblivious(FeedbackLaw):
    name = "delay-oblivious"

    def omega(self, t, x, params, omega_max=None):
        value = math.sqrt(2.0 * params.gamma)
        return _finish(np.full_like(np.asarray(x, dtype=float), value))


@dataclass(frozen=True)
class DelayAsymptotic(FeedbackLaw):
    """Constant Ω = √(2γ)(1 - 3γτ), the best asymptotic value under delay."""

    name = "delay-asymptotic"

    def omega(self, t, x, params, omega_max=None):
        gamma_tau = params.gamma * params.tau
        if gamma_tau >= 1.0 / 3.0:
            raise DomainError(f"delay-asymptotic feedback needs γτ < 1/3, got {gamma_tau:g}")
        value = math.sqrt(2.0 * params.gamma) * (1.0 - 3.0 * gamma_tau)
        return _finish(np.full_like(np.asarray(x, dtype=float), value))


@dataclass(frozen=True)
class LocalOptimalDelayed(FeedbackLaw):
    """
    Locally optimal strength under delay, the positive root
    Ω⁺ = (-x + √(x² + 12γητ))/(3√(2γ)τ).

    Evaluated in the rationalized form 2√(2γ)η/(x + √(x² + 12γητ)), which is
    finite at x = 0 for τ > 0 and reduces to √(2γ)η/x at τ = 0.
    """

    name = "delay-optimal"
    state_dependent = True

    def omega(self, t, x, params, omega_max=None):
        if params.tau == 0.0:
            return _state_form(params.eta * math.sqrt(2.0 * params.gamma), x, omega_max, self.name)
        x = np.asarray(x, dtype=float)
        root = local_optimal_root(x, params.eta, params.tau, params.gamma)
        if omega_max is not None:
            root = np.minimum(root, omega_max)
        return _finish(root)

    def singular_at_zero(self, params):
        return params.tau == 0.0


@dataclass(frozen=True)
class NoisySystem(FeedbackLaw):
    name = "noisy"
    state_dependent = True

    def omega(self, t, x, params, omega_max=None):
        return _state_form(params.eta * math.sqrt(2.0 * params.gamma), x, omega_max, self.name)

    def singular_at_zero(self, params):
        return True


@dataclass(frozen=True)
class CustomSchedule(FeedbackLaw):
    """
    User supplied Ω(t, x) with a mandatory cap.

    Args:
        schedule (callable): Maps (t, x) to Ω; must return finite values.
        omega_max (float): Positive cap applied to every evaluation.
    """

    schedule: Callable = field(compare=False)
    omega_max: float = 1.0
    name = "custom"
    state_dependent = True

    def __post_init__(self):
        if not self.omega_max > 0.0 or not math.isfinite(self.omega_max):
            raise DomainError(f"CustomSchedule needs a finite Ω_max > 0, got {self.omega_max!r}")

    @classmethod
    def from_table(cls, times, values, omega_max):
        """Piecewise linear schedule in t from tabulated (time, Ω) pairs."""
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.shape != values.shape or times.ndim != 1 or times.size < 2:
            raise DomainError("schedule table needs two equally long 1-d arrays with at least two points")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(times)):
            raise DomainError("schedule table contains non-finite entries")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("schedule table times must be strictly increasing")
        return cls(schedule=lambda t, x: np.interp(t, times, values), omega_max=omega_max)

    def omega(self, t, x, params, omega_max=None):
        value = np.asarray(self.schedule(t, x), dtype=float)
        if not np.all(np.isfinite(value)):
            raise ScheduleDivergenceError(f"custom schedule returned a non-finite value at t={t!r}")
        cap = self.omega_max if omega_max is None else min(self.omega_max, omega_max)
        return _finish(np.minimum(value, cap))


def local_optimal_root(x, eta, tau, gamma=1.0):
    """Rationalized Ω⁺ root; no cap, no domain check."""
    x = np.asarray(x, dtype=float)
    sqrt_2gamma = math.sqrt(2.0 * gamma)
    return _finish(2.0 * sqrt_2gamma * eta / (x + np.sqrt(x * x + 12.0 * gamma * eta * tau)))


class ScenarioParams(BaseModel):
    """
    Physical and imperfection parameters of one scenario.

    Times are in units of 1/γ when gamma keeps its default of 1.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    gamma: float = Field(default=1.0, gt=0)
    eta: float = Field(default=1.0, gt=0, le=1)
    tau: float = Field(default=0.0, ge=0)
    delta: float = Field(default=0.0, ge=-1, le=1)
    alpha: float = 1.0
    gamma_iso: float = Field(default=0.0, ge=0)
    gamma_d: float = Field(default=0.0, ge=0)
    feedback_law: FeedbackLaw = Field(default_factory=IdealTimeDependent)


class BenchmarkConvention(str, Enum):
    """Open-loop benchmark curves: Bloch length erf(√(γt)) or λ_max = ½[1 + erf(√(γt))]."""

    BLOCH_LENGTH = "bloch"
    LAMBDA_MAX = "lambda"

    def value(self, t, gamma=1.0):
        bloch = erf(np.sqrt(gamma * np.asarray(t, dtype=float)))
        if self is BenchmarkConvention.LAMBDA_MAX:
            return _finish(0.5 * (1.0 + bloch))
        return _finish(bloch)


# Scenario name -> law factory; the law picks its parameters from ScenarioParams
_LAWS = {
    "open-loop": lambda p: OpenLoop(),
    "ideal": lambda p: IdealTimeDependent(),
    "constant": lambda p: Constant(alpha=p.alpha),
    "calibrated": lambda p: Calibrated(delta=p.delta),
    "eta-oblivious": lambda p: IdealTimeDependent(),
    "eta-optimal": lambda p: EtaOptimal(),
    "delay-oblivious": lambda p: DelayOblivious(),
    "delay-asymptotic": lambda p: DelayAsymptotic(),
    "delay-optimal": lambda p: LocalOptimalDelayed(),
    "noisy": lambda p: NoisySystem(),
    "measurement-only": lambda p: OpenLoop(),
}

SCENARIO_NAMES = tuple(_LAWS)


def law_for(name, params):
    if name not in _LAWS:
        raise ConfigError(f"Unknown scenario '{name}'. Known scenarios: {', '.join(SCENARIO_NAMES)}")
    return _LAWS[name](params)


def scenario_params(name, params: Optional[ScenarioParams] = None, **values):
    """
    ScenarioParams for a named scenario, with the matching feedback law.

    Args:
        name (str): One of SCENARIO_NAMES.
        params (ScenarioParams, optional): Base parameters.
        **values: Parameter overrides, validated like the constructor.

    Returns:
        ScenarioParams: Parameters whose ``feedback_law`` belongs to ``name``.
    """
    base = params.model_dump(exclude={"feedback_law"}) if params is not None else {}
    base.update(values)
    draft = ScenarioParams(**base)
    return ScenarioParams(**base, feedback_law=law_for(name, draft))


def initial_state(name):
    """Start state of a scenario: the maximally mixed state, except y = ½ for measurement-only."""
    if name == "measurement-only":
        return BlochVector(0.0, 0.5, 0.0)
    return BlochVector()
