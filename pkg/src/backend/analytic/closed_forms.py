"""
Closed-form Bloch curves and feedback schedules.

All functions accept scalars or numpy arrays for the time argument and
return the same shape. Times are in units of 1/γ for the default γ = 1.
"""
import logging
import math

import numpy as np
from scipy.special import erf

from src.backend.model.scenario import local_optimal_root
from src.common.errors import DomainError, ScheduleDivergenceError

logger = logging.getLogger("ClosedForms")

# delay curves are first order in τ; beyond this they are only indicative
DELAY_VALIDITY = 0.2


def _finish(values):
    return float(values) if np.ndim(values) == 0 else values


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("times must be non-negative")
    return t


def _build_up(t, rate):
    """1 - e^{-rate·t} without cancellation at small t."""
    return -np.expm1(-rate * t)


def openloop_lambda(t, gamma=1.0):
    t = _times(t)
    return _finish(0.5 * (1.0 + erf(np.sqrt(gamma * t))))


def openloop_lambda_longtime(t, gamma=1.0):
    """Long-time form 1 - e^{-γt}/(2√(πγt)) of the open-loop verification probability."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("the long-time open-loop form needs t > 0")
    if np.any(gamma * t < 1.0):
        logger.warning("Long-time open-loop approximation used for t < 1/γ, where it is not valid")
    return _finish(1.0 - np.exp(-gamma * t) / (2.0 * np.sqrt(np.pi * gamma * t)))


def openloop_x(t, gamma=1.0):
    t = _times(t)
    return _finish(erf(np.sqrt(gamma * t)))


def ideal_x(t, gamma=1.0):
    t = _times(t)
    return _finish(np.sqrt(_build_up(t, 2.0 * gamma)))


def ideal_omega(t, gamma=1.0):
    """Optimal strength √(2γ)/√(1 - e^{-2γt}); unbounded at t = 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ScheduleDivergenceError("ideal feedback strength diverges at t = 0; apply an Ω_max cap")
    return _finish(math.sqrt(2.0 * gamma) / np.sqrt(_build_up(t, 2.0 * gamma)))


def constant_x(t, alpha, gamma=1.0):
    t = _times(t)
    return _finish(2.0 * alpha / (1.0 + alpha * alpha) * _build_up(t, gamma * (1.0 + alpha * alpha)))


def speedup_ratio(epsilon):
    """Ratio of constant-feedback to optimal-feedback time to reach 1 - ε."""
    if not 0.0 < epsilon < 0.5:
        raise DomainError(f"speedup_ratio needs 0 < ε < 1/2, got {epsilon!r}")
    return math.log(epsilon) / (math.log(epsilon) + math.log(2.0))


def calibrated_x(t, delta, gamma=1.0):
    if abs(delta) > 1.0:
        raise DomainError(f"calibration error needs |δ| ≤ 1, got {delta!r}")
    t = _times(t)
    return _finish(np.sqrt(_build_up(t, 2.0 * gamma) * (1.0 - delta * delta)))


def eta_oblivious_fails(eta):
    """The η-oblivious protocol prepares nothing for η ≤ ½."""
    return eta <= 0.5


def eta_oblivious_x(t, eta, gamma=1.0, warn=True):
    _check_eta(eta)
    t = _times(t)
    if eta_oblivious_fails(eta):
        if warn:
            logger.warning(f"η-oblivious feedback fails for η = {eta:g} ≤ 1/2; returning zero")
        return _finish(np.zeros_like(t))
    return _finish(math.sqrt((2.0 * eta - 1.0) / eta) * np.sqrt(_build_up(t, 2.0 * gamma)))


def eta_optimal_x(t, eta, gamma=1.0):
    _check_eta(eta)
    t = _times(t)
    return _finish(math.sqrt(eta) * np.sqrt(_build_up(t, 2.0 * gamma)))


def delay_oblivious_x(t, tau, gamma=1.0, warn=True):
    _check_delay(tau, gamma, warn)
    t = _times(t)
    return _finish(_build_up(t, 2.0 * gamma) * (1.0 - gamma * tau))


def delay_omega_opt(x, eta, tau, gamma=1.0):
    """
    Locally optimal feedback strength under a delay.

    Args:
        x (float): Current x component, > 0.
        eta (float): Detection efficiency.
        tau (float): Delay, ≥ 0.
        gamma (float): Measurement rate.

    Returns:
        tuple: (exact Ω⁺ root, first-order expansion √(2γ)η/x - 3√(2γ)η²γτ/x³).
    """
    if x <= 0.0:
        raise ScheduleDivergenceError("delay-optimal feedback diverges at x = 0; apply an Ω_max cap")
    if tau < 0.0:
        raise DomainError(f"delay must be non-negative, got {tau!r}")
    _check_eta(eta)
    sqrt_2gamma = math.sqrt(2.0 * gamma)
    exact = local_optimal_root(x, eta, tau, gamma)
    expansion = sqrt_2gamma * eta / x - 3.0 * sqrt_2gamma * eta * eta * gamma * tau / x**3
    return exact, expansion


def delay_asymptotic_x(t, tau, gamma=1.0, warn=True):
    """Constant feedback √(2γ)(1 - 3γτ) in the printed closed form (no delay correction term)."""
    gamma_tau = gamma * tau
    if gamma_tau >= 1.0 / 3.0:
        raise DomainError(f"delay-asymptotic curve needs γτ < 1/3, got {gamma_tau:g}")
    _check_delay(tau, gamma, warn)
    t = _times(t)
    coefficient = 2.0 * (1.0 - 3.0 * gamma_tau) / (2.0 * (1.0 - 3.0 * gamma_tau) + 9.0 * gamma_tau**2)
    rate = gamma * (2.0 - 6.0 * gamma_tau + 9.0 * gamma_tau**2)
    return _finish(coefficient * _build_up(t, rate))


def delay_constant_x(t, tau, alpha, gamma=1.0, warn=True):
    """
    Constant feedback √(2γ)α under a delay, including the -√(2γ)Ω³τ/2 term.

    α = 1 gives the delay-oblivious curve; α = 1 - 3γτ the delay-asymptotic
    strategy with its delay correction kept.
    """
    _check_delay(tau, gamma, warn)
    t = _times(t)
    alpha_sq = alpha * alpha
    coefficient = (2.0 * alpha - 2.0 * gamma * tau * alpha**3) / (1.0 + alpha_sq)
    return _finish(coefficient * _build_up(t, gamma * (1.0 + alpha_sq)))


def noisy_system_x(t, eta, gamma_iso, gamma_d, gamma=1.0):
    _check_eta(eta)
    if gamma_iso < 0.0 or gamma_d < 0.0:
        raise DomainError("dephasing and damping rates must be non-negative")
    t = _times(t)
    total = 2.0 * gamma + 8.0 * gamma_iso + gamma_d
    return _finish(math.sqrt(2.0 * gamma * eta / total) * np.sqrt(_build_up(t, total)))


def measurement_only_y(t, y0, gamma=1.0):
    t = _times(t)
    return _finish(y0 * np.exp(-gamma * t))


def _check_eta(eta):
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"efficiency needs 0 < η ≤ 1, got {eta!r}")


def _check_delay(tau, gamma, warn):
    if tau < 0.0:
        raise DomainError(f"delay must be non-negative, got {tau!r}")
    if warn and gamma * tau > DELAY_VALIDITY:
        logger.warning(f"γτ = {gamma * tau:g} exceeds {DELAY_VALIDITY}; first-order delay curves are unreliable here")
