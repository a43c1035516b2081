"""
Open-loop oracle without SDE stepping.

Records R(t) are drawn from the ostensible Gaussian N(0, t); the linear
(unnormalized) state of the measured qubit is known in closed form, and its
trace 𝒩(R) = e^{-γt}cosh(√(2γ)R) reweights each draw to the physical measure.
"""
import logging
import math

import numpy as np

from src.backend.engines.results import EnsembleSummary, RunningMoments
from src.backend.model.bloch import DensityOperator
from src.common.errors import DomainError

logger = logging.getLogger("LinearTrajectory")


def linear_qubit_state(t, record, gamma=1.0):
    """Unnormalized state after measuring J_z from I/2 for time t with integrated record R."""
    exponent = math.sqrt(2.0 * gamma) * record
    decay = math.exp(-gamma * t)
    return DensityOperator(
        rho00=0.5 * decay * math.exp(exponent),
        rho11=0.5 * decay * math.exp(-exponent),
        normalized=False,
    )


def _weighted_lambda(t, records, gamma):
    """Weights 𝒩(R) and weighted λ_max of the normalized state, vectorized over records."""
    a = math.sqrt(2.0 * gamma) * np.abs(records)
    weights = np.exp(-gamma * t) * np.cosh(a)
    # 𝒩·λ_max = e^{-γt}·e^{|a|}/2
    weighted = 0.5 * np.exp(a - gamma * t)
    return weights, weighted


def linear_trajectory_sample(t, n, seed=0, gamma=1.0):
    """
    Importance-sampled estimate of the open-loop ⟨λ_max(t)⟩.

    Args:
        t (float or sequence): Time(s) > 0.
        n (int): Number of ostensible draws per time.
        seed (int): Seed of the single generator used for all times.
        gamma (float): Measurement rate.

    Returns:
        EnsembleSummary: mean ± stderr per time; ``extras`` holds
        "weight_mean" and "weight_stderr" (probability conservation check).
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times <= 0.0):
        raise DomainError("linear-trajectory sampling needs t > 0")
    if n < 2:
        raise DomainError(f"linear-trajectory sampling needs n ≥ 2, got {n}")

    rng = np.random.default_rng(seed)
    means, errors, weight_means, weight_errors = [], [], [], []
    for time in times:
        records = rng.standard_normal(n) * math.sqrt(time)
        weights, weighted = _weighted_lambda(time, records, gamma)
        estimate = RunningMoments.from_values(weighted.reshape(-1, 1))
        weight = RunningMoments.from_values(weights.reshape(-1, 1))
        means.append(estimate.mean()[0])
        errors.append(estimate.stderr()[0])
        weight_means.append(weight.mean()[0])
        weight_errors.append(weight.stderr()[0])

    logger.info(f"Linear-trajectory sample: {n} draws at {times.size} time(s)")
    return EnsembleSummary(
        times=times,
        mean=np.array(means),
        stderr=np.array(errors),
        n=n,
        scenario="open-loop",
        component="lambda",
        extras={"weight_mean": np.array(weight_means), "weight_stderr": np.array(weight_errors)},
    )
