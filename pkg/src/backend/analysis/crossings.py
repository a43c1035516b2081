import logging
import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from scipy.optimize import bisect

from src.backend.analytic.curves import Curve, scenario_curve
from src.backend.model.scenario import BenchmarkConvention
from src.common.config import CONFIG
from src.common.errors import BracketError, DomainError, UnreachableTargetError

logger = logging.getLogger("Crossings")

TIME_TO_VALUE_TOL = 1e-6
MAX_TIME = 1e6


@dataclass(frozen=True)
class CrossingQuery:
    """
    Crossing of a feedback curve with a reference inside a time bracket.

    Args:
        feedback (Curve): Curve whose crossing is wanted.
        benchmark (BenchmarkConvention or Curve): Open-loop convention or
            another curve to compare against.
        bracket (tuple): (t_lo, t_hi) with a sign change of feedback - reference.
        tolerance (float): Root tolerance in time.
    """

    feedback: Curve
    benchmark: Union[BenchmarkConvention, Curve]
    bracket: Tuple[float, float]
    tolerance: float = field(default_factory=lambda: CONFIG["root_time_tol"])

    def reference(self, t):
        if isinstance(self.benchmark, Curve):
            return self.benchmark(t)
        return BenchmarkConvention(self.benchmark).value(t, self.feedback.params.gamma)

    def difference(self, t):
        return float(self.feedback(t) - self.reference(t))


def crossing_time(query):
    lo, hi = query.bracket
    if not 0.0 <= lo < hi:
        raise BracketError(f"invalid bracket {query.bracket}")
    f_lo, f_hi = query.difference(lo), query.difference(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(
            f"no sign change of {query.feedback.scenario} minus reference in [{lo}, {hi}] "
            f"({f_lo:.3g}, {f_hi:.3g})"
        )
    root = bisect(query.difference, lo, hi, xtol=query.tolerance)
    logger.info(f"Crossing of '{query.feedback.scenario}' at t = {root:.4f}")
    return root


def time_to_value(curve, target, tolerance=TIME_TO_VALUE_TOL):
    """
    Time at which a monotone curve reaches ``target``.

    Decreasing curves (steady state below the start value) are searched
    from above, so the measurement-only decay or a negative constant
    strength work like the rising curves.

    Raises:
        UnreachableTargetError: target at or beyond the steady state.
    """
    start = float(curve(0.0))
    # +1 for rising curves, -1 for decaying ones
    direction = 1.0 if curve.steady_state >= start else -1.0
    if direction * target >= direction * curve.steady_state:
        raise UnreachableTargetError(
            f"target {target} is not between the start {start:.6g} and the steady state "
            f"{curve.steady_state:.6g} of '{curve.scenario}'"
        )
    if direction * target <= direction * start:
        return 0.0

    def gap(t):
        return direction * (float(curve(t)) - target)

    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > MAX_TIME:
            raise UnreachableTargetError(f"'{curve.scenario}' does not reach {target} before t = {MAX_TIME:g}")
    return bisect(gap, 0.0, hi, xtol=tolerance)


def _openloop_deficit_time(epsilon):
    """Solve t + ½ln(πt) + ln ε = 0 (long-time open loop reaches 1 - ε)."""
    log_eps = math.log(epsilon)

    def g(t):
        return t + 0.5 * math.log(math.pi * t) + log_eps

    return bisect(g, 1e-3, -log_eps + 10.0, xtol=1e-12)


def _optimal_deficit_time(epsilon):
    """Solve √(1 - e^{-2t}) = 1 - ε exactly, in log form."""
    return -0.5 * (math.log(epsilon) + math.log(2.0 - epsilon))


def asymptotic_speedup(epsilons):
    """
    Time ratio open loop / ideal feedback to reach Bloch length 1 - ε.

    The open loop uses its long-time form e^{-t}/√(πt) = ε. Deficits are
    handled through ln ε, so ε below machine precision relative to 1 works.
    """
    ratios = []
    for epsilon in epsilons:
        if not 0.0 < epsilon <= 1e-2:
            raise DomainError(f"asymptotic_speedup needs 0 < ε ≤ 1e-2, got {epsilon!r}")
        ratios.append(_openloop_deficit_time(epsilon) / _optimal_deficit_time(epsilon))
    return np.array(ratios)


def crossing_between(name_a, params_a, benchmark, bracket, tolerance=None):
    """Shorthand: crossing of a named scenario curve with a convention or another curve."""
    query = CrossingQuery(
        feedback=scenario_curve(name_a, params_a),
        benchmark=benchmark,
        bracket=tuple(bracket),
        tolerance=tolerance if tolerance is not None else CONFIG["root_time_tol"],
    )
    return crossing_time(query)
