import logging
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import bisect, minimize_scalar

from src.backend.analysis.reference_values import IMPERFECTIONS, REFERENCE_POINTS
from src.backend.analytic import closed_forms as cf
from src.backend.model.scenario import BenchmarkConvention
from src.common.config import CONFIG
from src.common.errors import DomainError, RspError

logger = logging.getLogger("Tables")

ALPHA_BOUNDS = (0.01, 50.0)
EDGE = 1e-12


@dataclass(frozen=True)
class ReferencePoint:
    """Fixed time t* (kind "time") or fixed Bloch length x* (kind "length")."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "time" and not self.value > 0.0:
            raise DomainError(f"reference time must be > 0, got {self.value}")
        if self.kind == "length" and not 0.0 < self.value < 1.0:
            raise DomainError(f"reference length must lie in (0, 1), got {self.value}")
        if self.kind not in ("time", "length"):
            raise DomainError(f"unknown reference kind '{self.kind}'")


@dataclass(frozen=True)
class TableRow:
    """
    Parameter interval in which a feedback protocol beats the open loop.

    ``lo``/``hi`` are None for an empty interval; one-sided intervals use the
    natural bound of the parameter domain on the other side.
    """

    kind: str
    reference: ReferencePoint
    lo: Optional[float]
    hi: Optional[float]
    benchmark: BenchmarkConvention
    table: Optional[int] = None
    range_label: Optional[str] = None

    def __post_init__(self):
        if (self.lo is None) != (self.hi is None):
            raise RspError("a table row is either empty or has both bounds")
        if self.lo is not None and self.lo > self.hi:
            raise RspError(f"table row bounds out of order: {self.lo} > {self.hi}")

    @property
    def empty(self):
        return self.lo is None


def _feedback_value(kind, parameter, t, gamma):
    if kind == "alpha":
        return cf.constant_x(t, parameter, gamma)
    if kind == "delta":
        return cf.calibrated_x(t, parameter, gamma)
    if kind == "eta_oblivious":
        return cf.eta_oblivious_x(t, parameter, gamma, warn=False)
    if kind == "eta_optimal":
        return cf.eta_optimal_x(t, parameter, gamma)
    if kind == "tau_oblivious":
        return cf.delay_oblivious_x(t, parameter, gamma, warn=False)
    if kind == "tau_optimal":
        return cf.delay_asymptotic_x(t, parameter, gamma, warn=False)
    raise DomainError(f"unknown imperfection '{kind}'")


# one-sided domains: (lower end, upper end, True if the curve rises with the parameter)
_ONE_SIDED = {
    "delta": (0.0, 1.0, False),
    "eta_oblivious": (0.5, 1.0, True),
    "eta_optimal": (EDGE, 1.0, True),
    "tau_oblivious": (0.0, 1.0, False),
    "tau_optimal": (0.0, 1.0 / 3.0 - EDGE, False),
}


def comparison_point(reference, benchmark, gamma=1.0):
    """(time, target): compare feedback at ``time`` with ``target``."""
    benchmark = BenchmarkConvention(benchmark)
    if reference.kind == "time":
        return reference.value, float(benchmark.value(reference.value, gamma))

    def gap(t):
        return float(benchmark.value(t, gamma)) - reference.value

    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
    return bisect(gap, 0.0, hi, xtol=1e-12), reference.value


def parameter_range(kind, reference, benchmark, gamma=1.0):
    """
    Interval of an imperfection parameter for which feedback reaches the open-loop benchmark.

    Table 1 style (fixed time t*): feedback(t*) ≥ B(t*). Table 2 style
    (fixed length x*): feedback(t_B) ≥ x*, where B(t_B) = x*.

    Returns:
        TableRow: Bounds found by bisection; an empty row when no parameter qualifies.
    """
    benchmark = BenchmarkConvention(benchmark)
    t_ref, target = comparison_point(reference, benchmark, gamma)
    xtol = CONFIG["root_param_tol"]

    def margin(parameter):
        return float(_feedback_value(kind, parameter, t_ref, gamma)) - target

    if kind == "alpha":
        low_end, high_end = ALPHA_BOUNDS
        peak = minimize_scalar(lambda a: -margin(a), bounds=ALPHA_BOUNDS, method="bounded").x
        if margin(peak) < 0.0:
            return TableRow(kind, reference, None, None, benchmark)
        lo = bisect(margin, low_end, peak, xtol=xtol)
        hi = bisect(margin, peak, high_end, xtol=xtol)
        return TableRow(kind, reference, lo, hi, benchmark)

    if kind not in _ONE_SIDED:
        raise DomainError(f"unknown imperfection '{kind}'")
    low_end, high_end, rising = _ONE_SIDED[kind]
    good_end, bad_end = (high_end, low_end) if rising else (low_end, high_end)
    if margin(good_end) < 0.0:
        return TableRow(kind, reference, None, None, benchmark)
    if margin(bad_end) >= 0.0:
        return TableRow(kind, reference, low_end, high_end, benchmark)
    root = bisect(margin, low_end, high_end, xtol=xtol)
    if rising:
        return TableRow(kind, reference, root, high_end, benchmark)
    return TableRow(kind, reference, low_end, root, benchmark)


def reproduce_tables(benchmark=BenchmarkConvention.LAMBDA_MAX, gamma=1.0, which=(1, 2)):
    """All rows of the threshold tables, ranges A and B, in table order."""
    rows = []
    for table in which:
        for range_label in ("A", "B"):
            value = REFERENCE_POINTS[(table, range_label)]
            reference = ReferencePoint("time" if table == 1 else "length", value)
            for kind in IMPERFECTIONS:
                row = parameter_range(kind, reference, benchmark, gamma)
                rows.append(
                    TableRow(row.kind, row.reference, row.lo, row.hi, row.benchmark, table, range_label)
                )
    logger.info(f"Computed {len(rows)} table rows under the '{BenchmarkConvention(benchmark).value}' convention")
    return rows
