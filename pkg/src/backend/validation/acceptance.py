"""
Acceptance suite run by ``main.py validate``.

The quick level covers the deterministic checks (closed forms against the
ODE engine, crossings, tables, speed-up, reductions) and the linear-trajectory
oracle; the full level adds the stochastic-master-equation ensembles and
the determinism check.
"""
import logging
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.backend.analysis.crossings import asymptotic_speedup
from src.backend.analysis.imperfection_analyzer import ImperfectionAnalyzer
from src.backend.analysis.reference_values import IMPERFECTIONS, entry_tolerance, published_bounds
from src.backend.analytic import closed_forms as cf
from src.backend.analytic.curves import delay_constant_curve, scenario_curve
from src.backend.engines.linear_trajectory import linear_trajectory_sample
from src.backend.engines.ode import BlochRhs, integrate_ode
from src.backend.engines.sme import ensemble_mean
from src.backend.model.scenario import BenchmarkConvention, initial_state, scenario_params
from src.common.data_repository import write_csv
from src.common.errors import RspError

logger = logging.getLogger("Acceptance")

GROUPS = ("ode", "linear", "crossings", "tables", "speedup", "reductions", "sme", "delay", "determinism")
QUICK_GROUPS = GROUPS[:6]

ODE_TOL = 1e-6
ODE_POINTS = 100
ODE_T_END = 5.0
ODE_CAP_FACTOR = 1e5
ODE_DT = {"quick": 1e-3, "full": 1e-4}

# scenario -> parameters of the closed-form/ODE comparison
ODE_SCENARIOS = {
    "ideal": {},
    "constant": {"alpha": 1.0},
    "calibrated": {"delta": 0.25},
    "eta-oblivious": {"eta": 0.75},
    "eta-optimal": {"eta": 0.85},
    "delay-oblivious": {"tau": 0.05},
    "delay-asymptotic": {"tau": 0.05},
    "noisy": {"eta": 0.9, "gamma_iso": 0.05, "gamma_d": 0.1},
    "measurement-only": {},
}

CROSSING_TARGETS = {
    "constant alpha=1 vs open loop": (0.768, 0.002),
    "calibrated delta=0.25 vs open loop": (2.15, 0.01),
    "constant alpha=0.9 vs open loop (upper)": (3.65, 0.05),
    "calibrated delta=0.05 vs constant alpha=1": (2.996, 0.001),
}

SME_TIMES = (0.5, 1.0, 2.0)
DELAY_TIMES = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class Criterion:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""


class AcceptanceReport:
    def __init__(self, level, criteria):
        self.level = level
        self.criteria = list(criteria)

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def failures(self):
        return [c for c in self.criteria if not c.passed]

    def to_frame(self):
        return pd.DataFrame(
            {
                "criterion": [c.name for c in self.criteria],
                "measured": [c.measured for c in self.criteria],
                "tolerance": [c.tolerance for c in self.criteria],
                "passed": [c.passed for c in self.criteria],
                "detail": [c.detail for c in self.criteria],
            }
        )

    def format(self):
        lines = [f"Validation ({self.level})"]
        for c in self.criteria:
            status = "PASS" if c.passed else "FAIL"
            text = f"{status}  {c.name:<52} measured={c.measured:<14.6g} tol={c.tolerance:.3g}"
            if c.detail:
                text += f"  {c.detail}"
            lines.append(text)
        verdict = "all criteria passed" if self.passed else f"{len(self.failures())} criteria failed"
        lines.append(verdict)
        return "\n".join(lines)


def _check(name, measured, tolerance, passed=None):
    passed = measured <= tolerance if passed is None else passed
    return Criterion(name, float(measured), float(tolerance), bool(passed), "" if passed else f"{name} mismatch")


def _guarded(name, tolerance, compute):
    """Run one criterion; library errors turn into a failed criterion."""
    try:
        return compute()
    except RspError as exc:
        logger.error(f"{name}: {exc}")
        return Criterion(name, float("nan"), tolerance, False, f"{name} mismatch ({exc})")


def ode_reference(name, params):
    """Closed form the ODE engine must reproduce for a scenario."""
    if name == "delay-asymptotic":
        return delay_constant_curve(params, 1.0 - 3.0 * params.gamma * params.tau)
    return scenario_curve(name, params)


def check_ode(level, rhs_factory=None):
    rhs_factory = rhs_factory or BlochRhs
    criteria = []
    dt = ODE_DT[level]
    for name, values in ODE_SCENARIOS.items():
        label = f"{name} curve ODE"

        def compute(name=name, values=values, label=label):
            params = scenario_params(name, **values)
            cap = ODE_CAP_FACTOR * math.sqrt(2.0 * params.gamma)
            rhs = rhs_factory(params, omega_max=cap, scenario=name)
            path = integrate_ode(rhs, initial_state(name), ODE_T_END, dt)
            reference = ode_reference(name, params)
            indices = np.linspace(0, path.times.size - 1, ODE_POINTS).round().astype(int)
            numeric = path.component(reference.component)[indices]
            error = float(np.max(np.abs(numeric - reference.values(path.times[indices]))))
            return _check(label, error, ODE_TOL)

        criteria.append(_guarded(label, ODE_TOL, compute))
    return criteria


def check_linear(level):
    summary = linear_trajectory_sample(list(SME_TIMES), 100_000, seed=11)
    criteria = []
    for i, t in enumerate(SME_TIMES):
        deviation = abs(summary.mean[i] - cf.openloop_lambda(t))
        criteria.append(_check(f"linear trajectory lambda t={t:g}", deviation, 3.0 * summary.stderr[i]))
        weight_deviation = abs(summary.extras["weight_mean"][i] - 1.0)
        criteria.append(
            _check(f"linear trajectory weight t={t:g}", weight_deviation, 3.0 * summary.extras["weight_stderr"][i])
        )
    return criteria


def check_crossings(level):
    report = ImperfectionAnalyzer(BenchmarkConvention.BLOCH_LENGTH).crossing_report().set_index("crossing")
    criteria = []
    for label, (expected, tolerance) in CROSSING_TARGETS.items():
        computed = report.loc[label, "computed"]
        criteria.append(_check(f"crossing {label}", abs(computed - expected), tolerance))
    return criteria


def check_tables(level):
    analyzer = ImperfectionAnalyzer(BenchmarkConvention.LAMBDA_MAX)
    criteria = []
    for which in (1, 2):
        rows = {(row.range_label, row.kind): row for row in analyzer.table_rows(which)}
        for range_label in ("A", "B"):
            for kind in IMPERFECTIONS:
                row = rows[(range_label, kind)]
                for side, text in zip(("lo", "hi"), published_bounds(which, range_label, kind)):
                    if text is None:
                        continue
                    name = f"table {which} {range_label} {kind} {side}"
                    value = getattr(row, side)
                    if value is None:
                        criteria.append(Criterion(name, float("nan"), entry_tolerance(text), False, f"{name} mismatch (empty)"))
                        continue
                    criteria.append(_check(name, abs(value - float(text)), entry_tolerance(text)))
    return criteria


def check_speedup(level):
    epsilons = [1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-100]
    ratios = asymptotic_speedup(epsilons)
    monotone = bool(np.all(np.diff(ratios) > 0.0))
    return [
        _check("speedup monotone toward 2", float(np.max(ratios)), 2.0, passed=monotone and ratios[-1] < 2.0),
        _check("speedup at eps=1e-12", ratios[4], 1.88, passed=ratios[4] > 1.88),
        _check("speedup at eps=1e-100", ratios[5], 1.97, passed=ratios[5] > 1.97),
        _check("speedup ratio eps=0.25", abs(cf.speedup_ratio(0.25) - 2.0), 1e-15),
    ]


def check_reductions(level):
    times = np.random.default_rng(7).uniform(0.0, 10.0, 100)
    ideal = cf.ideal_x(times)
    constant = cf.constant_x(times, 1.0)
    pairs = {
        "calibrated delta=0": (cf.calibrated_x(times, 0.0), ideal),
        "eta-optimal eta=1": (cf.eta_optimal_x(times, 1.0), ideal),
        "eta-oblivious eta=1": (cf.eta_oblivious_x(times, 1.0), ideal),
        "noisy without noise": (cf.noisy_system_x(times, 1.0, 0.0, 0.0), ideal),
        "delay-oblivious tau=0": (cf.delay_oblivious_x(times, 0.0), constant),
        "delay-asymptotic tau=0": (cf.delay_asymptotic_x(times, 0.0), constant),
    }
    return [
        _check(f"reduction {name}", float(np.max(np.abs(a - b))), 1e-12) for name, (a, b) in pairs.items()
    ]


def check_sme(level):
    cases = {
        "ideal": (scenario_params("ideal"), lambda t: cf.ideal_x(t)),
        "constant alpha=1": (scenario_params("constant", alpha=1.0), lambda t: cf.constant_x(t, 1.0)),
        "eta-optimal eta=0.85": (scenario_params("eta-optimal", eta=0.85), lambda t: cf.eta_optimal_x(t, 0.85)),
        "open loop": (scenario_params("open-loop"), lambda t: cf.openloop_lambda(t)),
    }
    criteria = []
    for label, (params, reference) in cases.items():
        summary = ensemble_mean(params, n_traj=10_000, t_end=max(SME_TIMES), dt=1e-3, base_seed=1000)
        for t in SME_TIMES:
            mean, stderr = summary.at(t)
            criteria.append(_check(f"SME {label} t={t:g}", abs(mean - reference(t)), 3.0 * stderr))
    return criteria


def check_delay(level):
    tau = 0.05
    params = scenario_params("delay-oblivious", tau=tau)
    summary = ensemble_mean(params, n_traj=10_000, t_end=max(DELAY_TIMES), dt=1e-3, base_seed=2000)
    criteria = []
    for t in DELAY_TIMES:
        mean, stderr = summary.at(t)
        # no actuation before the first delayed record arrives
        expected = cf.delay_oblivious_x(t - tau, tau)
        criteria.append(_check(f"delayed SME t={t:g}", abs(mean - expected), max(3.0 * stderr, 5.0 * tau**2)))
    for small in (1e-2, 1e-3):
        deficit = 1.0 - scenario_curve("delay-asymptotic", scenario_params("delay-asymptotic", tau=small)).steady_state
        criteria.append(_check(f"delay-asymptotic deficit/tau^2 tau={small:g}", deficit / small**2, 10.0))
    return criteria


def check_determinism(level):
    params = scenario_params("ideal")
    frames = []
    for _ in range(2):
        summary = ensemble_mean(params, n_traj=64, t_end=0.5, dt=1e-3, base_seed=42, batch_size=16)
        frames.append(summary.to_frame())
    with tempfile.TemporaryDirectory() as directory:
        contents = []
        for i, frame in enumerate(frames):
            path = os.path.join(directory, f"run{i}.csv")
            write_csv(frame, path)
            with open(path, "rb") as handle:
                contents.append(handle.read())
    identical = contents[0] == contents[1]
    return [_check("determinism fixed seed CSV", 0.0 if identical else 1.0, 0.0, passed=identical)]


_CHECKS = {
    "ode": check_ode,
    "linear": check_linear,
    "crossings": check_crossings,
    "tables": check_tables,
    "speedup": check_speedup,
    "reductions": check_reductions,
    "sme": check_sme,
    "delay": check_delay,
    "determinism": check_determinism,
}


def run_acceptance(level="quick", groups=None):
    """
    Run the acceptance criteria.

    Args:
        level (str): "quick" or "full".
        groups (sequence, optional): Restrict to these criterion groups.

    Returns:
        AcceptanceReport: One entry per criterion.
    """
    if level not in ODE_DT:
        raise RspError(f"unknown validation level '{level}'")
    selected = groups or (QUICK_GROUPS if level == "quick" else GROUPS)
    criteria = []
    for group in selected:
        logger.info(f"Validating {group} ...")
        criteria.extend(_CHECKS[group](level))
    report = AcceptanceReport(level, criteria)
    logger.info(f"Validation {level}: {len(report.criteria) - len(report.failures())}/{len(report.criteria)} passed")
    return report
