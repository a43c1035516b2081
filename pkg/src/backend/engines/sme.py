"""
Conditioned stochastic master equation with Markovian feedback.

Each step draws the record increment from the state at its start
(Euler–Maruyama), applies the measurement of J_z as a trace-normalized Kraus
update with efficiency η, and finally rotates with the feedback unitary
exp(-iθJ_y), θ = Ω·dR, using the record increment dR = √(2γ)z·dt + dW/√η
that was measured round(τ/dt) steps earlier. The qubit is handled in Bloch
form, vectorized over a batch of trajectories; every trajectory draws its
noise from its own generator seeded with base_seed + index.
"""
import logging
import math

import numpy as np

from src.backend.engines.ode import BlochRhs, integrate_plan, step_plan, uniform_grid
from src.backend.engines.results import EnsembleSummary, RunningMoments, TrajectoryRecord, default_batch_size
from src.backend.model.bloch import BlochVector, bloch_to_density, density_to_bloch
from src.backend.model.scenario import OpenLoop
from src.common.config import CONFIG, omega_max as default_omega_max
from src.common.errors import DomainError, StepSizeError

logger = logging.getLogger("SmeEngine")


class DelayBuffer:
    """
    Ring buffer of past record increments, one column per trajectory.

    ``push`` stores the newest increment and returns the one measured
    ``depth`` steps earlier; the buffer starts out filled with zeros.
    """

    def __init__(self, depth, batch=1):
        if depth < 0:
            raise DomainError(f"delay buffer depth must be ≥ 0, got {depth}")
        self.depth = int(depth)
        self._slots = np.zeros((self.depth, batch))
        self._head = 0

    @classmethod
    def for_delay(cls, tau, dt, batch=1):
        return cls(int(round(tau / dt)), batch)

    def push(self, increment):
        if self.depth == 0:
            return np.asarray(increment, dtype=float)
        delayed = self._slots[self._head].copy()
        self._slots[self._head] = increment
        self._head = (self._head + 1) % self.depth
        return delayed


def _measure(b, dW, gamma, eta, dt, gamma_iso=0.0, gamma_d=0.0):
    """
    Measurement step on a (3, B) Bloch array; returns the new array and dR.

    The read-out part of the signal acts through the Kraus operator
    exp(η√(γ/2)·dR·σ_z), the unread part dephases x and y by e^{-(1-η)γdt},
    and the result is divided by its trace. Both maps are completely
    positive, so the state stays in the Bloch ball.
    """
    x, y, z = b
    d_record = math.sqrt(2.0 * gamma) * z * dt + dW / math.sqrt(eta)
    kick = eta * math.sqrt(2.0 * gamma) * d_record
    unread = math.exp(-(1.0 - eta) * gamma * dt)
    with np.errstate(over="ignore", invalid="ignore"):
        c, s = np.cosh(kick), np.sinh(kick)
        trace = c + s * z
        measured = np.array([x * unread / trace, y * unread / trace, (c * z + s) / trace])
    return _decohere(measured, dt, gamma_iso, gamma_d), d_record


def _decohere(b, dt, gamma_iso, gamma_d):
    """Exact dephasing (rate 4Γ_iso on all components) and damping towards -z (rate Γ_d) over dt."""
    transverse = 4.0 * gamma_iso + 0.5 * gamma_d
    longitudinal = 4.0 * gamma_iso + gamma_d
    if longitudinal == 0.0:
        return b
    x, y, z = b
    fixed_z = -gamma_d / longitudinal
    shrink = math.exp(-transverse * dt)
    return np.array([x * shrink, y * shrink, fixed_z + (z - fixed_z) * math.exp(-longitudinal * dt)])


def _check_step(b):
    """A step that left the ball beyond rounding (an eigenvalue below -tol) or overflowed is fatal."""
    tol = CONFIG["sme_positivity_tol"]
    length = np.sqrt(np.sum(b * b, axis=0))
    if not np.all(np.isfinite(length)):
        raise StepSizeError("SME step overflowed (record increment too large for dt); reduce dt")
    worst = float(np.max(length))
    if worst > 1.0 + 2.0 * tol:
        raise StepSizeError(
            f"SME step produced eigenvalue {(1.0 - worst) / 2.0:.3g} < -{tol:g}; reduce dt"
        )
    return b



def _rotate_y(b, theta):
    x, y, z = b
    c, s = np.cos(theta), np.sin(theta)
    return np.array([x * c + z * s, y, z * c - x * s])


def sme_step(rho, omega, eta, dt, dW, gamma=1.0):
    """
    One conditioned step: measurement, then feedback by angle omega·dR about y.

    Args:
        rho (DensityOperator): Normalized state.
        omega (float): Feedback strength for this step.
        eta (float): Detection efficiency.
        dt (float): Step.
        dW (float): Wiener increment ~ N(0, dt).
        gamma (float): Measurement rate.

    Returns:
        tuple: (DensityOperator, dR).
    """
    b = density_to_bloch(rho).as_array().reshape(3, 1)
    measured, d_record = _measure(b, np.array([dW]), gamma, eta, dt)
    measured = _check_step(measured)
    rotated = _rotate_y(measured, omega * d_record)
    return bloch_to_density(BlochVector.from_array(rotated[:, 0])), float(d_record[0])


class StepSchedule:
    """
    Sub-step times and Markovian strengths Ω for one ensemble run.

    State-dependent laws are evaluated on the averaged (ODE) path, which
    makes the schedule independent of the individual record. Laws that
    diverge at x = 0 get the graded start of the ODE engine; with a delay the
    grid stays uniform so the delay buffer counts whole steps.
    """

    def __init__(self, params, law, t_end, dt, b0=None, omega_max=None):
        self.n_steps, self.h = uniform_grid(t_end, dt)
        cap = omega_max if omega_max is not None else default_omega_max(params.gamma)
        refine = law.state_dependent and law.singular_at_zero(params) and params.tau == 0.0
        self.times, self.positions = step_plan(self.n_steps, self.h, refine)
        self.widths = np.diff(self.times)
        starts = self.times[:-1]
        if law.state_dependent:
            rhs = BlochRhs(params, law, omega_max=cap)
            path = integrate_plan(rhs, b0 or BlochVector(), self.times, law.name)
            xs = path[:-1, 0]
        else:
            xs = np.zeros(starts.size)
        self.omega = np.asarray(law.omega(starts, xs, params, cap), dtype=float) * np.ones(starts.size)

    @property
    def grid(self):
        return self.times[self.positions]


def omega_schedule(params, law, t_end, dt, b0=None, omega_max=None):
    """Ω per uniform step (the value at the start of each step)."""
    schedule = StepSchedule(params, law, t_end, dt, b0, omega_max)
    return schedule.omega[schedule.positions[:-1]]


def _noise(base_seed, start, count, widths):
    """Wiener increments (count, n_sub); trajectory i draws from default_rng(base_seed + i)."""
    scale = np.sqrt(widths)
    return np.stack(
        [np.random.default_rng(base_seed + i).standard_normal(widths.size) for i in range(start, start + count)]
    ) * scale


def _run_batch(params, law, schedule, dW, b0, merit=None):
    """
    Propagate a batch of B trajectories along the schedule's sub-steps.

    Returns states (n+1, 3, B) and cumulative records (n+1, B) on the uniform
    grid, or only the values of ``merit`` there (n+1, B) when it is given.
    """
    batch = dW.shape[0]
    n_points = schedule.positions.size
    b = np.repeat(b0.as_array().reshape(3, 1), batch, axis=1)
    record = np.zeros(batch)
    if merit is None:
        states = np.empty((n_points, 3, batch))
        records = np.zeros((n_points, batch))
        states[0] = b
    else:
        values = np.empty((n_points, batch))
        values[0] = merit(b)
    feedback = not isinstance(law, OpenLoop)
    delay = DelayBuffer.for_delay(params.tau, schedule.h, batch)
    is_grid_point = np.zeros(schedule.times.size, dtype=bool)
    is_grid_point[schedule.positions] = True

    point = 1
    for j, width in enumerate(schedule.widths):
        b, d_record = _measure(b, dW[:, j], params.gamma, params.eta, width, params.gamma_iso, params.gamma_d)
        b = _check_step(b)
        if feedback:
            b = _rotate_y(b, schedule.omega[j] * delay.push(d_record))
        record = record + d_record
        if is_grid_point[j + 1]:
            if merit is None:
                states[point] = b
                records[point] = record
            else:
                values[point] = merit(b)
            point += 1
    if merit is None:
        return states, records
    return values


def simulate_trajectory(params, law=None, seed=0, t_end=1.0, dt=None, b0=None, omega_max=None):
    """Single conditioned path; the same seed reproduces it bit for bit."""
    law = law if law is not None else params.feedback_law
    dt = CONFIG["sme_dt"] if dt is None else dt
    start_state = b0 or BlochVector()
    schedule = StepSchedule(params, law, t_end, dt, start_state, omega_max)
    dW = _noise(seed, 0, 1, schedule.widths)
    states, records = _run_batch(params, law, schedule, dW, start_state)
    return TrajectoryRecord(
        seed=seed,
        dt=schedule.h,
        times=schedule.grid,
        states=states[:, :, 0],
        record=records[:, 0],
        scenario=law.name,
    )


def _lambda_max(b):
    return 0.5 * (1.0 + np.sqrt(np.sum(b * b, axis=0)))


def _x_component(b):
    return b[0]


def _y_component(b):
    return b[1]


MERITS = {"lambda": _lambda_max, "x": _x_component, "y": _y_component}


def merit_component(law):
    """λ_max for open-loop runs (final conditional rotation), x otherwise."""
    return "lambda" if isinstance(law, OpenLoop) else "x"


def figure_of_merit(law, component=None):
    component = component or merit_component(law)
    if component not in MERITS:
        raise DomainError(f"unknown figure of merit '{component}', expected one of {sorted(MERITS)}")
    return MERITS[component]


def ensemble_mean(params, law=None, n_traj=10_000, t_end=1.0, dt=None, base_seed=0, b0=None,
                  omega_max=None, batch_size=None, component=None):
    """
    Mean figure of merit ± standard error over n_traj conditioned paths.

    Trajectory i uses seed base_seed + i; batches are reduced to partial
    sums and merged, so the result does not depend on the batch size.
    ``component`` picks the averaged quantity ("lambda", "x" or "y").
    """
    if n_traj < 2:
        raise DomainError(f"an ensemble needs at least two trajectories, got {n_traj}")
    law = law if law is not None else params.feedback_law
    dt = CONFIG["sme_dt"] if dt is None else dt
    batch_size = batch_size or default_batch_size()
    component = component or merit_component(law)
    merit = figure_of_merit(law, component)
    start_state = b0 or BlochVector()
    schedule = StepSchedule(params, law, t_end, dt, start_state, omega_max)
    logger.info(
        f"SME ensemble '{law.name}': {n_traj} trajectories, {schedule.n_steps} steps of {schedule.h:g} "
        f"({schedule.widths.size} sub-steps)"
    )

    moments = RunningMoments.empty(schedule.positions.size)
    for start in range(0, n_traj, batch_size):
        count = min(batch_size, n_traj - start)
        dW = _noise(base_seed, start, count, schedule.widths)
        values = _run_batch(params, law, schedule, dW, start_state, merit=merit)
        moments = moments.merge(RunningMoments.from_values(values.T))

    summary = EnsembleSummary.from_moments(schedule.grid, moments, law.name, component)
    logger.info(f"SME ensemble '{law.name}' done: final mean {summary.mean[-1]:.6f} ± {summary.stderr[-1]:.2g}")
    return summary
