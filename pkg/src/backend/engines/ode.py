"""
Deterministic Bloch-equation integrator for the averaged feedback dynamics.

The right-hand side collects, per scenario, the measurement decay, the
feedback drive with its efficiency-limited friction, the first-order delay
corrections and optional dephasing/damping. Integration is fixed-step RK4.
"""
import logging
import math

import numpy as np

from src.backend.engines.results import TrajectoryRecord
from src.backend.model.bloch import BlochVector
from src.common.config import CONFIG, omega_max as default_omega_max
from src.common.errors import DomainError, NonphysicalStateError

logger = logging.getLogger("OdeEngine")

# graded grid inside the first step of a law that diverges at x = 0
SINGULAR_T_MIN = 1e-12
SINGULAR_RATIO = 1.05
SINGULAR_SUBSTEPS = 20


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class BlochRhs:
    """
    Averaged Bloch equations (ẋ, ẏ, ż) for one scenario and feedback law.

    Args:
        params (ScenarioParams): Rates, efficiency, delay and dephasing.
        law (FeedbackLaw, optional): Defaults to ``params.feedback_law``.
        omega_max (float, optional): Cap on Ω; defaults to the configured cap.
        capped (bool): Evaluate the law uncapped when False; a divergent law
            then raises ScheduleDivergenceError at x = 0.
        scenario (str, optional): Tag used in diagnostics.
    """

    def __init__(self, params, law=None, omega_max=None, capped=True, scenario=None):
        self.params = params
        self.law = law if law is not None else params.feedback_law
        if capped:
            self.omega_max = omega_max if omega_max is not None else default_omega_max(params.gamma)
        else:
            self.omega_max = None
        self.scenario = scenario or self.law.name
        self.singular_at_zero = self.law.singular_at_zero(params)

    def omega(self, t, x):
        return self.law.omega(t, x, self.params, self.omega_max)

    def __call__(self, t, b):
        if isinstance(b, BlochVector):
            b = b.as_array()
        x, y, z = b
        p = self.params
        g = p.gamma
        sqrt_2g = math.sqrt(2.0 * g)
        omega = self.omega(t, x)
        omega_sq = omega * omega
        decoherence = 4.0 * p.gamma_iso + 0.5 * p.gamma_d

        dx = -g * x + sqrt_2g * omega - x * omega_sq / (2.0 * p.eta) - decoherence * x
        dy = -g * y - decoherence * y
        dz = -z * omega_sq / (2.0 * p.eta) - 4.0 * p.gamma_iso * z - p.gamma_d * (1.0 + z)
        if p.tau > 0.0:
            dx -= 0.5 * sqrt_2g * omega_sq * omega * p.tau
            dz -= 2.0 * z * omega_sq * g * p.tau
        return np.array([dx, dy, dz])


def bloch_rhs(params, law=None, **options):
    return BlochRhs(params, law, **options)


def uniform_grid(t_end, dt):
    """(number of steps, exact step) covering [0, t_end]."""
    if not dt > 0.0 or not t_end > 0.0:
        raise DomainError(f"needs dt > 0 and t_end > 0, got dt={dt!r}, t_end={t_end!r}")
    n_steps = max(1, int(round(t_end / dt)))
    return n_steps, t_end / n_steps


def step_plan(n_steps, h, singular=False):
    """
    Sub-step times covering the uniform grid 0, h, ..., n_steps·h.

    For laws that diverge at x = 0 the first step is resolved on a geometric
    grid from h·1e-12 with ratio 1.05, and step k ≤ 20 is split into
    ceil(20/k) substeps.

    Returns:
        tuple: (times, positions) with times[positions] the uniform grid.
    """
    if not singular:
        return h * np.arange(n_steps + 1), np.arange(n_steps + 1)
    points = [0.0]
    t = h * SINGULAR_T_MIN
    while t < h:
        points.append(t)
        t *= SINGULAR_RATIO
    positions = [0]
    for k in range(n_steps):
        # the solution behaves like √t just after the start
        substeps = math.ceil(SINGULAR_SUBSTEPS / k) if 1 <= k <= SINGULAR_SUBSTEPS else 1
        for j in range(1, substeps + 1):
            points.append((k + j / substeps) * h)
        positions.append(len(points) - 1)
    return np.array(points), np.array(positions)


def integrate_plan(rhs, b0, times, scenario="custom"):
    """RK4 along the given time points; returns the states at every point."""
    limit = 1.0 + CONFIG["ode_norm_tol"]
    b = b0.as_array() if isinstance(b0, BlochVector) else np.asarray(b0, dtype=float)
    states = np.empty((times.size, 3))
    states[0] = b
    for j in range(times.size - 1):
        b = rk4_step(rhs, times[j], b, times[j + 1] - times[j])
        length = float(np.linalg.norm(b))
        if not np.isfinite(length) or length > limit:
            raise NonphysicalStateError(scenario, times[j + 1], length)
        states[j + 1] = b
    return states


def integrate_ode(rhs, b0, t_end, dt=None, scenario=None):
    """
    Fixed-step RK4 integration of a Bloch right-hand side.

    Args:
        rhs (callable): (t, b) -> db/dt; a BlochRhs also supplies the scenario
            tag and whether the law is singular at x = 0.
        b0 (BlochVector or sequence): Initial Bloch vector.
        t_end (float): Final time, > 0.
        dt (float, optional): Step; defaults to CONFIG["ode_dt"].
        scenario (str, optional): Tag for diagnostics and the record.

    Returns:
        TrajectoryRecord: Path on the uniform grid 0, dt, ..., t_end.
    """
    dt = CONFIG["ode_dt"] if dt is None else dt
    n_steps, h = uniform_grid(t_end, dt)
    scenario = scenario or getattr(rhs, "scenario", "custom")
    times, positions = step_plan(n_steps, h, getattr(rhs, "singular_at_zero", False))
    logger.info(f"ODE run '{scenario}': {n_steps} steps of {h:g} up to t={t_end:g}")
    states = integrate_plan(rhs, b0, times, scenario)[positions]
    return TrajectoryRecord(seed=None, dt=h, times=times[positions], states=states, scenario=scenario)


def integrate_local_optimal_delayed(eta, tau, x0, t_end, dt=None, gamma=1.0):
    """
    x-only dynamics under the locally optimal delayed feedback,
    ẋ = -γx + γη/x - 2γ²η²τ/x³.

    Steps are subdivided where the equation is stiff (small x).
    """
    dt = CONFIG["ode_dt"] if dt is None else dt
    if x0 <= 0.0:
        raise DomainError(f"delay-optimal dynamics need x0 > 0, got {x0!r}")
    if not 0.0 < eta <= 1.0 or tau < 0.0:
        raise DomainError(f"invalid η={eta!r} or τ={tau!r}")
    n_steps, h = uniform_grid(t_end, dt)

    def rhs(t, x):
        return -gamma * x + gamma * eta / x - 2.0 * gamma**2 * eta**2 * tau / x**3

    times = h * np.arange(n_steps + 1)
    xs = np.empty(n_steps + 1)
    xs[0] = x = float(x0)

    for k in range(n_steps):
        stiffness = gamma * eta / x**2 + 6.0 * gamma**2 * eta**2 * tau / x**4 + gamma
        substeps = max(1, math.ceil(h * stiffness / 0.5))
        sub_h = h / substeps
        for j in range(substeps):
            x = rk4_step(rhs, times[k] + j * sub_h, x, sub_h)
            if not x > 0.0:
                raise DomainError(
                    f"delay-optimal dynamics reached x = {x:.3g} ≤ 0 at t ≈ {times[k]:.6g}; outside model validity"
                )
        xs[k + 1] = x

    states = np.column_stack([xs, np.zeros_like(xs), np.zeros_like(xs)])
    return TrajectoryRecord(seed=None, dt=h, times=times, states=states, scenario="delay-optimal")


def mean_path(params, law=None, t_end=1.0, dt=None, b0=None, omega_max=None):
    """Averaged path of a scenario, started from the maximally mixed state by default."""
    rhs = BlochRhs(params, law, omega_max=omega_max)
    start = b0 if b0 is not None else BlochVector()
    return integrate_ode(rhs, start, t_end, dt)
