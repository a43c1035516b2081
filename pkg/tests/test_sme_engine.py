import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from src.backend.analytic import closed_forms as cf
from src.backend.engines.ode import BlochRhs, rk4_step
from src.backend.engines.sme import (
    DelayBuffer,
    _measure,
    StepSchedule,
    ensemble_mean,
    figure_of_merit,
    omega_schedule,
    simulate_trajectory,
    sme_step,
)
from src.backend.model.bloch import BlochVector, bloch_to_density, density_to_bloch
from src.backend.model.scenario import OpenLoop, scenario_params
from src.common.config import CONFIG
from src.common.errors import DomainError, StepSizeError


def test_z_eigenstate_is_fixed_point():
    rho = bloch_to_density(BlochVector(0.0, 0.0, 1.0))
    dt = 1e-3
    for dW in (-0.1, 0.0, 0.05):
        after, d_record = sme_step(rho, 0.0, 1.0, dt, dW)
        assert density_to_bloch(after).as_tuple() == pytest.approx((0.0, 0.0, 1.0), abs=1e-15)
        assert d_record == pytest.approx(math.sqrt(2.0) * dt + dW)


def test_mixed_state_without_noise_is_unchanged():
    rho = bloch_to_density(BlochVector())
    after, d_record = sme_step(rho, 0.0, 1.0, 1e-3, 0.0)
    assert density_to_bloch(after).as_tuple() == (0.0, 0.0, 0.0)
    assert d_record == 0.0


def test_feedback_rotates_about_y():
    rho = bloch_to_density(BlochVector(0.0, 0.0, 1.0))
    dt, dW = 1e-3, 0.2
    after, d_record = sme_step(rho, 1.0, 1.0, dt, dW)
    theta = math.sqrt(2.0) * dt + dW
    assert d_record == pytest.approx(theta)
    assert density_to_bloch(after).as_tuple() == pytest.approx((math.sin(theta), 0.0, math.cos(theta)), abs=1e-12)


def test_record_variance_matches_ostensible_measure():
    dt = 1e-3
    rng = np.random.default_rng(5)
    rho = bloch_to_density(BlochVector())
    increments = np.empty(10_000)
    for i in range(increments.size):
        rho, increments[i] = sme_step(rho, 0.0, 1.0, dt, rng.standard_normal() * math.sqrt(dt))
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
    variance = increments.var(ddof=1)
    stderr = variance * math.sqrt(2.0 / (increments.size - 1))
    assert abs(variance - dt) < 3.0 * stderr


def test_overflowing_step_is_rejected():
    rho = bloch_to_density(BlochVector(0.0, 0.0, 0.0))
    with pytest.raises(StepSizeError):
        sme_step(rho, 0.0, 1.0, 1e-3, 1e3)


@pytest.mark.parametrize("start", [(0.0, 0.0, 0.0), (0.6, 0.0, 0.8), (0.3, 0.2, -0.5)])
def test_large_record_increment_keeps_state_physical(start):
    rho = bloch_to_density(BlochVector(*start))
    for dW in (-2.0, 2.0):
        after, _ = sme_step(rho, 3.0, 0.7, 1e-3, dW)
        assert density_to_bloch(after).length() <= 1.0 + 1e-12
        assert after.eigenvalues()[0] >= -1e-12


def test_pure_state_stays_pure():
    rho = bloch_to_density(BlochVector(0.6, 0.0, 0.8))
    rng = np.random.default_rng(21)
    for _ in range(2_000):
        rho, _ = sme_step(rho, 1.2, 1.0, 1e-3, rng.standard_normal() * math.sqrt(1e-3))
    assert density_to_bloch(rho).length() == pytest.approx(1.0, abs=1e-9)


def _mean_after_one_step(start, omega, eta, dt):
    """E[b] after one SME step, by Gauss–Hermite quadrature over dW."""
    nodes, weights = hermegauss(60)
    rho = bloch_to_density(BlochVector(*start))
    total = np.zeros(3)
    for node, weight in zip(nodes, weights):
        after, _ = sme_step(rho, omega, eta, dt, node * math.sqrt(dt))
        total += weight * density_to_bloch(after).as_array()
    return total / math.sqrt(2.0 * math.pi)


def _averaged_flow(params, start, dt, substeps=200):
    rhs = BlochRhs(params)
    b = np.array(start)
    h = dt / substeps
    for k in range(substeps):
        b = rk4_step(rhs, k * h, b, h)
    return b


def test_one_step_mean_error_is_second_order():
    # local error O(dt²) in the mean gives a weak order one scheme
    eta, omega = 0.8, 0.8
    params = scenario_params("constant", alpha=omega / math.sqrt(2.0), eta=eta)
    start = (0.3, 0.2, 0.5)
    errors = []
    for dt in (0.01, 0.005):
        deviation = _mean_after_one_step(start, omega, eta, dt) - _averaged_flow(params, start, dt)
        errors.append(float(np.max(np.abs(deviation))))
    assert errors[1] < 1e-3
    assert errors[0] / errors[1] > 3.0


def test_measurement_step_with_dephasing_and_damping():
    b = np.array([[0.4], [0.3], [0.0]])
    measured, d_record = _measure(b, np.array([0.0]), 1.0, 1.0, 1e-3, gamma_iso=0.05, gamma_d=0.1)
    assert d_record[0] == 0.0
    shrink = math.exp(-0.25e-3)
    expected = (0.4 * shrink, 0.3 * shrink, -(1.0 - math.exp(-0.3e-3)) / 3.0)
    assert measured[:, 0] == pytest.approx(expected, rel=1e-12, abs=1e-15)
    quiet, _ = _measure(b, np.array([0.0]), 1.0, 1.0, 0.0, gamma_iso=0.05, gamma_d=0.1)
    assert quiet[:, 0] == pytest.approx(b[:, 0], abs=1e-15)


def test_delay_buffer():
    buffer = DelayBuffer.for_delay(0.05, 1e-3)
    assert buffer.depth == 50
    outputs = [buffer.push(np.array([float(k + 1)])) for k in range(52)]
    assert all(out[0] == 0.0 for out in outputs[:50])
    assert outputs[50][0] == 1.0 and outputs[51][0] == 2.0
    assert DelayBuffer(0).push(np.array([3.0]))[0] == 3.0
    with pytest.raises(DomainError):
        DelayBuffer(-1)


def test_omega_schedule_for_constant_law():
    params = scenario_params("constant", alpha=0.5)
    omega = omega_schedule(params, params.feedback_law, 0.1, 1e-3)
    assert omega.shape == (100,)
    assert np.allclose(omega, 0.5 * math.sqrt(2.0))


def test_singular_law_gets_graded_start():
    params = scenario_params("ideal")
    schedule = StepSchedule(params, params.feedback_law, 0.1, 1e-3)
    assert schedule.widths.size > schedule.n_steps
    assert schedule.grid == pytest.approx(1e-3 * np.arange(101), abs=1e-15)
    assert schedule.omega.max() <= CONFIG["omega_max_factor"] * math.sqrt(2.0)
    delayed = scenario_params("delay-oblivious", tau=0.05)
    assert StepSchedule(delayed, delayed.feedback_law, 0.1, 1e-3).widths.size == 100


def test_trajectory_is_reproducible(ideal_params):
    first = simulate_trajectory(ideal_params, seed=17, t_end=0.2, dt=1e-3)
    second = simulate_trajectory(ideal_params, seed=17, t_end=0.2, dt=1e-3)
    assert np.array_equal(first.states, second.states)
    assert np.array_equal(first.record, second.record)
    other = simulate_trajectory(ideal_params, seed=18, t_end=0.2, dt=1e-3)
    assert not np.array_equal(first.states, other.states)


def test_trajectory_stays_in_bloch_ball(ideal_params):
    path = simulate_trajectory(ideal_params, seed=3, t_end=1.0, dt=1e-3)
    assert np.max(path.lengths) <= 1.0 + CONFIG["bloch_tol"]
    assert path.times.size == 1001


def test_open_loop_verification_probability():
    params = scenario_params("open-loop")
    path = simulate_trajectory(params, params.feedback_law, seed=9, t_end=1.0, dt=1e-3)
    assert np.all((path.lambda_max >= 0.5) & (path.lambda_max <= 1.0))
    # no feedback: x stays zero
    assert np.all(path.x == 0.0)


def test_figure_of_merit():
    states = np.array([[0.6], [0.0], [0.8]])
    assert figure_of_merit(OpenLoop())(states)[0] == pytest.approx(1.0)
    assert figure_of_merit(OpenLoop(), "x")(states)[0] == pytest.approx(0.6)
    with pytest.raises(DomainError):
        figure_of_merit(OpenLoop(), "purity")


def test_ensemble_needs_two_trajectories(ideal_params):
    with pytest.raises(DomainError):
        ensemble_mean(ideal_params, n_traj=1)


def test_ensemble_does_not_depend_on_batch_size():
    params = scenario_params("constant", alpha=1.0)
    small = ensemble_mean(params, n_traj=60, t_end=0.2, dt=1e-3, base_seed=4, batch_size=7)
    large = ensemble_mean(params, n_traj=60, t_end=0.2, dt=1e-3, base_seed=4, batch_size=60)
    assert small.mean == pytest.approx(large.mean, rel=1e-12, abs=1e-15)
    assert small.n == large.n == 60


def test_ensemble_trajectory_matches_single_path():
    params = scenario_params("constant", alpha=1.0)
    path = simulate_trajectory(params, seed=11, t_end=0.1, dt=1e-3)
    summary = ensemble_mean(params, n_traj=2, t_end=0.1, dt=1e-3, base_seed=11)
    partner = simulate_trajectory(params, seed=12, t_end=0.1, dt=1e-3)
    assert summary.mean == pytest.approx(0.5 * (path.x + partner.x), abs=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize(
    "name, values, reference",
    [
        ("constant", {"alpha": 1.0}, lambda t: cf.constant_x(t, 1.0)),
        ("open-loop", {}, cf.openloop_lambda),
        ("eta-optimal", {"eta": 0.85}, lambda t: cf.eta_optimal_x(t, 0.85)),
        ("ideal", {}, cf.ideal_x),
    ],
)
def test_ensemble_matches_closed_form(name, values, reference):
    params = scenario_params(name, **values)
    summary = ensemble_mean(params, n_traj=10_000, t_end=2.0, dt=1e-3, base_seed=1000)
    for t in (0.5, 1.0, 2.0):
        mean, stderr = summary.at(t)
        assert abs(mean - reference(t)) < 3.0 * stderr, f"t={t}"


@pytest.mark.slow
def test_eta_optimal_ensemble_at_late_time():
    params = scenario_params("eta-optimal", eta=0.85)
    summary = ensemble_mean(params, n_traj=10_000, t_end=3.0, dt=1e-3, base_seed=3000)
    mean, stderr = summary.at(3.0)
    assert abs(mean - math.sqrt(0.85) * math.sqrt(1.0 - math.exp(-6.0))) < 3.0 * stderr


@pytest.mark.slow
def test_delayed_ensemble_follows_first_order_curve():
    tau = 0.05
    params = scenario_params("delay-oblivious", tau=tau)
    summary = ensemble_mean(params, n_traj=10_000, t_end=4.0, dt=1e-3, base_seed=2000)
    for t in (1.0, 2.0, 4.0):
        mean, stderr = summary.at(t)
        assert abs(mean - cf.delay_oblivious_x(t - tau, tau)) < max(3.0 * stderr, 5.0 * tau**2), f"t={t}"


@pytest.mark.slow
def test_measurement_only_ensemble_decays_y():
    params = scenario_params("measurement-only")
    summary = ensemble_mean(
        params, n_traj=2_000, t_end=1.0, dt=1e-3, base_seed=7, b0=BlochVector(0.0, 0.5, 0.0), component="y"
    )
    mean, stderr = summary.at(1.0)
    assert abs(mean - 0.5 * math.exp(-1.0)) < 3.0 * stderr + 1e-3
