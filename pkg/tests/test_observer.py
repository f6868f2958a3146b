# -*- coding: utf-8 -*-

"""Joint NDAE observer and residual statistics."""

import numpy as np
import pytest

from errors import CalibrationError, GainError
from estimation.observer import (
    ObserverConfig,
    estimate_sigma,
    observer_step,
    observer_step_sensitivity,
    residual,
    run_observer,
)
from simulation.noise import DisturbanceModel, NoiseModel
from simulation.simulator import simulate

# =================================================================
# Config
# =================================================================


def test_config_rejects_bad_dt_and_shape(case9_sys, case9_gain):
    with pytest.raises(GainError):
        ObserverConfig(gain=case9_gain, dt=0.0, initial_estimate=case9_sys.x_op)
    with pytest.raises(GainError):
        ObserverConfig(gain=case9_gain[:-1], dt=0.01, initial_estimate=case9_sys.x_op)


def test_residual():
    C = np.array([[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_allclose(residual(np.array([1.0, 1.0]), np.array([0.5, 0.25]), C), [0.5, 0.5])

# =================================================================
# Stepping
# =================================================================


def test_observer_holds_a_correct_estimate(case9_sys, case9_observer):
    s = case9_sys
    x_next = observer_step(s, case9_observer, s.x_op, s.C @ s.x_op, s.u_op, s.q_bar)
    np.testing.assert_allclose(x_next, s.x_op, atol=1e-8)


def test_zero_noise_tracking_is_exact(case9, case9_sys, case9_observer):
    s = case9_sys
    truth = simulate(s, s.x_op, None, DisturbanceModel.from_case(case9, seed=0),
                     NoiseModel.silent(s), dt=0.01, horizon=1.0)
    trace = run_observer(s, case9_observer, truth.measurements, truth.inputs, truth=truth.states)
    assert len(trace) == 101
    assert trace.residuals.shape == (101, 24)
    rmse = np.sqrt(np.mean((trace.estimates - truth.states) ** 2))
    assert rmse < 1e-6
    assert np.nanmax(trace.error_norms) < 1e-6


def test_observer_recovers_from_an_angle_offset(case9_sys, case9_gain):
    s = case9_sys
    x_hat = s.x_op.copy()
    x_hat[s.layout.block("delta")] += 0.05
    x_hat[s.layout.block("theta")] += 0.05
    cfg = ObserverConfig(gain=case9_gain, dt=0.01, initial_estimate=x_hat)
    y = np.tile(s.C @ s.x_op, (501, 1))
    u = np.tile(s.u_op, (501, 1))
    trace = run_observer(s, cfg, y, u, truth=np.tile(s.x_op, (501, 1)))
    assert trace.error_norms[-1] < trace.error_norms[0]


def test_sensitivity_matches_finite_differences(case9_sys, case9_observer, rng):
    s = case9_sys
    y = s.C @ s.x_op
    x_next, sens = observer_step_sensitivity(s, case9_observer, s.x_op, y, s.u_op, s.q_bar)
    assert sens.shape == (s.n, s.p)
    direction = rng.normal(size=s.p)
    eps = 1e-4
    hi = observer_step(s, case9_observer, s.x_op, y + eps * direction, s.u_op, s.q_bar)
    lo = observer_step(s, case9_observer, s.x_op, y - eps * direction, s.u_op, s.q_bar)
    np.testing.assert_allclose((hi - lo) / (2 * eps), sens @ direction, atol=1e-4)
    np.testing.assert_allclose(x_next, s.x_op, atol=1e-8)

# =================================================================
# Residual covariance
# =================================================================


def test_estimate_sigma_from_white_residuals(rng):
    history = rng.normal(scale=0.1, size=(20000, 3))
    sigma = estimate_sigma(history)
    np.testing.assert_allclose(sigma, sigma.T)
    np.testing.assert_allclose(np.diag(sigma), 0.01, rtol=0.05)
    assert np.all(np.linalg.eigvalsh(sigma) > 0)


def test_estimate_sigma_needs_enough_history(rng):
    with pytest.raises(CalibrationError):
        estimate_sigma(rng.normal(size=(20, 3)))
