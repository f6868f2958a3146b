# -*- coding: utf-8 -*-

"""Implicit trapezoidal DAE step."""

import numpy as np
import pytest

from errors import ConvergenceError, StepSizeError
from simulation import integrator
from simulation.integrator import StepResult, step, trapezoidal_solve


def test_linear_ode_matches_trapezoid_formula():
    res = trapezoidal_solve(
        rhs=lambda z: -z,
        jac=lambda z: -np.eye(1),
        diff_mask=np.array([True]),
        x=np.array([1.0]),
        dt=0.1,
    )
    assert res.x[0] == pytest.approx((1 - 0.05) / (1 + 0.05), rel=1e-12)


def test_algebraic_row_is_enforced_after_the_step():
    # x' = -x + y,  0 = y - 2x   →   x' = x on the constraint manifold
    def rhs(z):
        return np.array([-z[0] + z[1], z[1] - 2 * z[0]])

    def jac(z):
        return np.array([[-1.0, 1.0], [-2.0, 1.0]])

    res = trapezoidal_solve(rhs, jac, np.array([True, False]), np.array([1.0, 2.0]), dt=0.1)
    assert res.x[0] == pytest.approx(1.05 / 0.95, rel=1e-10)
    assert res.x[1] == pytest.approx(2 * res.x[0], rel=1e-10)
    assert res.residual < 1e-10


def test_step_size_floor():
    with pytest.raises(StepSizeError):
        trapezoidal_solve(lambda z: -z, lambda z: -np.eye(1), np.array([True]), np.ones(1), dt=1e-12)


def test_iteration_limit_raises_convergence_error():
    with pytest.raises(ConvergenceError) as err:
        trapezoidal_solve(
            rhs=lambda z: -z**3,
            jac=lambda z: np.diag(-3 * z**2),
            diff_mask=np.array([True]),
            x=np.array([1.0]),
            dt=0.1,
            max_iterations=0,
        )
    assert err.value.residual_norm > 0


def test_plant_step_holds_the_operating_point(case9_sys):
    s = case9_sys
    x = step(s, s.x_op, s.u_op, s.q_bar, dt=0.01)
    np.testing.assert_allclose(x, s.x_op, atol=1e-8)


def test_plant_step_with_process_noise_moves_state(case9_sys):
    s = case9_sys
    w = np.zeros(s.n)
    w[s.layout.block("omega")] = 1.0
    x = step(s, s.x_op, s.u_op, s.q_bar, dt=0.01, process_noise=w)
    omega = x[s.layout.block("omega")] - s.x_op[s.layout.block("omega")]
    assert np.all(omega > 0)

# =================================================================
# Step halving
# =================================================================


def _fails_above(limit, calls):
    def fake(rhs, jac, diff_mask, x, dt, tolerance, max_iterations, min_dt):
        calls.append(dt)
        if dt > limit:
            raise ConvergenceError("forced", 1.0)
        return StepResult(x=x + dt, iterations=1, residual=0.0, lu=None)
    return fake


def test_failed_step_is_split_in_half(monkeypatch):
    calls = []
    monkeypatch.setattr(integrator, "trapezoidal_solve", _fails_above(0.004, calls))
    x = integrator.advance(None, None, np.array([True]), np.zeros(1), dt=0.01, min_dt=1e-4)
    assert x[0] == pytest.approx(0.01)
    assert calls[:3] == [0.01, 0.005, 0.0025]
    assert calls.count(0.0025) == 4


def test_halving_stops_at_the_minimum_step(monkeypatch):
    monkeypatch.setattr(integrator, "trapezoidal_solve", _fails_above(0.0, []))
    with pytest.raises(StepSizeError, match="halving"):
        integrator.advance(None, None, np.array([True]), np.zeros(1), dt=0.01, min_dt=1e-3)
