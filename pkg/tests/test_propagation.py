# -*- coding: utf-8 -*-

"""Injection needed to reach a residual after the estimator update."""

import numpy as np
import pytest

from attacks.propagation import post_se_matrix, propagate_post_se
from errors import AttackSynthesisError
from estimation.observer import observer_step, observer_step_sensitivity


@pytest.fixture
def matrices(rng):
    return rng.normal(size=(5, 3)), rng.normal(size=(3, 5))


@pytest.mark.parametrize("sign", ["observer", "printed"])
def test_injection_lands_on_target(matrices, rng, sign):
    L, C = matrices
    target, r = rng.normal(size=3), rng.normal(size=3)
    a = propagate_post_se(target, r, L, C, 0.01, sign=sign)
    M = post_se_matrix(L, C, 0.01, sign)
    np.testing.assert_allclose(M @ a, target - r, atol=1e-12)


def test_euler_observer_identity(matrices, rng):
    # x⁺ = x + dt·L(y − Cx): the post-update residual moves by (I − dt·C·L) a
    L, C = matrices
    dt = 0.01
    x, y = rng.normal(size=5), rng.normal(size=3)

    def post_residual(y_in):
        x_next = x + dt * L @ (y_in - C @ x)
        return y_in - C @ x_next

    target = rng.normal(size=3)
    a = propagate_post_se(target, post_residual(y), L, C, dt)
    np.testing.assert_allclose(post_residual(y + a), target, atol=1e-10)


def test_sensitivity_form(matrices, rng):
    L, C = matrices
    S = 0.1 * rng.normal(size=(5, 3))
    M = post_se_matrix(L, C, 0.01, "sensitivity", sensitivity=S)
    np.testing.assert_allclose(M, np.eye(3) - C @ S)
    with pytest.raises(AttackSynthesisError):
        post_se_matrix(L, C, 0.01, "sensitivity")


def test_unknown_sign(matrices):
    with pytest.raises(ValueError):
        post_se_matrix(*matrices, 0.01, "flipped")


def test_singular_propagation_is_refused():
    # dt·C·L = I makes the observer form singular
    with pytest.raises(AttackSynthesisError, match="ill-conditioned"):
        propagate_post_se(np.ones(2), np.zeros(2), np.eye(2) / 0.01, np.eye(2), 0.01)


@pytest.mark.parametrize("sign", ["observer", "printed"])
def test_no_update_means_no_propagation(matrices, sign):
    L, C = matrices
    np.testing.assert_array_equal(post_se_matrix(L, C, 0.0, sign), np.eye(3))
    np.testing.assert_array_equal(post_se_matrix(np.zeros_like(L), C, 0.01, sign), np.eye(3))


def test_sensitivity_form_tracks_the_real_observer(case9_sys, case9_observer, rng):
    # post-update residual shift from two implicit observer steps against M·a
    s = case9_sys
    y = s.C @ s.x_op + 1e-3 * rng.normal(size=s.p)
    _, S = observer_step_sensitivity(s, case9_observer, s.x_op, y, s.u_op, s.q_bar)
    M = post_se_matrix(case9_observer.gain, s.C, case9_observer.dt, "sensitivity", sensitivity=S)

    def post_residual(y_in):
        return y_in - s.C @ observer_step(s, case9_observer, s.x_op, y_in, s.u_op, s.q_bar)

    a = 1e-4 * rng.normal(size=s.p)
    shift = post_residual(y + a) - post_residual(y)
    np.testing.assert_allclose(shift, M @ a, atol=1e-3 * np.linalg.norm(a))
