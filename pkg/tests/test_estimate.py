# -*- coding: utf-8 -*-

"""Attacked estimate from a falsified measurement."""

from dataclasses import replace

import numpy as np
import pytest

from attacks.estimate import estimate_attacked_state, pseudo_inverse
from errors import AttackSynthesisError
from estimation.observer import observer_step


def test_rank_deficient_matrix_is_refused():
    C = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    with pytest.raises(AttackSynthesisError, match="rank deficient"):
        pseudo_inverse(C)


def test_pseudo_inverse_update(case9_sys, case9_observer, rng):
    # full state metering; case9's own C is rank deficient
    s = replace(case9_sys, C=np.eye(case9_sys.n))
    y = s.x_op + 1e-3 * rng.normal(size=s.n)
    x = estimate_attacked_state(s, case9_observer, y, s.x_op, s.u_op, s.q_bar, method="pseudo_inverse")
    np.testing.assert_allclose(x, s.x_op + y)


def test_case9_meters_cannot_be_inverted(case9_sys, case9_observer):
    s = case9_sys
    with pytest.raises(AttackSynthesisError, match="rank deficient"):
        estimate_attacked_state(s, case9_observer, s.C @ s.x_op, s.x_op, s.u_op, s.q_bar, method="pseudo_inverse")


def test_observer_step_matches_the_victim(case9_sys, case9_observer, rng):
    s = case9_sys
    y = s.C @ s.x_op + 1e-3 * rng.normal(size=s.p)
    x = estimate_attacked_state(s, case9_observer, y, s.x_op, s.u_op, s.q_bar)
    np.testing.assert_allclose(x, observer_step(s, case9_observer, s.x_op, y, s.u_op, s.q_bar))


def test_unknown_method(case9_sys, case9_observer):
    s = case9_sys
    with pytest.raises(ValueError):
        estimate_attacked_state(s, case9_observer, s.C @ s.x_op, s.x_op, s.u_op, s.q_bar, method="kalman")
