# -*- coding: utf-8 -*-

"""Equality and inequality constraint evaluation and linearization."""

import numpy as np
import pytest

from grid.constraints import constraint_model, eval_constraints, linearize_constraints


@pytest.fixture
def model(case9):
    return constraint_model(case9)


def _numeric_jacobian(fn, x, eps=1e-6):
    cols = []
    for j in range(x.size):
        dz = np.zeros(x.size)
        dz[j] = eps
        cols.append((fn(x + dz) - fn(x - dz)) / (2 * eps))
    return np.column_stack(cols)

# -----------------------------------------------------------------
# Evaluation
# -----------------------------------------------------------------


def test_operating_point_is_feasible(model, case9_sys):
    report = model.report(case9_sys.x_op, zeta=0.22)
    assert np.max(np.abs(report.g_values)) < 1e-8
    assert report.g_abs_sum < 1e-8
    assert report.violation_count == 0
    assert report.feasible


def test_row_counts(model, case9_sys):
    # 4 generator limits x 3, voltage band x 9, two ends x 9 rated lines
    assert model.h(case9_sys.x_op).size == 12 + 18 + 18
    assert model.g(case9_sys.x_op).size == case9_sys.n_a
    assert len(model.h_labels) == 48


def test_unrated_lines_add_no_rows(four_bus_case):
    four = constraint_model(four_bus_case)
    x = np.zeros(four.n)
    x[four.i_v] = 1.0
    # one rated line out of four
    assert four.h(x).size == 4 * 2 + 2 * 4 + 2 * 1


def test_voltage_band_violation_is_counted(model, case9_sys):
    x = case9_sys.x_op.copy()
    x[model.i_v.start + case9_sys.case.bus_index[5]] = 1.2
    report = model.report(x, zeta=0.22)
    h = model.h(x)
    assert h[model.h_labels.index("vmax_5")] > 0
    assert report.violation_count == int(np.count_nonzero(h > 0)) + int(report.g_abs_sum > 0.22)
    assert not report.feasible


def test_tight_zeta_flags_inconsistent_state(model, case9_sys):
    x = case9_sys.x_op.copy()
    x[model.i_v.start + case9_sys.case.bus_index[7]] += 0.01
    loose = model.report(x, zeta=1e3)
    tight = model.report(x, zeta=0.0)
    assert loose.g_abs_sum > 0
    assert tight.violation_count == loose.violation_count + 1


def test_eval_constraints_matches_model(model, case9, case9_sys):
    a = eval_constraints(case9_sys.x_op, case9, 0.22)
    b = model.report(case9_sys.x_op, 0.22)
    np.testing.assert_allclose(a.g_values, b.g_values)
    np.testing.assert_allclose(a.h_values, b.h_values)

# -----------------------------------------------------------------
# Linearization
# -----------------------------------------------------------------


def test_g_jacobian_matches_finite_differences(model, case9_sys, rng):
    x = case9_sys.x_op + 0.01 * rng.normal(size=case9_sys.n)
    np.testing.assert_allclose(model.g_jacobian(x), _numeric_jacobian(model.g, x), atol=1e-5)


def test_h_jacobian_matches_finite_differences(model, case9_sys, rng):
    x = case9_sys.x_op + 0.01 * rng.normal(size=case9_sys.n)
    np.testing.assert_allclose(model.h_jacobian(x), _numeric_jacobian(model.h, x), atol=1e-5)


def test_linearize_constraints_shapes(case9, case9_sys):
    g0, jac = linearize_constraints(case9_sys.x_op, case9)
    assert g0.shape == (case9_sys.n_a,)
    assert jac.shape == (case9_sys.n_a, case9_sys.n)

# -----------------------------------------------------------------
# Zone restriction
# -----------------------------------------------------------------


def test_rows_within_full_and_empty_sets(model, case9_sys):
    everything = range(case9_sys.n)
    assert model.h_rows_within(everything).size == 48
    assert model.g_rows_within(everything).size == case9_sys.n_a
    assert model.h_rows_within([]).size == 0
    assert model.g_rows_within([]).size == 0


def test_restricted_report_uses_given_rows(model, case9_sys):
    x = case9_sys.x_op.copy()
    x[model.i_v.start + case9_sys.case.bus_index[5]] = 1.2
    rows = [model.h_labels.index("vmin_5")]
    report = model.report(x, zeta=1e3, g_rows=[], h_rows=rows)
    assert report.h_values.size == 1
    assert report.violation_count == 0
