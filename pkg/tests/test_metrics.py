import numpy as np
import pytest

from analytics.metrics import (
    abs_error,
    compute_metrics,
    mae_series,
    mean_g_abs_sum,
    per_state_rmse,
    rmse,
    violation_rate,
    window_rmse,
)


def test_rmse_and_mae():
    truth = np.zeros((2, 2))
    est = np.array([[3.0, 4.0], [0.0, 0.0]])
    assert rmse(truth, est) == pytest.approx(np.sqrt(25 / 4))
    np.testing.assert_allclose(mae_series(truth, est), [3.5, 0.0])
    np.testing.assert_allclose(abs_error(truth, -est), [[3.0, 4.0], [0.0, 0.0]])


def test_misaligned_inputs():
    with pytest.raises(ValueError, match="aligned"):
        rmse(np.zeros((3, 2)), np.zeros((2, 2)))


def test_compute_metrics_accepts_arrays():
    out = compute_metrics(np.ones((4, 3)), np.ones((4, 3)))
    assert out["rmse"] == 0.0
    assert out["mae_series"].shape == (4,)


def test_per_state_rmse():
    frame = per_state_rmse(np.zeros((2, 2)), np.array([[1.0, 0.0], [1.0, 2.0]]))
    assert frame["state"].tolist() == ["x0", "x1"]
    np.testing.assert_allclose(frame["rmse"], [1.0, np.sqrt(2.0)])


def test_window_rmse():
    truth = np.zeros((4, 1))
    est = np.array([[5.0], [5.0], [1.0], [1.0]])
    assert window_rmse(truth, est, 2) == pytest.approx(1.0)
    assert np.isnan(window_rmse(truth, est, 4))


def test_violation_rate_and_g_sum():
    assert violation_rate([0, 2, 0, 1, 0, 0], start=1) == 0.4
    assert violation_rate([], start=0) == 0.0
    assert mean_g_abs_sum([np.nan, 0.2, 0.4]) == pytest.approx(0.3)
    assert np.isnan(mean_g_abs_sum([np.nan]))
