# -*- coding: utf-8 -*-

"""CUSUM bias/threshold calibration from attack-free residuals."""

import numpy as np
import pytest

from detection.calibration import (
    CusumCalibration,
    calibrate_cusum,
    detector_from_calibration,
    false_alarm_interval,
    history_steps,
)
from detection.cusum import run_cusum
from errors import CalibrationError


@pytest.fixture
def history(rng):
    return rng.normal(scale=0.2, size=(20000, 3))


def test_false_alarm_interval_without_alarms():
    assert false_alarm_interval(np.zeros(50), 1.0, 1.0) == float("inf")


def test_aggregated_calibration_meets_target(history):
    cal = calibrate_cusum(history, m=100)
    assert cal.mode == "aggregated"
    assert cal.b > 0 and cal.tau > 0
    assert cal.achieved_interval >= 100
    assert cal.history_len == 20000
    assert cal.target_interval == 100.0


def test_threshold_is_tight(history):
    # halving τ should break the target on the held-out half
    sigma_inv = np.eye(3) / 0.04
    cal = calibrate_cusum(history, m=100, sigma_inv=sigma_inv)
    z = np.einsum("ki,ij,kj->k", history, sigma_inv, history)[10000:]
    assert run_cusum(z, cal.b, cal.tau) <= len(z) / 100
    assert run_cusum(z, cal.b, 0.5 * cal.tau) > len(z) / 100


def test_vector_calibration(history):
    cal = calibrate_cusum(history, m=100, mode="vector")
    assert cal.b.shape == (3,)
    assert cal.tau.shape == (3,)
    assert cal.achieved_interval >= 100
    det = detector_from_calibration(cal)
    assert det.mode == "vector"
    np.testing.assert_allclose(det.c, 0.0)


def test_to_dict_is_json_friendly(history):
    out = calibrate_cusum(history, m=100, mode="vector").to_dict()
    assert isinstance(out["b"], list)
    assert set(out) == {"mode", "b", "tau", "history_len", "achieved_interval", "target_interval"}


def test_detector_from_aggregated_calibration():
    cal = CusumCalibration(mode="aggregated", b=2.0, tau=8.0, history_len=100,
                           achieved_interval=120.0, target_interval=100.0)
    det = detector_from_calibration(cal, sigma_inv=np.eye(2))
    assert det.b == 2.0 and det.tau == 8.0 and det.c == 0.0


def test_short_history(rng):
    with pytest.raises(CalibrationError, match="at least"):
        calibrate_cusum(rng.normal(size=(50, 2)), m=100)


def test_non_finite_history(history):
    history[5, 1] = np.nan
    with pytest.raises(CalibrationError, match="non-finite"):
        calibrate_cusum(history, m=100, mode="vector")


def test_unknown_mode(history):
    with pytest.raises(CalibrationError, match="unknown"):
        calibrate_cusum(history, m=100, mode="windowed")


def test_history_covers_ten_intervals_per_half():
    assert history_steps(1000) == 20000
    assert history_steps(99.5) == 2000


def test_fresh_stream_keeps_the_target_rate(rng):
    # fit on 20·m samples, then count alarms on an unseen stream of 10·m
    m = 100
    sigma_inv = np.eye(3) / 0.04
    cal = calibrate_cusum(rng.normal(scale=0.2, size=(history_steps(m), 3)), m=m, sigma_inv=sigma_inv)
    fresh = rng.normal(scale=0.2, size=(10 * m, 3))
    z = np.einsum("ki,ij,kj->k", fresh, sigma_inv, fresh)
    assert run_cusum(z, cal.b, cal.tau) <= 2 * len(z) // m
