# -*- coding: utf-8 -*-

"""
CUSUM CALIBRATION
=================

From attack-free residual history:
  - b = mean + one std of the distance stream on the first half
  - τ = smallest threshold whose false-alarm interval on the second half
    is at least m steps (no alarms counts as an infinite interval)

The held-out half should span HELD_OUT_FACTOR·m steps; the runner sizes the
attack-free calibration run from that.

Vector mode calibrates each measurement on its own |r_i| stream.
"""

from dataclasses import asdict, dataclass

import numpy as np

from config.app_config import log
from detection.cusum import CusumDetector, run_cusum
from errors import CalibrationError
from estimation.observer import estimate_sigma

MIN_HISTORY = 10
HELD_OUT_FACTOR = 10
MAX_GRID_STEPS = 200
BISECTION_STEPS = 60
MIN_BIAS = 1e-12


@dataclass(frozen=True)
class CusumCalibration:
    mode: str
    b: float | np.ndarray
    tau: float | np.ndarray
    history_len: int
    achieved_interval: float
    target_interval: float

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("b", "tau"):
            if isinstance(out[key], np.ndarray):
                out[key] = out[key].tolist()
        return out


def history_steps(m: float) -> int:
    """Samples for a held-out half of HELD_OUT_FACTOR·m steps."""
    return 2 * HELD_OUT_FACTOR * int(np.ceil(m))


def false_alarm_interval(z: np.ndarray, b: float, tau: float) -> float:
    alarms = run_cusum(z, b, tau)
    return float("inf") if alarms == 0 else len(z) / alarms


def _calibrate_stream(z: np.ndarray, m: float, label: str):
    if not np.all(np.isfinite(z)):
        raise CalibrationError(f"{label}: residual history contains non-finite values")
    half = len(z) // 2
    fit, held = z[:half], z[half:]
    b = max(float(fit.mean() + fit.std()), MIN_BIAS)

    def ok(tau):
        return false_alarm_interval(held, b, tau) >= m

    lo = 0.0
    hi = 1e-6 * max(b, 1.0)
    for _ in range(MAX_GRID_STEPS):
        if ok(hi):
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise CalibrationError(f"{label}: no threshold up to {hi:.3e} reaches a false-alarm interval of {m}")

    if lo > 0.0:
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-9 * hi:
                break
    return b, hi, false_alarm_interval(held, b, hi)


def calibrate_cusum(
    history: np.ndarray,
    m: float,
    mode: str = "aggregated",
    sigma_inv: np.ndarray | None = None,
) -> CusumCalibration:
    """Choose (b, τ) from residual history (rows are steps)."""
    history = np.asarray(history, dtype=float)
    if history.ndim == 1:
        history = history[:, None]
    k = history.shape[0]
    if k < max(MIN_HISTORY, m):
        raise CalibrationError(f"need at least {max(MIN_HISTORY, int(m))} residual samples, got {k}")
    if k < history_steps(m):
        log(f"WARNING | CUSUM calibration on {k} samples; {history_steps(m)} recommended for m = {m}")

    if mode == "aggregated":
        if sigma_inv is None:
            sigma_inv = np.linalg.inv(estimate_sigma(history))
        z = np.einsum("ki,ij,kj->k", history, sigma_inv, history)
        b, tau, interval = _calibrate_stream(z, m, "aggregated")
    elif mode == "vector":
        fitted = [_calibrate_stream(np.abs(history[:, i]), m, f"measurement {i}") for i in range(history.shape[1])]
        b = np.array([f[0] for f in fitted])
        tau = np.array([f[1] for f in fitted])
        interval = float(min(f[2] for f in fitted))
    else:
        raise CalibrationError(f"unknown CUSUM mode '{mode}'")

    result = CusumCalibration(mode=mode, b=b, tau=tau, history_len=k,
                              achieved_interval=interval, target_interval=float(m))
    if mode == "aggregated":
        log(f"CUSUM calibration | b {b:.4g} | tau {tau:.4g} | interval {interval:.4g} on {k} samples")
    else:
        log(f"CUSUM calibration | vector | mean b {np.mean(b):.4g} | mean tau {np.mean(tau):.4g} | min interval {interval:.4g}")
    return result


def detector_from_calibration(cal: CusumCalibration, sigma_inv: np.ndarray | None = None) -> CusumDetector:
    return CusumDetector(mode=cal.mode, b=cal.b, tau=cal.tau, sigma_inv=sigma_inv)
