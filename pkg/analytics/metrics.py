import numpy as np
import pandas as pd


# ---------- CORE METRICS ----------

def _aligned(truth, estimates):
    truth = np.asarray(truth, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if truth.shape != estimates.shape:
        raise ValueError(f"truth {truth.shape} and estimates {estimates.shape} are not aligned")
    return truth, estimates


def rmse(truth, estimates):
    """Root mean square error over every step and every state."""
    truth, estimates = _aligned(truth, estimates)
    if truth.size == 0:
        return 0.0
    return float(np.sqrt(np.mean((estimates - truth) ** 2)))


def mae_series(truth, estimates):
    """Mean absolute error across states, one value per step."""
    truth, estimates = _aligned(truth, estimates)
    return np.mean(np.abs(estimates - truth), axis=1)


def abs_error(truth, estimates):
    truth, estimates = _aligned(truth, estimates)
    return np.abs(estimates - truth)


def compute_metrics(truth, est):
    """Metric fragment of a scenario result from a Trajectory and an EstimateTrace."""
    states = truth.states if hasattr(truth, "states") else truth
    estimates = est.estimates if hasattr(est, "estimates") else est
    return {
        "rmse": rmse(states, estimates),
        "mae_series": mae_series(states, estimates),
        "abs_error": abs_error(states, estimates),
    }


# ---------- BREAKDOWNS ----------

def per_state_rmse(truth, estimates, names=None):
    truth, estimates = _aligned(truth, estimates)
    values = np.sqrt(np.mean((estimates - truth) ** 2, axis=0))
    names = names or [f"x{i}" for i in range(values.size)]
    return pd.DataFrame({"state": names, "rmse": values})


def window_rmse(truth, estimates, start):
    """RMSE restricted to steps k ≥ start (post-attack window)."""
    truth, estimates = _aligned(truth, estimates)
    if start >= truth.shape[0]:
        return float("nan")
    return rmse(truth[start:], estimates[start:])


def violation_rate(violations, start=0):
    violations = np.asarray(violations)[start:]
    if violations.size == 0:
        return 0.0
    return round(float(np.mean(violations > 0)), 4)


def mean_g_abs_sum(g_abs_sum, start=0):
    values = np.asarray(g_abs_sum, dtype=float)[start:]
    values = values[np.isfinite(values)]
    if values.size == 0:
        return float("nan")
    return float(values.mean())
