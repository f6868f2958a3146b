# -*- coding: utf-8 -*-

"""
JOINT NDAE OBSERVER
===================

    E x̂̇ = A x̂ + f(x̂) + B_u u + B_w q̄ + L (y − C x̂)

stepped with the same trapezoidal scheme as the plant. The nonlinearity is
evaluated at the estimate and y is held constant over the step.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_solve

from errors import CalibrationError, GainError, GridLabError, StageError
from grid.descriptor import DescriptorSystem
from simulation.integrator import NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE, trapezoidal_solve

SIGMA_RIDGE = 1e-8
MIN_HISTORY_PER_MEASUREMENT = 10


@dataclass(frozen=True)
class ObserverConfig:
    gain: np.ndarray
    dt: float
    initial_estimate: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise GainError(f"observer dt must be positive, got {self.dt}")
        n = np.size(self.initial_estimate)
        if np.ndim(self.gain) != 2 or np.shape(self.gain)[0] != n:
            raise GainError(f"gain must be {n}×p, got shape {np.shape(self.gain)}")


@dataclass
class EstimateTrace:
    estimates: np.ndarray     # (K+1)×n
    residuals: np.ndarray     # (K+1)×p, y*_k − C x̂_k
    error_norms: np.ndarray   # (K+1,), NaN without ground truth

    def __len__(self) -> int:
        return self.estimates.shape[0]


def residual(y: np.ndarray, x_hat: np.ndarray, C: np.ndarray) -> np.ndarray:
    return y - C @ x_hat


def _observer_solve(sys, gain, x_hat, y, u, q_bar, dt, tolerance, max_iterations):
    forcing = sys.B_u @ u + sys.B_w @ q_bar + gain @ y
    gain_c = gain @ sys.C

    def rhs(z):
        return sys.A @ z + sys.f(z) + forcing - gain_c @ z

    def jac(z):
        return sys.jacobian(z) - gain_c

    return trapezoidal_solve(
        rhs, jac, sys.differential_mask, x_hat, dt,
        tolerance=tolerance, max_iterations=max_iterations,
    )


def observer_step(
    sys: DescriptorSystem,
    cfg: ObserverConfig,
    x_hat: np.ndarray,
    y: np.ndarray,
    u: np.ndarray,
    q_bar: np.ndarray,
    dt: float | None = None,
    tolerance: float = NEWTON_TOLERANCE,
    max_iterations: int = NEWTON_MAX_ITERATIONS,
) -> np.ndarray:
    dt = cfg.dt if dt is None else dt
    return _observer_solve(sys, cfg.gain, x_hat, y, u, q_bar, dt, tolerance, max_iterations).x


def observer_step_sensitivity(
    sys: DescriptorSystem,
    cfg: ObserverConfig,
    x_hat: np.ndarray,
    y: np.ndarray,
    u: np.ndarray,
    q_bar: np.ndarray,
    dt: float | None = None,
):
    """Observer step plus S = ∂x̂⁺/∂y at the accepted point."""
    dt = cfg.dt if dt is None else dt
    result = _observer_solve(sys, cfg.gain, x_hat, y, u, q_bar, dt,
                             NEWTON_TOLERANCE, NEWTON_MAX_ITERATIONS)
    d = sys.differential_mask
    d_res_dy = np.empty_like(cfg.gain)
    d_res_dy[d] = -dt * cfg.gain[d]
    d_res_dy[~d] = cfg.gain[~d]
    return result.x, -lu_solve(result.lu, d_res_dy)


def run_observer(
    sys: DescriptorSystem,
    cfg: ObserverConfig,
    measurements: np.ndarray,
    inputs: np.ndarray,
    q_bar: np.ndarray | None = None,
    truth: np.ndarray | None = None,
) -> EstimateTrace:
    """Attack-free pass over a measurement stream; x̂_0 is the configured initial estimate."""
    q_bar = sys.q_bar if q_bar is None else q_bar
    k_total = measurements.shape[0]
    estimates = np.empty((k_total, sys.n))
    x_hat = np.asarray(cfg.initial_estimate, dtype=float).copy()
    estimates[0] = x_hat
    for k in range(1, k_total):
        try:
            x_hat = observer_step(sys, cfg, x_hat, measurements[k], inputs[k - 1], q_bar)
        except GridLabError as exc:
            raise StageError("observer", k, exc) from exc
        estimates[k] = x_hat
    residuals = measurements - estimates @ sys.C.T
    if truth is None:
        errors = np.full(k_total, np.nan)
    else:
        errors = np.linalg.norm(truth - estimates, axis=1)
    return EstimateTrace(estimates=estimates, residuals=residuals, error_norms=errors)


def estimate_sigma(history: np.ndarray, ridge: float = SIGMA_RIDGE) -> np.ndarray:
    """Residual covariance from attack-free history (rows are time steps)."""
    history = np.atleast_2d(np.asarray(history, dtype=float))
    k, p = history.shape
    if k < MIN_HISTORY_PER_MEASUREMENT * p:
        raise CalibrationError(
            f"need at least {MIN_HISTORY_PER_MEASUREMENT * p} residual samples for p = {p}, got {k}"
        )
    sigma = np.cov(history, rowvar=False).reshape(p, p)
    sigma = 0.5 * (sigma + sigma.T)
    return sigma + ridge * np.eye(p)
