# -*- coding: utf-8 -*-

"""
IMPLICIT TRAPEZOIDAL DAE STEP
=============================

Differential rows:  x⁺_d − x_d − dt/2 (G_d(x) + G_d(x⁺)) = 0
Algebraic rows:     G_a(x⁺) = 0

solved together by Newton's method. G is the full right-hand side, so the
plant (G = A x + f(x) + B_u u + B_w q + w) and the observer
(G = … + L(y − C x)) share the same solver.

A failed step is split in half until it converges or reaches the minimum
step size.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from errors import ConvergenceError, StepSizeError
from grid.descriptor import DescriptorSystem

NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITERATIONS = 25
MIN_DT = 1e-4


@dataclass
class StepResult:
    x: np.ndarray
    iterations: int
    residual: float
    # LU factors of the step Jacobian at the accepted point
    lu: tuple


def trapezoidal_solve(
    rhs: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    diff_mask: np.ndarray,
    x: np.ndarray,
    dt: float,
    tolerance: float = NEWTON_TOLERANCE,
    max_iterations: int = NEWTON_MAX_ITERATIONS,
    min_dt: float = MIN_DT,
) -> StepResult:
    if not dt >= min_dt:
        raise StepSizeError(f"step size {dt} below minimum {min_dt}")

    x = np.asarray(x, dtype=float)
    g_old = rhs(x)
    d = diff_mask
    half = 0.5 * dt

    def residual(z, g_new):
        r = np.empty_like(z)
        r[d] = z[d] - x[d] - half * (g_old[d] + g_new[d])
        r[~d] = g_new[~d]
        return r

    z = x.copy()
    g_new = g_old
    res = residual(z, g_new)
    norm = float(np.max(np.abs(res)))
    lu = None
    iterations = 0

    while True:
        j = jac(z)
        j_step = j.copy()
        j_step[d] *= -half
        j_step[d, :] += np.eye(z.size)[d]
        lu = lu_factor(j_step)
        if norm < tolerance:
            break
        if iterations >= max_iterations:
            raise ConvergenceError(f"Newton step did not converge in {max_iterations} iterations", norm)
        z = z - lu_solve(lu, res)
        g_new = rhs(z)
        res = residual(z, g_new)
        norm = float(np.max(np.abs(res)))
        iterations += 1
        if not np.isfinite(norm):
            raise ConvergenceError("Newton step diverged", norm)

    return StepResult(x=z, iterations=iterations, residual=norm, lu=lu)


def step(
    sys: DescriptorSystem,
    x: np.ndarray,
    u: np.ndarray,
    q: np.ndarray,
    dt: float,
    process_noise: np.ndarray | None = None,
    tolerance: float = NEWTON_TOLERANCE,
    max_iterations: int = NEWTON_MAX_ITERATIONS,
    min_dt: float = MIN_DT,
) -> np.ndarray:
    """Advance the plant one step; noise is held constant over the step.

    A step whose Newton solve fails is retried as two half steps, recursively,
    until the step would drop below min_dt.
    """
    forcing = sys.B_u @ u + sys.B_w @ q
    if process_noise is not None:
        forcing = forcing + process_noise

    def rhs(z):
        return sys.A @ z + sys.f(z) + forcing

    return advance(rhs, sys.jacobian, sys.differential_mask, x, dt, tolerance, max_iterations, min_dt)


def advance(rhs, jac, diff_mask, x, dt, tolerance=NEWTON_TOLERANCE,
            max_iterations=NEWTON_MAX_ITERATIONS, min_dt=MIN_DT) -> np.ndarray:
    try:
        return trapezoidal_solve(rhs, jac, diff_mask, x, dt, tolerance, max_iterations, min_dt).x
    except ConvergenceError as exc:
        half = 0.5 * dt
        if half < min_dt:
            raise StepSizeError(
                f"step of {dt:.3e} s failed and halving would go below {min_dt:.1e} s: {exc}"
            ) from exc
    mid = advance(rhs, jac, diff_mask, x, half, tolerance, max_iterations, min_dt)
    return advance(rhs, jac, diff_mask, mid, half, tolerance, max_iterations, min_dt)
