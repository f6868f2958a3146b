# -*- coding: utf-8 -*-

"""
POST-SE ATTACK PROPAGATION
==========================

When the detector sees the residual after the estimator has absorbed the
falsified measurement, an injection a moves that residual by M a. To land on
a desired post-SE residual ρ the attacker sends a = M⁻¹(ρ − r).

  observer   M = I − dt·C·L    (one Euler step of the observer update)
  printed    M = I + dt·C·L
  sensitivity  M = I − C·S, S = ∂x̂⁺/∂y from the implicit observer step
"""

import numpy as np

from errors import AttackSynthesisError

MAX_CONDITION = 1e12


def post_se_matrix(
    L: np.ndarray,
    C: np.ndarray,
    dt: float,
    sign: str = "observer",
    sensitivity: np.ndarray | None = None,
) -> np.ndarray:
    p = C.shape[0]
    if sign == "observer":
        return np.eye(p) - dt * C @ L
    if sign == "printed":
        return np.eye(p) + dt * C @ L
    if sign == "sensitivity":
        if sensitivity is None:
            raise AttackSynthesisError("sensitivity propagation needs the observer sensitivity matrix")
        return np.eye(p) - C @ sensitivity
    raise ValueError(f"unknown post-SE sign '{sign}'")


def propagate_post_se(
    a_target: np.ndarray,
    r: np.ndarray,
    L: np.ndarray,
    C: np.ndarray,
    dt: float,
    sign: str = "observer",
    sensitivity: np.ndarray | None = None,
) -> np.ndarray:
    """Injection that moves the post-SE residual r onto a_target."""
    M = post_se_matrix(L, C, dt, sign, sensitivity)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise AttackSynthesisError(f"post-SE propagation matrix is ill-conditioned (cond {cond:.3e})")
    return np.linalg.solve(M, np.asarray(a_target, dtype=float) - np.asarray(r, dtype=float))
