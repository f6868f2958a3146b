# -*- coding: utf-8 -*-

"""
STEALTHY CONSTRAINT-UNAWARE ATTACKS
===================================

Closed-form injections that overwrite the residual so the detector statistic
lands exactly on its stealth budget:

  aggregated CUSUM   first step  rᵀΣ⁻¹r = τ + b − c_prev   (c jumps to τ)
                     afterwards  rᵀΣ⁻¹r = b                (c stays at τ)
  vector CUSUM       |r_i| = τ_i + b_i − c_prev,i, then |r_i| = b_i
  chi-squared        rᵀΣ⁻¹r = α

The budget is shrunk by a relative STEALTH_MARGIN so round-off never pushes
the statistic over a strict threshold.

residual_mode "literal" subtracts the whole residual (every row is touched);
"masked" keeps the injection on the targeted rows only.
"""

import numpy as np

from errors import InconsistentStateError

STEALTH_MARGIN = 1e-13


def matrix_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Symmetric square root of a covariance matrix."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _targets(gamma, p: int) -> np.ndarray:
    idx = np.asarray(gamma, dtype=int).ravel()
    if idx.size == 0:
        raise ValueError("attack needs at least one targeted measurement")
    if idx.min() < 0 or idx.max() >= p:
        raise ValueError(f"targeted rows out of range for p = {p}")
    return idx


def _finish(target_residual: np.ndarray, r: np.ndarray, idx: np.ndarray, residual_mode: str) -> np.ndarray:
    a = target_residual - r
    if residual_mode == "literal":
        return a
    if residual_mode == "masked":
        out = np.zeros_like(a)
        out[idx] = a[idx]
        return out
    raise ValueError(f"unknown residual_mode '{residual_mode}'")


def energy_residual(budget: float, sigma_sqrt: np.ndarray, gamma, margin: float = STEALTH_MARGIN) -> np.ndarray:
    """Σ^{1/2} Γ (√(budget/n), …), a residual whose Σ⁻¹-energy is the budget."""
    p = sigma_sqrt.shape[0]
    idx = _targets(gamma, p)
    v = np.zeros(p)
    v[idx] = np.sqrt(budget * (1.0 - margin) / idx.size)
    return sigma_sqrt @ v


def scua_cusum_agg(
    r: np.ndarray,
    c_prev: float,
    tau: float,
    b: float,
    sigma_sqrt: np.ndarray,
    gamma,
    is_first_step: bool,
    residual_mode: str = "literal",
    margin: float = STEALTH_MARGIN,
) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    budget = tau + b - c_prev if is_first_step else b
    if budget < 0:
        raise InconsistentStateError(
            f"CUSUM statistic {c_prev:.6g} already exceeds τ + b = {tau + b:.6g}"
        )
    target = energy_residual(budget, sigma_sqrt, gamma, margin)
    return _finish(target, r, _targets(gamma, r.size), residual_mode)


def scua_cusum_vec(
    r: np.ndarray,
    c_prev: np.ndarray,
    tau: np.ndarray,
    b: np.ndarray,
    gamma,
    is_first_step: bool,
    sign_choice: str = "plus",
    margin: float = STEALTH_MARGIN,
) -> np.ndarray:
    """Per-measurement injection; untargeted rows stay zero."""
    r = np.asarray(r, dtype=float)
    idx = _targets(gamma, r.size)
    if sign_choice not in ("plus", "minus"):
        raise ValueError(f"unknown sign_choice '{sign_choice}'")
    sign = 1.0 if sign_choice == "plus" else -1.0
    c_prev, tau, b = (np.broadcast_to(np.asarray(x, dtype=float), r.shape) for x in (c_prev, tau, b))

    level = (tau + b - c_prev)[idx] if is_first_step else b[idx]
    if np.any(level < 0):
        raise InconsistentStateError("a per-measurement CUSUM statistic already exceeds τ + b")
    a = np.zeros_like(r)
    a[idx] = sign * level * (1.0 - margin) - r[idx]
    return a


def scua_chi2(
    r: np.ndarray,
    alpha: float,
    sigma_sqrt: np.ndarray,
    gamma,
    residual_mode: str = "literal",
    margin: float = STEALTH_MARGIN,
) -> np.ndarray:
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    r = np.asarray(r, dtype=float)
    target = energy_residual(alpha, sigma_sqrt, gamma, margin)
    return _finish(target, r, _targets(gamma, r.size), residual_mode)
