# -*- coding: utf-8 -*-

"""
OBSERVER GAIN
=============

Either loaded from a CSV file (header line "n p", then n comma-separated rows
of p values) or synthesized at the operating point:

  1. Linearize, inject L_a = −κ J_aa C_a^† on the algebraic rows and eliminate
     the algebraic states, giving a reduced pair (A_red, C_red).
  2. Solve a filter Riccati equation on (A_red + αI, C_red), α a multiple of
     the slowest nonzero plant mode, so every error mode decays at least
     that fast. Differential states invisible to the outputs and to every
     other state get zero gain rows.
  3. Check the gain on a zero-noise run started from a rotated estimate.

Synthesized gains are only trusted after the validation run passes.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.linalg import solve_continuous_are

from config.app_config import log, resolve_path
from errors import GainError, GridLabError
from estimation.observer import ObserverConfig, observer_step
from grid.descriptor import DescriptorSystem
from simulation.simulator import step_count

MAX_SHIFT_HALVINGS = 20
DIVERGENCE_FACTOR = 10.0
STRUCTURAL_ZERO = 1e-12


@dataclass(frozen=True)
class GainValidation:
    passed: bool
    initial_error: float
    final_error: float
    reason: str = ""

# ============================================================
# FILE FORMAT
# ============================================================


def load_gain(path: str | Path, n: int, p: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise GainError(f"gain file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
    try:
        n_file, p_file = (int(tok) for tok in header)
    except ValueError:
        raise GainError(f"{path}: first line must be 'n p', got {' '.join(header)!r}") from None
    if (n_file, p_file) != (n, p):
        raise GainError(f"{path}: gain is {n_file}×{p_file}, system needs {n}×{p}")
    try:
        gain = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise GainError(f"{path}: {exc}") from None
    if gain.shape != (n, p):
        raise GainError(f"{path}: header says {n}×{p} but body is {gain.shape[0]}×{gain.shape[1]}")
    if not np.all(np.isfinite(gain)):
        raise GainError(f"{path}: gain contains non-finite entries")
    return gain


def save_gain(path: str | Path, gain: np.ndarray):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, p = gain.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {p}\n")
        np.savetxt(fh, gain, delimiter=",", fmt="%.17g")

# ============================================================
# SYNTHESIS
# ============================================================


def _split(sys: DescriptorSystem, jac: np.ndarray):
    d = sys.differential_mask
    a = ~d
    return (
        jac[np.ix_(d, d)], jac[np.ix_(d, a)], jac[np.ix_(a, d)], jac[np.ix_(a, a)],
        sys.C[:, d], sys.C[:, a],
    )


def slowest_plant_rate(sys: DescriptorSystem, x_lin: np.ndarray | None = None) -> float:
    """|Re λ| of the slowest nonzero mode of the algebraically reduced plant."""
    x_lin = sys.x_op if x_lin is None else x_lin
    j_dd, j_da, j_ad, j_aa, _, _ = _split(sys, sys.jacobian(x_lin))
    a_red = j_dd - j_da @ np.linalg.solve(j_aa, j_ad)
    rates = np.abs(np.linalg.eigvals(a_red).real)
    scale = max(1.0, float(rates.max(initial=0.0)))
    nonzero = rates[rates > 1e-8 * scale]
    return float(nonzero.min()) if nonzero.size else 1.0


def synthesize_gain(
    sys: DescriptorSystem,
    pole_factor: float = 5.0,
    algebraic_blend: float = 0.5,
    measurement_weight: float = 1.0,
    x_lin: np.ndarray | None = None,
) -> np.ndarray:
    if sys.p == 0:
        raise GainError("system has no measurements")
    if algebraic_blend < 0:
        raise GainError(f"algebraic_blend must be nonnegative, got {algebraic_blend}")
    if measurement_weight <= 0:
        raise GainError(f"measurement_weight must be positive, got {measurement_weight}")

    x_lin = sys.x_op if x_lin is None else x_lin
    d_idx = np.flatnonzero(sys.differential_mask)
    a_idx = np.flatnonzero(~sys.differential_mask)
    j_dd, j_da, j_ad, j_aa, c_d, c_a = _split(sys, sys.jacobian(x_lin))

    l_a = -algebraic_blend * j_aa @ np.linalg.pinv(c_a)
    try:
        elim = np.linalg.solve(j_aa - l_a @ c_a, j_ad)
    except np.linalg.LinAlgError:
        raise GainError("algebraic block is singular at the linearization point") from None
    a_red = j_dd - j_da @ elim
    c_red = c_d - c_a @ elim

    # states that neither reach an output nor drive another state
    off_diag = np.abs(a_red - np.diag(np.diag(a_red)))
    isolated = (np.abs(c_red).max(axis=0) < STRUCTURAL_ZERO) & (off_diag.max(axis=0) < STRUCTURAL_ZERO)
    keep = ~isolated
    a_k = a_red[np.ix_(keep, keep)]
    c_k = c_red[:, keep]
    n_k = a_k.shape[0]

    alpha = pole_factor * slowest_plant_rate(sys, x_lin)
    q_mat = np.eye(n_k)
    r_mat = measurement_weight * np.eye(sys.p)
    riccati = None
    for _ in range(MAX_SHIFT_HALVINGS + 1):
        try:
            riccati = solve_continuous_are((a_k + alpha * np.eye(n_k)).T, c_k.T, q_mat, r_mat)
            if np.all(np.isfinite(riccati)):
                break
        except (np.linalg.LinAlgError, ValueError):
            pass
        riccati = None
        alpha *= 0.5
    if riccati is None:
        raise GainError("observer Riccati equation has no stabilizing solution")

    gain = np.zeros((sys.n, sys.p))
    gain[d_idx[keep]] = riccati @ c_k.T / measurement_weight
    gain[a_idx] = l_a
    log(f"Observer gain | synthesized | decay shift {alpha:.4g} 1/s | "
        f"{int(isolated.sum())} unobservable rows zeroed | max |L| {np.abs(gain).max():.3g}")
    return gain

# ============================================================
# VALIDATION
# ============================================================


def validate_gain(
    sys: DescriptorSystem,
    gain: np.ndarray,
    dt: float,
    horizon: float = 10.0,
    angle_offset: float = 0.05,
    decay_ratio: float = 0.9,
) -> GainValidation:
    """Zero-noise run at the operating point from an estimate with every angle rotated."""
    lay = sys.layout
    x_true = sys.x_op
    y = sys.C @ x_true
    x_hat = x_true.copy()
    x_hat[lay.block("delta")] += angle_offset
    x_hat[lay.block("theta")] += angle_offset

    initial = float(np.linalg.norm(x_hat - x_true))
    cfg = ObserverConfig(gain=gain, dt=dt, initial_estimate=x_hat)
    error = initial
    for _ in range(step_count(dt, horizon)):
        try:
            x_hat = observer_step(sys, cfg, x_hat, y, sys.u_op, sys.q_bar)
        except GridLabError as exc:
            return GainValidation(False, initial, float("nan"), f"observer step failed: {exc}")
        error = float(np.linalg.norm(x_hat - x_true))
        if not np.isfinite(error) or error > DIVERGENCE_FACTOR * initial:
            return GainValidation(False, initial, error, "estimation error diverged")

    if error >= decay_ratio * initial:
        return GainValidation(False, initial, error,
                              f"error only fell to {error / initial:.3f} of its initial value")
    return GainValidation(True, initial, error)


def load_or_synthesize_gain(sys: DescriptorSystem, dt: float, config: Mapping) -> np.ndarray:
    """Observer gain per the `observer` settings block."""
    gain_file = config.get("gain_file")
    if gain_file:
        gain = load_gain(resolve_path(gain_file), sys.n, sys.p)
        log(f"Observer gain | loaded {gain.shape[0]}×{gain.shape[1]} from {gain_file}")
        return gain

    gain = synthesize_gain(
        sys,
        pole_factor=config.get("pole_factor", 5.0),
        algebraic_blend=config.get("algebraic_blend", 0.5),
        measurement_weight=config.get("measurement_weight", 1.0),
    )
    check = validate_gain(
        sys, gain, dt,
        horizon=config.get("validation_horizon", 10.0),
        angle_offset=config.get("validation_angle_offset", 0.05),
        decay_ratio=config.get("validation_decay_ratio", 0.9),
    )
    if not check.passed:
        raise GainError(f"synthesized gain failed validation: {check.reason}")
    log(f"Observer gain | validated | error {check.initial_error:.4f} → {check.final_error:.2e}")
    return gain
