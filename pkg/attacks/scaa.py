# -*- coding: utf-8 -*-

"""
OPTIMIZATION-BASED CONSTRAINT-AWARE ATTACK
==========================================

    maximize   Σ_i |a_i|                      over the targeted rows
    subject to x̂* ≈ x̂*_0 + S a                 (S = ∂x̂*/∂y on the targets)
               |1ᵀ g_L(x̂*)| ≤ ζ                 (zone g rows, linearized at x0)
               h_L(x̂*) ≤ 0                      (zone h rows, linearized at x0)
               detector statistic ≤ threshold

The attacked residual on a targeted row stays on the configured sign's half of
the detector box, so the optimum pushes the estimate the same way the
closed-form vector does. In "literal" residual_mode the untargeted rows are
first driven to a zero residual, as the closed-form attacks do, and only the
targeted rows are optimized.

The absolute values are split exactly with one binary per target
(a = a⁺ − a⁻, a⁺ ≤ U z, a⁻ ≤ U (1 − z)) and solved with scipy's MILP.
The quadratic χ² / aggregated-CUSUM constraint becomes a box on the attacked
residual, inscribed in the ellipsoid; for a non-diagonal Σ (or a post-SE
residual) the box is shrunk by bisection until the true quadratic holds.
Vector CUSUM is already a box.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from attacks.context import AttackContext
from attacks.propagation import propagate_post_se
from detection.chi2 import Chi2Detector
from detection.monitor import stealth_budget, vector_budget
from errors import AttackSynthesisError

BIG_M_FACTOR = 10.0
BISECTION_STEPS = 20
BOX_MARGIN = 1e-12
RELINEARIZE_EVERY = 50
RELINEARIZE_DISTANCE = 0.05


@dataclass
class Linearization:
    x0: np.ndarray
    g0: np.ndarray
    g_jac: np.ndarray
    h0: np.ndarray
    h_jac: np.ndarray
    k: int


@dataclass
class ScaaResult:
    a: np.ndarray
    status: str            # optimal | infeasible
    objective: float
    box_scale: float


class LinearizationCache:
    """Holds the current expansion point; refreshed on a step cadence or when the estimate drifts."""

    def __init__(self, ctx: AttackContext, every: int = RELINEARIZE_EVERY,
                 distance: float = RELINEARIZE_DISTANCE):
        self.ctx = ctx
        self.every = every
        self.distance = distance
        self.current: Linearization | None = None
        self.refreshes = 0

    def get(self, x_hat: np.ndarray, k: int) -> Linearization:
        cur = self.current
        stale = (
            cur is None
            or k - cur.k >= self.every
            or np.linalg.norm(x_hat - cur.x0) > self.distance
        )
        if stale:
            model = self.ctx.constraints
            g_rows = self.ctx.g_rows if self.ctx.g_rows is not None else slice(None)
            h_rows = self.ctx.h_rows if self.ctx.h_rows is not None else slice(None)
            x0 = np.array(x_hat, dtype=float)
            self.current = Linearization(
                x0=x0,
                g0=model.g(x0)[g_rows],
                g_jac=model.g_jacobian(x0)[g_rows],
                h0=model.h(x0)[h_rows],
                h_jac=model.h_jacobian(x0)[h_rows],
                k=k,
            )
            self.refreshes += 1
        return self.current


def _detector_box(ctx: AttackContext, r0: np.ndarray):
    """(rows, half-widths) of the residual box, plus the ellipsoid budget when one applies."""
    det = ctx.detector
    targets = ctx.targets
    p = r0.size
    post = ctx.spec.placement == "post_se"

    if not isinstance(det, Chi2Detector) and det.mode == "vector":
        budget = vector_budget(det)
        rows = np.arange(p) if post else targets
        # rows already over budget alarm whatever the attacker does
        targeted = set(targets.tolist())
        rows = np.array([j for j in rows if j in targeted or abs(r0[j]) <= budget[j]], dtype=int)
        return rows, budget[rows] * (1.0 - BOX_MARGIN), None

    budget = stealth_budget(det)
    untargeted = r0.copy()
    untargeted[targets] = 0.0
    spare = budget - float(untargeted @ np.linalg.solve(ctx.sigma, untargeted))
    if spare <= 0:
        return targets, None, budget
    sd = np.sqrt(np.diag(ctx.sigma)[targets])
    return targets, sd * np.sqrt(spare * (1.0 - BOX_MARGIN) / targets.size), budget


def _residual_bounds(ctx, r0, rows, half):
    """Bounds on R a so the attacked residual stays in its (signed) box."""
    lower, upper = -half - r0[rows], half - r0[rows]
    targeted = np.isin(rows, ctx.targets)
    if ctx.spec.sign == "plus":
        lower = np.where(targeted, -r0[rows], lower)
    else:
        upper = np.where(targeted, -r0[rows], upper)
    return lower, upper


def _solve(ctx, r0, response, rows, widths, g_const, g_row, h_rhs, h_mat, scale):
    n_t = ctx.targets.size
    R = response[rows]
    half = widths * scale
    upper = BIG_M_FACTOR * (np.max(half) + np.max(np.abs(r0[rows]))) + 1e-9
    U = np.full(n_t, upper)
    box_lo, box_hi = _residual_bounds(ctx, r0, rows, half)

    def on_a(mat):
        return np.hstack([mat, -mat, np.zeros((mat.shape[0], n_t))])

    blocks = [
        LinearConstraint(np.hstack([np.eye(n_t), np.zeros((n_t, n_t)), -np.diag(U)]), -np.inf, 0.0),
        LinearConstraint(np.hstack([np.zeros((n_t, n_t)), np.eye(n_t), np.diag(U)]), -np.inf, U),
        LinearConstraint(on_a(R), box_lo, box_hi),
        LinearConstraint(on_a(g_row[None, :]), -ctx.spec.zeta - g_const, ctx.spec.zeta - g_const),
    ]
    if h_mat.shape[0]:
        blocks.append(LinearConstraint(on_a(h_mat), -np.inf, h_rhs))

    cost = np.concatenate([-np.ones(2 * n_t), np.zeros(n_t)])
    integrality = np.concatenate([np.zeros(2 * n_t), np.ones(n_t)])
    bounds = Bounds(np.zeros(3 * n_t), np.concatenate([U, U, np.ones(n_t)]))
    res = milp(cost, integrality=integrality, bounds=bounds, constraints=blocks)
    if res.status == 2:
        return None
    if res.status != 0 or res.x is None:
        raise AttackSynthesisError(f"SCAA solver failed: {res.message}")
    a_t = res.x[:n_t] - res.x[n_t: 2 * n_t]
    return a_t


def _untargeted_part(ctx: AttackContext, r0: np.ndarray, sens: np.ndarray):
    """Injection that zeroes the untargeted residual in literal mode; zero otherwise."""
    p = r0.size
    det = ctx.detector
    vector_cusum = not isinstance(det, Chi2Detector) and det.mode == "vector"
    if ctx.spec.residual_mode != "literal" or vector_cusum:
        return np.zeros(p)
    kept = np.zeros(p)
    kept[ctx.targets] = r0[ctx.targets]
    if ctx.spec.placement == "pre_se":
        return kept - r0
    try:
        return propagate_post_se(kept, r0, ctx.observer.gain, ctx.sys.C, ctx.observer.dt,
                                 sign="sensitivity", sensitivity=sens)
    except AttackSynthesisError:
        # a singular post-SE response cannot reach a chosen residual
        return np.zeros(p)


def scaa_optimize(
    ctx: AttackContext,
    y: np.ndarray,
    x_hat_prev: np.ndarray,
    u: np.ndarray,
    lin: Linearization,
) -> ScaaResult:
    """Largest stealthy, zone-feasible injection under the linearized model; zero when infeasible."""
    sys = ctx.sys
    targets = ctx.targets
    p = sys.p
    zero = np.zeros(p)

    x_clean, sens = ctx.sensitivity(y, x_hat_prev, u)

    if ctx.spec.placement == "pre_se":
        r0 = y - sys.C @ x_hat_prev
        response_full = np.eye(p)
    else:
        r0 = y - sys.C @ x_clean
        response_full = np.eye(p) - sys.C @ sens
    response = response_full[:, targets]

    a_fixed = _untargeted_part(ctx, r0, sens)
    r1 = r0 + response_full @ a_fixed
    x_base = x_clean + sens @ a_fixed

    # linearized g and h along the attacked estimate
    s_t = sens[:, targets]
    shift = x_base - lin.x0
    ones = np.ones(lin.g0.size)
    g_const = float(ones @ (lin.g0 + lin.g_jac @ shift))
    g_row = ones @ lin.g_jac @ s_t
    h_mat = lin.h_jac @ s_t
    h_rhs = -(lin.h0 + lin.h_jac @ shift)

    rows, widths, ellipsoid = _detector_box(ctx, r1)
    if widths is None:
        return ScaaResult(zero, "infeasible", 0.0, 0.0)

    def quadratic_ok(a_t):
        if ellipsoid is None:
            return True
        r_star = r1 + response @ a_t
        return float(r_star @ np.linalg.solve(ctx.sigma, r_star)) <= ellipsoid

    def attempt(scale):
        return _solve(ctx, r1, response, rows, widths, g_const, g_row, h_rhs, h_mat, scale)

    scale = 1.0
    a_t = attempt(scale)
    if a_t is not None and not quadratic_ok(a_t):
        lo, hi, best = 0.0, 1.0, None
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            cand = attempt(mid)
            if cand is not None and quadratic_ok(cand):
                lo, best = mid, cand
            else:
                hi = mid
        a_t, scale = best, lo

    if a_t is None:
        return ScaaResult(zero, "infeasible", 0.0, scale)
    a = a_fixed.copy()
    a[targets] += a_t
    return ScaaResult(a, "optimal", float(np.abs(a_t).sum()), scale)
