# -*- coding: utf-8 -*-

"""
ITERATIVE CONSTRAINT-AWARE ATTACK
=================================

Start from the constraint-unaware vector and shrink it by (1 − β) until the
attacked estimate passes every check, or give up after N_max tries and send
nothing. The checks use the exact nonlinear g and h on the zone rows and a
clone of the victim detector:

    |Σ g(x̂*)| ≤ ζ,    h(x̂*) ≤ 0,    detector statistic ≤ threshold
"""

from dataclasses import dataclass

import numpy as np

from attacks.context import AttackContext
from grid.constraints import ConstraintReport


@dataclass
class IcaaResult:
    a: np.ndarray
    iterations_used: int
    feasible: bool
    x_hat_star: np.ndarray
    report: ConstraintReport
    detector_stat: float


def icaa(
    ctx: AttackContext,
    y: np.ndarray,
    x_hat_prev: np.ndarray,
    u: np.ndarray,
    is_first_step: bool,
    initial: np.ndarray | None = None,
) -> IcaaResult:
    spec = ctx.spec
    a = ctx.scua_vector(y, x_hat_prev, u, is_first_step) if initial is None else np.asarray(initial, dtype=float)

    for i in range(1, spec.n_max + 1):
        y_star = y + a
        x_star = ctx.attacked_estimate(y_star, x_hat_prev, u)
        report = ctx.report(x_star)
        stat, stealthy = ctx.peek(ctx.attacked_residual(y_star, x_hat_prev, x_star))
        if report.feasible and stealthy:
            return IcaaResult(a, i, True, x_star, report, stat)
        a = (1.0 - spec.beta) * a

    # revert to no attack
    zero = np.zeros_like(a)
    x_star = ctx.attacked_estimate(y, x_hat_prev, u)
    stat, _ = ctx.peek(ctx.attacked_residual(y, x_hat_prev, x_star))
    return IcaaResult(zero, spec.n_max, False, x_star, ctx.report(x_star), stat)
