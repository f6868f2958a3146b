# -*- coding: utf-8 -*-

"""
NETWORK EQUATIONS
=================

Admittance matrix, branch admittances, bus power injections with their
analytic Jacobians, and the Newton-Raphson power flow used to place the
system at its pre-attack operating point.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from config.app_config import log
from errors import CaseValidationError, ConvergenceError
from grid.case_parser import GridCase

REACTIVE_FORMS = ("standard", "printed")

# ============================================================
# ADMITTANCES
# ============================================================


@dataclass(frozen=True)
class BranchAdmittances:
    from_idx: np.ndarray
    to_idx: np.ndarray
    y_ff: np.ndarray
    y_ft: np.ndarray
    y_tf: np.ndarray
    y_tt: np.ndarray
    rating: np.ndarray


@lru_cache(maxsize=32)
def branch_admittances(case: GridCase) -> BranchAdmittances:
    idx = case.bus_index
    n_line = len(case.lines)
    y_ff = np.zeros(n_line, dtype=complex)
    y_ft = np.zeros(n_line, dtype=complex)
    y_tf = np.zeros(n_line, dtype=complex)
    y_tt = np.zeros(n_line, dtype=complex)

    for k, ln in enumerate(case.lines):
        if ln.r == 0 and ln.x == 0:
            raise CaseValidationError(f"zero-impedance line {ln.from_bus}-{ln.to_bus}")
        y_series = 1.0 / complex(ln.r, ln.x)
        charging = 0.5j * ln.b_shunt
        # off-nominal tap sits on the from side
        y_tt[k] = y_series + charging
        y_ff[k] = y_tt[k] / ln.tap**2
        y_ft[k] = -y_series / ln.tap
        y_tf[k] = -y_series / ln.tap

    result = BranchAdmittances(
        from_idx=np.array([idx[ln.from_bus] for ln in case.lines], dtype=int),
        to_idx=np.array([idx[ln.to_bus] for ln in case.lines], dtype=int),
        y_ff=y_ff, y_ft=y_ft, y_tf=y_tf, y_tt=y_tt,
        rating=np.array([ln.rating for ln in case.lines], dtype=float),
    )
    for arr in (result.from_idx, result.to_idx, y_ff, y_ft, y_tf, y_tt, result.rating):
        arr.flags.writeable = False
    return result


@lru_cache(maxsize=32)
def build_ybus(case: GridCase) -> np.ndarray:
    """Dense complex N×N bus admittance matrix (read-only, cached per case)."""
    n = case.n_bus
    ybus = np.zeros((n, n), dtype=complex)
    br = branch_admittances(case)

    np.add.at(ybus, (br.from_idx, br.from_idx), br.y_ff)
    np.add.at(ybus, (br.from_idx, br.to_idx), br.y_ft)
    np.add.at(ybus, (br.to_idx, br.from_idx), br.y_tf)
    np.add.at(ybus, (br.to_idx, br.to_idx), br.y_tt)

    shunts = np.array([complex(b.g_shunt, b.b_shunt) for b in case.buses])
    ybus[np.diag_indices(n)] += shunts

    ybus.flags.writeable = False
    return ybus

# ============================================================
# INJECTIONS AND JACOBIANS
# ============================================================


def _coefficients(ybus: np.ndarray, form: str):
    """(a_P, b_P, a_Q, b_Q) so that each flow term is Σ v_i v_j (a cos θ_ij + b sin θ_ij)."""
    G, B = ybus.real, ybus.imag
    if form == "standard":
        return G, B, -B, G
    if form == "printed":
        return G, B, G, -B
    raise ValueError(f"unknown reactive form '{form}', expected one of {REACTIVE_FORMS}")


def injections(ybus: np.ndarray, v: np.ndarray, theta: np.ndarray, form: str = "standard"):
    """Bus active/reactive power leaving each bus into the network."""
    a_p, b_p, a_q, b_q = _coefficients(ybus, form)
    dth = theta[:, None] - theta[None, :]
    cos, sin = np.cos(dth), np.sin(dth)
    vv = np.outer(v, v)
    p = (vv * (a_p * cos + b_p * sin)).sum(axis=1)
    q = (vv * (a_q * cos + b_q * sin)).sum(axis=1)
    return p, q


def _term_jacobian(a, b, v, vv, cos, sin):
    k = a * cos + b * sin
    k_prime = vv * (b * cos - a * sin)
    d_theta = np.diag(k_prime.sum(axis=1)) - k_prime
    d_v = v[:, None] * k
    d_v[np.diag_indices_from(d_v)] += k @ v
    return d_v, d_theta


def injection_jacobian(ybus: np.ndarray, v: np.ndarray, theta: np.ndarray, form: str = "standard"):
    """Returns (dP/dv, dP/dθ, dQ/dv, dQ/dθ), each N×N."""
    a_p, b_p, a_q, b_q = _coefficients(ybus, form)
    dth = theta[:, None] - theta[None, :]
    cos, sin = np.cos(dth), np.sin(dth)
    vv = np.outer(v, v)
    dp_dv, dp_dth = _term_jacobian(a_p, b_p, v, vv, cos, sin)
    dq_dv, dq_dth = _term_jacobian(a_q, b_q, v, vv, cos, sin)
    return dp_dv, dp_dth, dq_dv, dq_dth


def branch_flows(case: GridCase, v: np.ndarray, theta: np.ndarray):
    """Complex apparent power entering each branch at its from and to ends."""
    br = branch_admittances(case)
    phasor = v * np.exp(1j * theta)
    vf, vt = phasor[br.from_idx], phasor[br.to_idx]
    i_f = br.y_ff * vf + br.y_ft * vt
    i_t = br.y_tf * vf + br.y_tt * vt
    return vf * np.conj(i_f), vt * np.conj(i_t)

# ============================================================
# POWER FLOW
# ============================================================


@dataclass(frozen=True)
class PowerFlowSolution:
    v: np.ndarray
    theta: np.ndarray
    p_g: np.ndarray
    q_g: np.ndarray
    iterations: int
    mismatch: float


def bus_injection_vectors(case: GridCase):
    """Nominal (P_R, Q_R, P_L, Q_L) per bus, per-unit."""
    idx = case.bus_index
    n = case.n_bus
    p_r, q_r = np.zeros(n), np.zeros(n)
    for r in case.renewables:
        p_r[idx[r.bus]] += r.p
        q_r[idx[r.bus]] += r.q
    p_l = np.array([b.p_load for b in case.buses])
    q_l = np.array([b.q_load for b in case.buses])
    return p_r, q_r, p_l, q_l


def generator_bus_matrix(case: GridCase) -> np.ndarray:
    """N×n_g incidence: entry 1 where generator k sits on bus i."""
    idx = case.bus_index
    out = np.zeros((case.n_bus, case.n_gen))
    for k, g in enumerate(case.generators):
        out[idx[g.bus], k] = 1.0
    return out


def solve_power_flow(
    case: GridCase,
    tolerance: float = 1e-8,
    max_iterations: int = 50,
    form: str = "standard",
) -> PowerFlowSolution:
    ybus = build_ybus(case)
    n = case.n_bus
    slack = case.slack_index
    types = [b.type for b in case.buses]
    pv_or_slack = np.array([t != "PQ" for t in types])

    p_r, q_r, p_l, q_l = bus_injection_vectors(case)
    gen_map = generator_bus_matrix(case)
    p_gen_set = gen_map @ np.array([g.p_set for g in case.generators])
    p_spec = p_gen_set + p_r - p_l
    q_spec = q_r - q_l

    theta_rows = np.array([i for i in range(n) if i != slack], dtype=int)
    v_rows = np.array([i for i in range(n) if not pv_or_slack[i]], dtype=int)

    v = np.array([b.v_set if pv_or_slack[i] else 1.0 for i, b in enumerate(case.buses)])
    theta = np.zeros(n)

    mismatch = np.inf
    polish = 0
    for iteration in range(max_iterations + 1):
        p_calc, q_calc = injections(ybus, v, theta, form)
        f = np.concatenate([(p_spec - p_calc)[theta_rows], (q_spec - q_calc)[v_rows]])
        mismatch = float(np.max(np.abs(f))) if f.size else 0.0
        if mismatch < tolerance:
            # polish to round-off
            if mismatch < 1e-13 or polish == 2 or iteration == max_iterations:
                break
            polish += 1
        if iteration == max_iterations:
            raise ConvergenceError(
                f"power flow did not converge in {max_iterations} iterations", mismatch
            )
        dp_dv, dp_dth, dq_dv, dq_dth = injection_jacobian(ybus, v, theta, form)
        jac = np.block([
            [dp_dth[np.ix_(theta_rows, theta_rows)], dp_dv[np.ix_(theta_rows, v_rows)]],
            [dq_dth[np.ix_(v_rows, theta_rows)], dq_dv[np.ix_(v_rows, v_rows)]],
        ])
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular power-flow Jacobian", mismatch) from None
        theta[theta_rows] += dx[: theta_rows.size]
        v[v_rows] += dx[theta_rows.size:]

    p_calc, q_calc = injections(ybus, v, theta, form)
    counts = gen_map.sum(axis=1)
    shared = np.divide(1.0, counts, out=np.zeros(n), where=counts > 0)

    p_g = np.array([g.p_set for g in case.generators], dtype=float)
    slack_share = (p_calc[slack] + p_l[slack] - p_r[slack]) * shared[slack]
    q_bus = (q_calc + q_l - q_r) * shared
    q_g = np.zeros(case.n_gen)
    for k, g in enumerate(case.generators):
        i = case.bus_index[g.bus]
        if i == slack:
            p_g[k] = slack_share
        q_g[k] = q_bus[i]

    log(f"Power flow | {case.name} | converged in {iteration} iterations | mismatch {mismatch:.2e}")
    return PowerFlowSolution(v=v, theta=theta, p_g=p_g, q_g=q_g, iterations=iteration, mismatch=mismatch)
