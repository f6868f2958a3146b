# -*- coding: utf-8 -*-

"""
OPERATIONAL CONSTRAINTS
=======================

g(x): the algebraic rows (generator output definitions and bus power
balances) evaluated at nominal injections; zero on a physically consistent
state.

h(x) ≤ 0: generator P/Q limits, bus voltage band and branch apparent-power
ratings. A line rating of 0 means unlimited and contributes no rows.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from grid.case_parser import GridCase
from grid.descriptor import DescriptorSystem, build_structure
from grid.network import branch_admittances, branch_flows


@dataclass(frozen=True)
class ConstraintReport:
    g_values: np.ndarray
    h_values: np.ndarray
    g_abs_sum: float
    violation_count: int
    zeta: float

    @property
    def feasible(self) -> bool:
        return self.violation_count == 0


class ConstraintModel:
    """Evaluates and linearizes g and h for one case."""

    def __init__(self, structure: DescriptorSystem):
        self.structure = structure
        case = structure.case
        lay = structure.layout
        self.case = case
        self.n = lay.n
        self.n_d = lay.n_d

        gens = case.generators
        self.p_max = np.array([g.p_max for g in gens])
        self.p_min = np.array([g.p_min for g in gens])
        self.q_max = np.array([g.q_max for g in gens])
        self.q_min = np.array([g.q_min for g in gens])
        self.v_max = np.array([b.v_max for b in case.buses])
        self.v_min = np.array([b.v_min for b in case.buses])

        br = branch_admittances(case)
        self.rated = np.flatnonzero(br.rating > 0)
        self.rating = br.rating[self.rated]

        self.i_pg = lay.block("p_g")
        self.i_qg = lay.block("q_g")
        self.i_v = lay.block("v")
        self.i_th = lay.block("theta")

        self.h_labels = (
            [f"pmax_{g.bus}" for g in gens] + [f"pmin_{g.bus}" for g in gens]
            + [f"qmax_{g.bus}" for g in gens] + [f"qmin_{g.bus}" for g in gens]
            + [f"vmax_{b.id}" for b in case.buses] + [f"vmin_{b.id}" for b in case.buses]
            + [f"sf_{case.lines[k].from_bus}-{case.lines[k].to_bus}" for k in self.rated]
            + [f"st_{case.lines[k].from_bus}-{case.lines[k].to_bus}" for k in self.rated]
        )
        self._h_support = self._build_h_support()

    # ---------------------------------------------------------
    # equality rows
    # ---------------------------------------------------------

    def g(self, x: np.ndarray) -> np.ndarray:
        return self.structure.algebraic_residual(x)

    def g_jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.structure.jacobian(x)[self.n_d:]

    # ---------------------------------------------------------
    # inequality rows
    # ---------------------------------------------------------

    def _flows(self, x):
        s_f, s_t = branch_flows(self.case, x[self.i_v], x[self.i_th])
        return s_f[self.rated], s_t[self.rated]

    def h(self, x: np.ndarray) -> np.ndarray:
        p_g, q_g, v = x[self.i_pg], x[self.i_qg], x[self.i_v]
        s_f, s_t = self._flows(x)
        return np.concatenate([
            p_g - self.p_max, self.p_min - p_g,
            q_g - self.q_max, self.q_min - q_g,
            v - self.v_max, self.v_min - v,
            np.abs(s_f) - self.rating, np.abs(s_t) - self.rating,
        ])

    def h_jacobian(self, x: np.ndarray) -> np.ndarray:
        ng = self.p_max.size
        nb = self.v_max.size
        n_rated = self.rated.size
        jac = np.zeros((4 * ng + 2 * nb + 2 * n_rated, self.n))
        rows = np.arange(ng)
        pg_cols = self.i_pg.start + rows
        qg_cols = self.i_qg.start + rows
        jac[rows, pg_cols] = 1.0
        jac[ng + rows, pg_cols] = -1.0
        jac[2 * ng + rows, qg_cols] = 1.0
        jac[3 * ng + rows, qg_cols] = -1.0
        bus_rows = np.arange(nb)
        jac[4 * ng + bus_rows, self.i_v.start + bus_rows] = 1.0
        jac[4 * ng + nb + bus_rows, self.i_v.start + bus_rows] = -1.0

        if n_rated:
            base = 4 * ng + 2 * nb
            jac[base: base + 2 * n_rated] = self._flow_jacobian(x)
        return jac

    def _flow_jacobian(self, x):
        br = branch_admittances(self.case)
        v, th = x[self.i_v], x[self.i_th]
        f_idx, t_idx = br.from_idx[self.rated], br.to_idx[self.rated]
        vf = v[f_idx] * np.exp(1j * th[f_idx])
        vt = v[t_idx] * np.exp(1j * th[t_idx])
        out = np.zeros((2 * self.rated.size, self.n))

        ends = (
            (f_idx, t_idx, vf, vt, br.y_ff[self.rated], br.y_ft[self.rated]),
            (t_idx, f_idx, vt, vf, br.y_tt[self.rated], br.y_tf[self.rated]),
        )
        for side, (own, far, v_own, v_far, y_own, y_far) in enumerate(ends):
            s = v_own * np.conj(y_own * v_own + y_far * v_far)
            mag = np.abs(s)
            weight = np.divide(np.conj(s), mag, out=np.zeros_like(s), where=mag > 0)
            cross = v_own * np.conj(y_far) * np.conj(v_far)
            grads = (
                (self.i_v.start + own, 2 * np.abs(v_own) * np.conj(y_own) + cross / np.abs(v_own)),
                (self.i_th.start + own, 1j * cross),
                (self.i_v.start + far, cross / np.abs(v_far)),
                (self.i_th.start + far, -1j * cross),
            )
            rows = side * self.rated.size + np.arange(self.rated.size)
            for cols, ds in grads:
                np.add.at(out, (rows, cols), (weight * ds).real)
        return out

    # ---------------------------------------------------------
    # zone restriction
    # ---------------------------------------------------------

    def _build_h_support(self):
        ng = self.p_max.size
        nb = self.v_max.size
        support = []
        for k in range(4):
            block = self.i_pg if k < 2 else self.i_qg
            support += [{block.start + i} for i in range(ng)]
        for _ in range(2):
            support += [{self.i_v.start + i} for i in range(nb)]
        br = branch_admittances(self.case)
        for _ in range(2):
            for k in self.rated:
                f, t = br.from_idx[k], br.to_idx[k]
                support.append({self.i_v.start + f, self.i_v.start + t,
                                self.i_th.start + f, self.i_th.start + t})
        return support

    def h_rows_within(self, state_indices) -> np.ndarray:
        """Inequality rows whose every state dependency lies in the given index set."""
        allowed = set(int(i) for i in state_indices)
        lay = self.structure.layout
        # generator output limits follow the generator's dynamic states
        gen_ok = [
            lay.block("delta").start + k in allowed for k in range(self.p_max.size)
        ]
        keep = []
        for row, deps in enumerate(self._h_support):
            if row < 4 * self.p_max.size:
                keep.append(gen_ok[row % self.p_max.size])
            else:
                keep.append(deps <= allowed)
        return np.flatnonzero(keep)

    def g_rows_within(self, state_indices) -> np.ndarray:
        """Equality rows (generator definitions, bus balances) belonging to the zone."""
        allowed = set(int(i) for i in state_indices)
        lay = self.structure.layout
        ng, nb = self.p_max.size, self.v_max.size
        keep = []
        for k in range(ng):
            keep.append(lay.block("delta").start + k in allowed)
        keep = keep + keep
        for i in range(nb):
            keep.append(self.i_v.start + i in allowed)
        for i in range(nb):
            keep.append(self.i_v.start + i in allowed)
        return np.flatnonzero(keep)

    # ---------------------------------------------------------
    # report
    # ---------------------------------------------------------

    def report(self, x: np.ndarray, zeta: float, g_rows=None, h_rows=None) -> ConstraintReport:
        """Full report, or one restricted to the given g and h rows."""
        g_values = self.g(x)
        h_values = self.h(x)
        if g_rows is not None:
            g_values = g_values[g_rows]
        if h_rows is not None:
            h_values = h_values[h_rows]
        g_abs_sum = float(abs(g_values.sum()))
        violations = int(np.count_nonzero(h_values > 0)) + int(g_abs_sum > zeta)
        return ConstraintReport(
            g_values=g_values,
            h_values=h_values,
            g_abs_sum=g_abs_sum,
            violation_count=violations,
            zeta=float(zeta),
        )


@lru_cache(maxsize=16)
def constraint_model(case: GridCase, reactive_form: str = "standard") -> ConstraintModel:
    return ConstraintModel(build_structure(case, reactive_form))


def eval_constraints(x: np.ndarray, case: GridCase, zeta: float, reactive_form: str = "standard") -> ConstraintReport:
    return constraint_model(case, reactive_form).report(np.asarray(x, dtype=float), zeta)


def linearize_constraints(x0: np.ndarray, case: GridCase, reactive_form: str = "standard"):
    """(g0, ∇g) at x0; the first-order model is g0 + ∇g (x − x0)."""
    model = constraint_model(case, reactive_form)
    x0 = np.asarray(x0, dtype=float)
    return model.g(x0), model.g_jacobian(x0)
