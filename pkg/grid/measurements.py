# -*- coding: utf-8 -*-

"""
PMU MEASUREMENT MAP
===================

Each PMU contributes a (v, θ) selector pair for its bus, then two rows per
reported line: the current magnitude and current angle linearized about the
operating point. When the operating current is (numerically) zero the polar
gradient is undefined and the rows fall back to the real and imaginary parts.
"""

from dataclasses import dataclass

import numpy as np

from errors import CaseValidationError
from grid.case_parser import GridCase
from grid.network import branch_admittances

ZERO_CURRENT = 1e-9


@dataclass(frozen=True)
class MeasurementModel:
    C: np.ndarray
    labels: list

    @property
    def p(self) -> int:
        return self.C.shape[0]


def _line_current_terms(case: GridCase, bus: int, other: int):
    """(y_self, y_other) so that the current leaving `bus` is y_self V_bus + y_other V_other."""
    br = branch_admittances(case)
    for k, ln in enumerate(case.lines):
        if ln.from_bus == bus and ln.to_bus == other:
            return br.y_ff[k], br.y_ft[k]
        if ln.to_bus == bus and ln.from_bus == other:
            return br.y_tt[k], br.y_tf[k]
    raise CaseValidationError(f"PMU at bus {bus}: no line to bus {other}")


def build_measurement_matrix(
    case: GridCase,
    v_op: np.ndarray | None = None,
    theta_op: np.ndarray | None = None,
) -> MeasurementModel:
    if not case.pmus:
        raise CaseValidationError("no PMU buses configured")

    n_gen, n_bus = case.n_gen, case.n_bus
    n = 6 * n_gen + 2 * n_bus
    v_start = 6 * n_gen
    th_start = v_start + n_bus
    idx = case.bus_index

    v_op = np.ones(n_bus) if v_op is None else np.asarray(v_op, dtype=float)
    theta_op = np.zeros(n_bus) if theta_op is None else np.asarray(theta_op, dtype=float)

    rows, labels = [], []
    for site in case.pmus:
        if site.bus not in idx:
            raise CaseValidationError(f"PMU on unknown bus {site.bus}")
        i = idx[site.bus]

        row = np.zeros(n)
        row[v_start + i] = 1.0
        rows.append(row)
        labels.append(f"v_{site.bus}")

        row = np.zeros(n)
        row[th_start + i] = 1.0
        rows.append(row)
        labels.append(f"theta_{site.bus}")

        for other in site.line_ends:
            if other not in idx:
                raise CaseValidationError(f"PMU at bus {site.bus}: unknown line end {other}")
            j = idx[other]
            y_self, y_other = _line_current_terms(case, site.bus, other)
            phasor_i = v_op[i] * np.exp(1j * theta_op[i])
            phasor_j = v_op[j] * np.exp(1j * theta_op[j])
            current = y_self * phasor_i + y_other * phasor_j

            # complex gradient of the line current w.r.t. (v_i, θ_i, v_j, θ_j)
            grad = {
                v_start + i: y_self * np.exp(1j * theta_op[i]),
                th_start + i: 1j * y_self * phasor_i,
                v_start + j: y_other * np.exp(1j * theta_op[j]),
                th_start + j: 1j * y_other * phasor_j,
            }

            mag = abs(current)
            first, second = np.zeros(n), np.zeros(n)
            if mag > ZERO_CURRENT:
                for col, dz in grad.items():
                    first[col] = (np.conj(current) * dz).real / mag
                    second[col] = (np.conj(current) * dz).imag / mag**2
                tags = ("imag", "iang")
            else:
                for col, dz in grad.items():
                    first[col] = dz.real
                    second[col] = dz.imag
                tags = ("ire", "iim")
            rows += [first, second]
            labels += [f"{tags[0]}_{site.bus}-{other}", f"{tags[1]}_{site.bus}-{other}"]

    return MeasurementModel(C=np.vstack(rows), labels=labels)
