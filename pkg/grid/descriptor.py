# -*- coding: utf-8 -*-

"""
DESCRIPTOR SYSTEM
=================

Fourth-order generator model coupled to the network power balance, written as

    E ẋ = A x + f(x) + B_u u + B_w q,      y = C x

State order:  [δ, ω, E'q, E'd | P_G, Q_G | v, θ]
Input order:  u = [T_M, E_fd]                 (per generator)
Disturbance:  q = [P_R, Q_R, P_L, Q_L]        (per bus)

Algebraic rows follow the algebraic states: P_G definition, Q_G definition,
active balance, reactive balance.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from errors import ConvergenceError, InconsistentStateError
from grid.case_parser import GridCase
from grid.measurements import build_measurement_matrix
from grid.network import (
    PowerFlowSolution,
    build_ybus,
    bus_injection_vectors,
    generator_bus_matrix,
    injection_jacobian,
    injections,
)

STEADY_TOLERANCE = 1e-8

# ============================================================
# STATE LAYOUT
# ============================================================


@dataclass(frozen=True)
class StateVector:
    delta: np.ndarray
    omega: np.ndarray
    e_q_prime: np.ndarray
    e_d_prime: np.ndarray
    p_g: np.ndarray
    q_g: np.ndarray
    v: np.ndarray
    theta: np.ndarray


BLOCKS = ("delta", "omega", "e_q_prime", "e_d_prime", "p_g", "q_g", "v", "theta")


@dataclass(frozen=True)
class StateLayout:
    n_gen: int
    n_bus: int

    @property
    def n_d(self) -> int:
        return 4 * self.n_gen

    @property
    def n_a(self) -> int:
        return 2 * self.n_gen + 2 * self.n_bus

    @property
    def n(self) -> int:
        return self.n_d + self.n_a

    def block(self, name: str) -> slice:
        sizes = [self.n_gen] * 6 + [self.n_bus] * 2
        start = 0
        for block_name, size in zip(BLOCKS, sizes):
            if block_name == name:
                return slice(start, start + size)
            start += size
        raise KeyError(name)

    @property
    def differential_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[: self.n_d] = True
        return mask

    def pack(self, state: StateVector) -> np.ndarray:
        parts = [np.asarray(getattr(state, name), dtype=float) for name in BLOCKS]
        x = np.concatenate(parts)
        if x.size != self.n:
            raise ValueError(f"state has {x.size} entries, layout expects {self.n}")
        return x

    def unpack(self, x: np.ndarray) -> StateVector:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected state of shape ({self.n},), got {x.shape}")
        return StateVector(**{name: x[self.block(name)].copy() for name in BLOCKS})

    def names(self, case: GridCase) -> list:
        gens = [f"g{k + 1}@{g.bus}" for k, g in enumerate(case.generators)]
        buses = [str(b.id) for b in case.buses]
        labels = []
        for name in BLOCKS[:6]:
            labels += [f"{name}_{g}" for g in gens]
        for name in BLOCKS[6:]:
            labels += [f"{name}_{b}" for b in buses]
        return labels

    def bus_state_indices(self, bus_positions) -> list:
        v, th = self.block("v"), self.block("theta")
        return [v.start + i for i in bus_positions] + [th.start + i for i in bus_positions]

    def generator_state_indices(self, gen_positions) -> list:
        out = []
        for name in BLOCKS[:4]:
            sl = self.block(name)
            out += [sl.start + k for k in gen_positions]
        return out

# ============================================================
# GENERATOR PARAMETERS (VECTORIZED)
# ============================================================


@dataclass(frozen=True)
class MachineArrays:
    M: np.ndarray
    D: np.ndarray
    x_d: np.ndarray
    x_dp: np.ndarray
    x_q: np.ndarray
    x_qp: np.ndarray
    T_d0: np.ndarray
    T_q0: np.ndarray
    omega_0: np.ndarray

    @classmethod
    def from_case(cls, case: GridCase) -> "MachineArrays":
        p = [g.params for g in case.generators]
        return cls(
            M=np.array([g.M for g in p]),
            D=np.array([g.D for g in p]),
            x_d=np.array([g.x_d for g in p]),
            x_dp=np.array([g.x_d_prime for g in p]),
            x_q=np.array([g.x_q for g in p]),
            x_qp=np.array([g.x_q_prime for g in p]),
            T_d0=np.array([g.T_d0_prime for g in p]),
            T_q0=np.array([g.T_q0_prime for g in p]),
            omega_0=np.array([g.omega_0 for g in p]),
        )

    def electrical_power(self, e_q, v, angle):
        """Stator P and Q expressed in the internal (E'q, v, Δ) coordinates."""
        a = 1.0 / self.x_dp
        c = (self.x_q - self.x_dp) / (2.0 * self.x_dp * self.x_q)
        d = (self.x_dp + self.x_q) / (2.0 * self.x_dp * self.x_q)
        p = a * e_q * v * np.sin(angle) - c * v**2 * np.sin(2 * angle)
        q = a * e_q * v * np.cos(angle) - d * v**2 - c * v**2 * np.cos(2 * angle)
        return p, q

# ============================================================
# DESCRIPTOR SYSTEM
# ============================================================


@dataclass(frozen=True)
class DescriptorSystem:
    case: GridCase
    layout: StateLayout
    machines: MachineArrays
    ybus: np.ndarray
    reactive_form: str
    gen_bus: np.ndarray          # bus position of each generator
    gen_map: np.ndarray          # N×n_g incidence
    A: np.ndarray
    B_u: np.ndarray
    B_w: np.ndarray
    C: np.ndarray
    x_op: np.ndarray
    u_op: np.ndarray
    q_bar: np.ndarray
    measurement_labels: tuple = field(default=())

    # ---------------------------------------------------------
    # structure accessors
    # ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def n_d(self) -> int:
        return self.layout.n_d

    @property
    def n_a(self) -> int:
        return self.layout.n_a

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def differential_mask(self) -> np.ndarray:
        return self.layout.differential_mask

    @property
    def E(self) -> np.ndarray:
        return np.diag(self.differential_mask.astype(float))

    @property
    def A_d(self) -> np.ndarray:
        return self.A[: self.n_d]

    @property
    def A_a(self) -> np.ndarray:
        return self.A[self.n_d:]

    @property
    def B_d(self) -> np.ndarray:
        return self.B_u[: self.n_d]

    @property
    def B_a(self) -> np.ndarray:
        return self.B_w[self.n_d:]

    def f_d(self, x: np.ndarray) -> np.ndarray:
        return self.f(x)[: self.n_d]

    def f_a(self, x: np.ndarray) -> np.ndarray:
        return self.f(x)[self.n_d:]

    # ---------------------------------------------------------
    # evaluation
    # ---------------------------------------------------------

    def _parts(self, x):
        lay = self.layout
        delta = x[lay.block("delta")]
        e_q = x[lay.block("e_q_prime")]
        v = x[lay.block("v")]
        theta = x[lay.block("theta")]
        v_gen = v[self.gen_bus]
        angle = delta - theta[self.gen_bus]
        return delta, e_q, v, theta, v_gen, angle

    def f(self, x: np.ndarray) -> np.ndarray:
        """Nonlinear part of the right-hand side, constants included."""
        m = self.machines
        lay = self.layout
        _, e_q, v, theta, v_gen, angle = self._parts(x)
        out = np.zeros(lay.n)

        out[lay.block("delta")] = -m.omega_0
        out[lay.block("omega")] = m.D * m.omega_0 / m.M
        out[lay.block("e_q_prime")] = (m.x_d - m.x_dp) / (m.x_dp * m.T_d0) * v_gen * np.cos(angle)
        out[lay.block("e_d_prime")] = (m.x_q - m.x_qp) / (m.x_q * m.T_q0) * v_gen * np.sin(angle)

        p_e, q_e = m.electrical_power(e_q, v_gen, angle)
        out[lay.block("p_g")] = p_e
        out[lay.block("q_g")] = q_e

        p_inj, q_inj = injections(self.ybus, v, theta, self.reactive_form)
        out[lay.block("v")] = -p_inj
        out[lay.block("theta")] = -q_inj
        return out

    def rhs(self, x: np.ndarray, u: np.ndarray, q: np.ndarray) -> np.ndarray:
        return self.A @ x + self.f(x) + self.B_u @ u + self.B_w @ q

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """∂(A x + f(x))/∂x, analytic."""
        m = self.machines
        lay = self.layout
        _, e_q, v, theta, v_gen, angle = self._parts(x)
        jac = self.A.copy()
        ng = lay.n_gen
        gen_rows = np.arange(ng)
        sin, cos = np.sin(angle), np.cos(angle)
        sin2, cos2 = np.sin(2 * angle), np.cos(2 * angle)

        i_delta = lay.block("delta").start + gen_rows
        i_eq = lay.block("e_q_prime").start + gen_rows
        i_ed = lay.block("e_d_prime").start + gen_rows
        i_pg = lay.block("p_g").start + gen_rows
        i_qg = lay.block("q_g").start + gen_rows
        i_v = lay.block("v").start + self.gen_bus
        i_th = lay.block("theta").start + self.gen_bus

        k1 = (m.x_d - m.x_dp) / (m.x_dp * m.T_d0)
        k2 = (m.x_q - m.x_qp) / (m.x_q * m.T_q0)
        a = 1.0 / m.x_dp
        c = (m.x_q - m.x_dp) / (2.0 * m.x_dp * m.x_q)
        d = (m.x_dp + m.x_q) / (2.0 * m.x_dp * m.x_q)

        # add.at because several generators may share a bus column
        def put(rows, cols, values):
            np.add.at(jac, (rows, cols), values)

        put(i_eq, i_v, k1 * cos)
        put(i_eq, i_delta, -k1 * v_gen * sin)
        put(i_eq, i_th, k1 * v_gen * sin)

        put(i_ed, i_v, k2 * sin)
        put(i_ed, i_delta, k2 * v_gen * cos)
        put(i_ed, i_th, -k2 * v_gen * cos)

        dp_dangle = a * e_q * v_gen * cos - 2 * c * v_gen**2 * cos2
        put(i_pg, i_eq, a * v_gen * sin)
        put(i_pg, i_v, a * e_q * sin - 2 * c * v_gen * sin2)
        put(i_pg, i_delta, dp_dangle)
        put(i_pg, i_th, -dp_dangle)

        dq_dangle = -a * e_q * v_gen * sin + 2 * c * v_gen**2 * sin2
        put(i_qg, i_eq, a * v_gen * cos)
        put(i_qg, i_v, a * e_q * cos - 2 * d * v_gen - 2 * c * v_gen * cos2)
        put(i_qg, i_delta, dq_dangle)
        put(i_qg, i_th, -dq_dangle)

        dp_dv, dp_dth, dq_dv, dq_dth = injection_jacobian(self.ybus, v, theta, self.reactive_form)
        sv, st = lay.block("v"), lay.block("theta")
        jac[sv, sv] -= dp_dv
        jac[sv, st] -= dp_dth
        jac[st, sv] -= dq_dv
        jac[st, st] -= dq_dth
        return jac

    def algebraic_residual(self, x: np.ndarray, q: np.ndarray | None = None) -> np.ndarray:
        q = self.q_bar if q is None else q
        return self.rhs(x, self.u_op, q)[self.n_d:]

# ============================================================
# ASSEMBLY
# ============================================================


def initialize_generators(case: GridCase, pf: PowerFlowSolution):
    """Back-solve (δ, ω, E'q, E'd) and steady inputs (T_M, E_fd) from the power-flow point."""
    m = MachineArrays.from_case(case)
    idx = case.bus_index
    gen_bus = np.array([idx[g.bus] for g in case.generators], dtype=int)
    phasor = pf.v[gen_bus] * np.exp(1j * pf.theta[gen_bus])
    current = np.conj((pf.p_g + 1j * pf.q_g) / phasor)

    e_axis = phasor + 1j * m.x_q * current
    delta = np.angle(e_axis)
    rot = np.exp(1j * (np.pi / 2 - delta))
    i_dq = current * rot
    v_dq = phasor * rot
    e_q = v_dq.imag + m.x_dp * i_dq.real

    v_gen = pf.v[gen_bus]
    angle = delta - pf.theta[gen_bus]
    e_d = (m.x_q - m.x_qp) / m.x_q * v_gen * np.sin(angle)
    e_fd = m.x_d / m.x_dp * e_q - (m.x_d - m.x_dp) / m.x_dp * v_gen * np.cos(angle)
    t_m = pf.p_g.copy()
    omega = m.omega_0.copy()

    state = StateVector(
        delta=delta, omega=omega, e_q_prime=e_q, e_d_prime=e_d,
        p_g=pf.p_g.copy(), q_g=pf.q_g.copy(), v=pf.v.copy(), theta=pf.theta.copy(),
    )
    return state, np.concatenate([t_m, e_fd])


def _linear_blocks(case: GridCase, layout: StateLayout, m: MachineArrays, gen_map: np.ndarray):
    n, ng, nb = layout.n, layout.n_gen, layout.n_bus
    A = np.zeros((n, n))
    B_u = np.zeros((n, 2 * ng))
    B_w = np.zeros((n, 4 * nb))
    g = np.arange(ng)
    b = np.arange(nb)

    i_delta = layout.block("delta").start + g
    i_omega = layout.block("omega").start + g
    i_eq = layout.block("e_q_prime").start + g
    i_ed = layout.block("e_d_prime").start + g
    i_pg = layout.block("p_g").start + g
    i_qg = layout.block("q_g").start + g
    i_pb = layout.block("v").start + b
    i_qb = layout.block("theta").start + b

    A[i_delta, i_omega] = 1.0
    A[i_omega, i_omega] = -m.D / m.M
    A[i_omega, i_pg] = -1.0 / m.M
    A[i_eq, i_eq] = -m.x_d / (m.x_dp * m.T_d0)
    A[i_ed, i_ed] = -1.0 / m.T_q0
    A[i_pg, i_pg] = -1.0
    A[i_qg, i_qg] = -1.0
    A[np.ix_(i_pb, i_pg)] = gen_map
    A[np.ix_(i_qb, i_qg)] = gen_map

    B_u[i_omega, g] = 1.0 / m.M
    B_u[i_eq, ng + g] = 1.0 / m.T_d0

    B_w[i_pb, b] = 1.0
    B_w[i_qb, nb + b] = 1.0
    B_w[i_pb, 2 * nb + b] = -1.0
    B_w[i_qb, 3 * nb + b] = -1.0
    return A, B_u, B_w


def build_structure(case: GridCase, reactive_form: str = "standard") -> DescriptorSystem:
    """Network and machine equations without an operating point or measurement map."""
    layout = StateLayout(case.n_gen, case.n_bus)
    machines = MachineArrays.from_case(case)
    gen_map = generator_bus_matrix(case)
    gen_bus = np.array([case.bus_index[g.bus] for g in case.generators], dtype=int)
    A, B_u, B_w = _linear_blocks(case, layout, machines, gen_map)
    return DescriptorSystem(
        case=case,
        layout=layout,
        machines=machines,
        ybus=build_ybus(case),
        reactive_form=reactive_form,
        gen_bus=gen_bus,
        gen_map=gen_map,
        A=A,
        B_u=B_u,
        B_w=B_w,
        C=np.zeros((0, layout.n)),
        x_op=np.zeros(layout.n),
        u_op=np.zeros(2 * case.n_gen),
        q_bar=np.concatenate(bus_injection_vectors(case)),
    )


def assemble_descriptor(
    case: GridCase,
    op_point: PowerFlowSolution,
    reactive_form: str = "standard",
    tolerance: float = STEADY_TOLERANCE,
) -> DescriptorSystem:
    base = build_structure(case, reactive_form)
    state, u_op = initialize_generators(case, op_point)
    model = build_measurement_matrix(case, op_point.v, op_point.theta)

    sys = replace(
        base,
        C=model.C,
        x_op=base.layout.pack(state),
        u_op=u_op,
        measurement_labels=tuple(model.labels),
    )
    x_op, q_bar = sys.x_op, sys.q_bar

    residual = np.max(np.abs(sys.rhs(x_op, u_op, q_bar)))
    if residual > tolerance:
        raise InconsistentStateError(
            f"operating point is not steady: max |E ẋ| = {residual:.3e} > {tolerance:.1e}"
        )
    return sys


def consistent_initialization(
    sys: DescriptorSystem,
    x: np.ndarray,
    q: np.ndarray | None = None,
    tolerance: float = 1e-10,
    max_iterations: int = 25,
) -> np.ndarray:
    """Re-solve the algebraic states for the given dynamic states."""
    q = sys.q_bar if q is None else q
    x = np.array(x, dtype=float)
    alg = ~sys.differential_mask
    for _ in range(max_iterations):
        res = sys.rhs(x, sys.u_op, q)[alg]
        norm = float(np.max(np.abs(res)))
        if norm < tolerance:
            return x
        j_aa = sys.jacobian(x)[np.ix_(alg, alg)]
        x[alg] -= np.linalg.solve(j_aa, res)
    raise ConvergenceError("algebraic re-initialization did not converge", norm)
