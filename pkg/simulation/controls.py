# -*- coding: utf-8 -*-

"""
PRIMARY CONTROL
===============

Droop governor on T_M and proportional voltage regulator on E_fd, evaluated
on the plant state at the start of each step and held over it:

    T_M  = T_M0  − (P_max / R) · (ω − ω_0) / ω_0
    E_fd = E_fd0 + K_A · (v_ref − v_gen)

v_ref is the generator-bus voltage at the operating point, so the law returns
u_op there and a steady start stays steady.
"""

from dataclasses import dataclass

import numpy as np

from grid.descriptor import DescriptorSystem


@dataclass(frozen=True)
class PrimaryControl:
    u_op: np.ndarray
    v_ref: np.ndarray
    omega_0: np.ndarray
    droop_gain: np.ndarray      # P_max / R, per generator
    avr_gain: float
    lower: np.ndarray           # floor on [T_M, E_fd]
    upper: np.ndarray           # ceiling on [T_M, E_fd]
    omega_idx: np.ndarray
    v_idx: np.ndarray

    @classmethod
    def from_system(
        cls,
        sys: DescriptorSystem,
        droop: float = 0.05,
        avr_gain: float = 20.0,
        efd_max: float = 5.0,
    ) -> "PrimaryControl":
        if droop <= 0:
            raise ValueError(f"droop must be positive, got {droop}")
        if avr_gain < 0:
            raise ValueError(f"avr_gain must be nonnegative, got {avr_gain}")
        lay = sys.layout
        ng = lay.n_gen
        u_op = np.asarray(sys.u_op, dtype=float).copy()
        p_max = np.array([g.p_max for g in sys.case.generators], dtype=float)
        v_idx = lay.block("v").start + sys.gen_bus
        # the box always contains the steady inputs
        ceiling = np.concatenate([np.maximum(p_max, u_op[:ng]), np.maximum(efd_max, u_op[ng:])])
        return cls(
            u_op=u_op,
            v_ref=sys.x_op[v_idx].copy(),
            omega_0=np.asarray(sys.machines.omega_0, dtype=float).copy(),
            droop_gain=p_max / droop,
            avr_gain=float(avr_gain),
            lower=np.minimum(0.0, u_op),
            upper=ceiling,
            omega_idx=lay.block("omega").start + np.arange(ng),
            v_idx=v_idx,
        )

    @property
    def n_gen(self) -> int:
        return self.v_ref.size

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        ng = self.n_gen
        omega = x[self.omega_idx]
        v_gen = x[self.v_idx]
        t_m = self.u_op[:ng] - self.droop_gain * (omega - self.omega_0) / self.omega_0
        e_fd = self.u_op[ng:] + self.avr_gain * (self.v_ref - v_gen)
        return np.clip(np.concatenate([t_m, e_fd]), self.lower, self.upper)
