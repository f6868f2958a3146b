# -*- coding: utf-8 -*-

"""
CUSUM DETECTOR
==============

    c_k = max(0, c_{k−1} + z_k − b)      while c_{k−1} ≤ τ
    alarm at k when c_k > τ, then c restarts from 0

Aggregated mode watches one statistic z = rᵀΣ⁻¹r. Vector mode runs one
recursion per measurement on z_i = |r_i| with its own (b_i, τ_i).

Alarm times are the step at which c first exceeds τ.
"""

from dataclasses import dataclass, field

import numpy as np

from errors import InconsistentStateError

MODES = ("aggregated", "vector")


def cusum_update(c, z, b, tau):
    """One recursion step; returns (c before reset, alarm flag(s), c after reset)."""
    c_new = np.maximum(0.0, c + z - b)
    alarm = c_new > tau
    c_after = np.where(alarm, 0.0, c_new)
    if np.ndim(c_new) == 0:
        return float(c_new), bool(alarm), float(c_after)
    return c_new, alarm, c_after


@dataclass
class CusumDetector:
    mode: str
    b: float | np.ndarray
    tau: float | np.ndarray
    sigma_inv: np.ndarray | None = None
    c: float | np.ndarray | None = None
    alarm_log: list = field(default_factory=list)
    k: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InconsistentStateError(f"unknown CUSUM mode '{self.mode}', expected one of {MODES}")
        if self.mode == "aggregated":
            if self.sigma_inv is None:
                raise InconsistentStateError("aggregated CUSUM needs sigma_inv")
            self.sigma_inv = np.atleast_2d(np.asarray(self.sigma_inv, dtype=float))
            self.b, self.tau = float(self.b), float(self.tau)
            self.c = 0.0 if self.c is None else float(self.c)
        else:
            self.b = np.asarray(self.b, dtype=float)
            self.tau = np.asarray(self.tau, dtype=float)
            if self.b.shape != self.tau.shape or self.b.ndim != 1:
                raise InconsistentStateError("vector CUSUM needs b and tau of equal length")
            self.c = np.zeros_like(self.b) if self.c is None else np.asarray(self.c, dtype=float).copy()
        if np.any(np.asarray(self.b) <= 0) or np.any(np.asarray(self.tau) <= 0):
            raise InconsistentStateError("CUSUM bias and threshold must be positive")
        if np.any(np.asarray(self.c) < 0):
            raise InconsistentStateError("CUSUM statistic must be nonnegative")

    @property
    def p(self) -> int:
        if self.mode == "aggregated":
            return self.sigma_inv.shape[0]
        return self.b.size

    def distance(self, r: np.ndarray):
        r = np.asarray(r, dtype=float)
        if self.mode == "aggregated":
            return float(r @ self.sigma_inv @ r)
        return np.abs(r)

    def clone(self) -> "CusumDetector":
        c = self.c if self.mode == "aggregated" else self.c.copy()
        return CusumDetector(mode=self.mode, b=self.b, tau=self.tau, sigma_inv=self.sigma_inv,
                             c=c, alarm_log=list(self.alarm_log), k=self.k)

    def reset(self):
        self.c = 0.0 if self.mode == "aggregated" else np.zeros_like(self.b)
        self.alarm_log = []
        self.k = 0


def cusum_step(det: CusumDetector, r: np.ndarray):
    """(c, alarms) for one residual; c is the value compared with τ, before any reset."""
    z = det.distance(r)
    c_new, alarm, c_after = cusum_update(det.c, z, det.b, det.tau)
    det.k += 1
    det.c = c_after
    if det.mode == "aggregated":
        if alarm:
            det.alarm_log.append(det.k)
    else:
        det.alarm_log.extend((det.k, int(i)) for i in np.flatnonzero(alarm))
    return c_new, alarm


def run_cusum(z: np.ndarray, b: float, tau: float) -> int:
    """Alarm count of a scalar recursion over a precomputed distance stream."""
    c = 0.0
    alarms = 0
    for value in z:
        c = c + value - b
        if c < 0.0:
            c = 0.0
        elif c > tau:
            alarms += 1
            c = 0.0
    return alarms
