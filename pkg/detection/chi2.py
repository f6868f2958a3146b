# -*- coding: utf-8 -*-

"""
CHI-SQUARED DETECTOR
====================

z_k = r_kᵀ Σ⁻¹ r_k, alarm iff z_k > α. The threshold α is the χ² quantile
that yields one expected false alarm every m steps.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc

from errors import InconsistentStateError

THRESHOLD_TOLERANCE = 1e-10


def chi2_threshold(n_y: int, m: float) -> float:
    """α with P(n_y/2, α/2) = 1 − 1/m, P the regularized lower incomplete gamma."""
    if n_y < 1:
        raise ValueError(f"n_y must be at least 1, got {n_y}")
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    target = 1.0 - 1.0 / m
    half = 0.5 * n_y

    def gap(x):
        return gammainc(half, 0.5 * x) - target

    upper = max(1.0, float(n_y))
    while gap(upper) < 0:
        upper *= 2.0
    return float(brentq(gap, 0.0, upper, xtol=1e-14, rtol=1e-15, maxiter=500))


def statistic(r: np.ndarray, sigma_inv: np.ndarray) -> float:
    r = np.asarray(r, dtype=float)
    return float(r @ sigma_inv @ r)


@dataclass
class Chi2Detector:
    alpha: float
    sigma_inv: np.ndarray
    alarm_log: list = field(default_factory=list)
    k: int = 0

    def __post_init__(self):
        self.sigma_inv = np.atleast_2d(np.asarray(self.sigma_inv, dtype=float))
        if not self.alpha > 0:
            raise InconsistentStateError(f"chi-squared threshold must be positive, got {self.alpha}")
        if not np.allclose(self.sigma_inv, self.sigma_inv.T, atol=1e-10):
            raise InconsistentStateError("sigma_inv must be symmetric")

    @classmethod
    def from_sigma(cls, sigma: np.ndarray, m: float) -> "Chi2Detector":
        sigma = np.atleast_2d(sigma)
        return cls(alpha=chi2_threshold(sigma.shape[0], m), sigma_inv=np.linalg.inv(sigma))

    @property
    def p(self) -> int:
        return self.sigma_inv.shape[0]

    def clone(self) -> "Chi2Detector":
        return Chi2Detector(alpha=self.alpha, sigma_inv=self.sigma_inv,
                            alarm_log=list(self.alarm_log), k=self.k)


def chi2_step(det: Chi2Detector, r: np.ndarray):
    """(z, alarm); advances the detector's step counter."""
    z = statistic(r, det.sigma_inv)
    alarm = z > det.alpha
    det.k += 1
    if alarm:
        det.alarm_log.append(det.k)
    return z, alarm
