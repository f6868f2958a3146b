# -*- coding: utf-8 -*-

"""
Uniform access to either detector: advance it on a residual, or peek at a
candidate residual on a throwaway clone.

The scalar statistic reported for a step is z for χ², c for aggregated
CUSUM and max_i c_i/τ_i for vector CUSUM.
"""

import numpy as np

from detection.chi2 import Chi2Detector, chi2_step, statistic
from detection.cusum import CusumDetector, cusum_step, cusum_update


def is_cusum(det) -> bool:
    return isinstance(det, CusumDetector)


def _scalar(det, value) -> float:
    if is_cusum(det) and det.mode == "vector":
        return float(np.max(value / det.tau))
    return float(value)


def advance(det, r: np.ndarray):
    """(statistic, any_alarm) after feeding r to the live detector."""
    if isinstance(det, Chi2Detector):
        z, alarm = chi2_step(det, r)
        return z, bool(alarm)
    c, alarm = cusum_step(det, r)
    return _scalar(det, c), bool(np.any(alarm))


def peek(det, r: np.ndarray):
    """(statistic, stealthy) for r without touching the detector."""
    if isinstance(det, Chi2Detector):
        z = statistic(r, det.sigma_inv)
        return z, z <= det.alpha
    c, alarm, _ = cusum_update(det.c, det.distance(r), det.b, det.tau)
    return _scalar(det, c), not bool(np.any(alarm))


def stealth_budget(det) -> float:
    """Largest distance z the next step may carry without an alarm (χ² and aggregated CUSUM)."""
    if isinstance(det, Chi2Detector):
        return det.alpha
    if det.mode == "aggregated":
        return det.tau + det.b - det.c
    raise ValueError("vector CUSUM has a per-measurement budget, see vector_budget")


def vector_budget(det: CusumDetector) -> np.ndarray:
    return det.tau + det.b - det.c
