# -*- coding: utf-8 -*-

"""
Attacked state estimate x̂*_k from the falsified measurement y*_k.

  observer_step    the victim's own observer update driven by y*
  pseudo_inverse   x̂*_k = x̂_{k−1} + C† y*_k, applied as written
"""

import numpy as np

from errors import AttackSynthesisError
from estimation.observer import ObserverConfig, observer_step
from grid.descriptor import DescriptorSystem


def pseudo_inverse(C: np.ndarray) -> np.ndarray:
    p = C.shape[0]
    if np.linalg.matrix_rank(C) < p:
        raise AttackSynthesisError(f"measurement matrix is rank deficient (rank < {p}); C† update undefined")
    return np.linalg.pinv(C)


def estimate_attacked_state(
    sys: DescriptorSystem,
    cfg: ObserverConfig,
    y_star: np.ndarray,
    x_hat_prev: np.ndarray,
    u: np.ndarray,
    q_bar: np.ndarray,
    method: str = "observer_step",
    c_pinv: np.ndarray | None = None,
) -> np.ndarray:
    if method == "observer_step":
        return observer_step(sys, cfg, x_hat_prev, y_star, u, q_bar)
    if method == "pseudo_inverse":
        c_pinv = pseudo_inverse(sys.C) if c_pinv is None else c_pinv
        return np.asarray(x_hat_prev, dtype=float) + c_pinv @ y_star
    raise ValueError(f"unknown estimator '{method}'")
