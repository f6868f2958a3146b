# -*- coding: utf-8 -*-

"""
ATTACKER'S VIEW OF ONE STEP
===========================

Everything SCUA, SCAA and ICAA need at step k: the victim's model, gain and
detector (only ever peeked at through clones), the attack spec, the zone rows
of g and h, and the previous estimate x̂_{k−1}.

Residual placement:
  pre_se   r*_k = y*_k − C x̂_{k−1}     (detector runs before the estimator)
  post_se  r*_k = y*_k − C x̂*_k        (detector runs on the updated estimate)
"""

from dataclasses import dataclass, field

import numpy as np

from attacks.estimate import estimate_attacked_state, pseudo_inverse
from attacks.propagation import propagate_post_se
from attacks.scua import matrix_sqrt, scua_chi2, scua_cusum_agg, scua_cusum_vec
from attacks.spec import AttackSpec
from attacks.zone import AttackZone
from detection.chi2 import Chi2Detector
from detection.monitor import peek
from estimation.observer import ObserverConfig, observer_step_sensitivity
from grid.constraints import ConstraintModel, ConstraintReport
from grid.descriptor import DescriptorSystem


@dataclass
class AttackContext:
    sys: DescriptorSystem
    observer: ObserverConfig
    spec: AttackSpec
    detector: object
    sigma: np.ndarray
    constraints: ConstraintModel
    zone: AttackZone | None = None
    q_bar: np.ndarray | None = None
    sigma_sqrt: np.ndarray = field(init=False)
    g_rows: np.ndarray | None = field(init=False)
    h_rows: np.ndarray | None = field(init=False)
    c_pinv: np.ndarray | None = field(init=False, default=None)

    def __post_init__(self):
        self.spec.check_rows(self.sys.p)
        self.q_bar = self.sys.q_bar if self.q_bar is None else self.q_bar
        self.sigma_sqrt = matrix_sqrt(self.sigma)
        if self.zone is None:
            self.g_rows = self.h_rows = None
        else:
            self.g_rows = self.constraints.g_rows_within(self.zone.state_indices)
            self.h_rows = self.constraints.h_rows_within(self.zone.state_indices)
        if self.spec.estimator == "pseudo_inverse":
            self.c_pinv = pseudo_inverse(self.sys.C)

    @property
    def targets(self) -> np.ndarray:
        return np.array(self.spec.targets, dtype=int)

    # ---------------------------------------------------------
    # victim model
    # ---------------------------------------------------------

    def attacked_estimate(self, y_star, x_hat_prev, u):
        return estimate_attacked_state(
            self.sys, self.observer, y_star, x_hat_prev, u, self.q_bar,
            method=self.spec.estimator, c_pinv=self.c_pinv,
        )

    def sensitivity(self, y, x_hat_prev, u):
        """(clean estimate, ∂x̂*/∂y) for the configured estimator."""
        if self.spec.estimator == "pseudo_inverse":
            return np.asarray(x_hat_prev, dtype=float) + self.c_pinv @ y, self.c_pinv
        return observer_step_sensitivity(self.sys, self.observer, x_hat_prev, y, u, self.q_bar)

    def attacked_residual(self, y_star, x_hat_prev, x_hat_star):
        if self.spec.placement == "pre_se":
            return y_star - self.sys.C @ x_hat_prev
        return y_star - self.sys.C @ x_hat_star

    def report(self, x_hat_star) -> ConstraintReport:
        return self.constraints.report(x_hat_star, self.spec.zeta, self.g_rows, self.h_rows)

    def peek(self, r_star):
        return peek(self.detector, r_star)

    # ---------------------------------------------------------
    # closed-form starting vector
    # ---------------------------------------------------------

    def _scua_on_residual(self, r, is_first_step):
        det = self.detector
        idx = self.targets
        spec = self.spec
        if isinstance(det, Chi2Detector):
            return scua_chi2(r, det.alpha, self.sigma_sqrt, idx, spec.residual_mode)
        if det.mode == "aggregated":
            return scua_cusum_agg(r, det.c, det.tau, det.b, self.sigma_sqrt, idx,
                                  is_first_step, spec.residual_mode)
        return scua_cusum_vec(r, det.c, det.tau, det.b, idx, is_first_step, spec.sign)

    def scua_vector(self, y, x_hat_prev, u, is_first_step):
        """Constraint-unaware injection for the configured detector and placement."""
        C = self.sys.C
        if self.spec.placement == "pre_se":
            return self._scua_on_residual(y - C @ x_hat_prev, is_first_step)

        sens = None
        if self.spec.post_se_sign == "sensitivity":
            x_clean, sens = self.sensitivity(y, x_hat_prev, u)
        else:
            x_clean = self.attacked_estimate(y, x_hat_prev, u)
        r_post = y - C @ x_clean
        target = r_post + self._scua_on_residual(r_post, is_first_step)
        return propagate_post_se(target, r_post, self.observer.gain, C, self.observer.dt,
                                 sign=self.spec.post_se_sign, sensitivity=sens)
