# -*- coding: utf-8 -*-

"""
ATTACK SPECIFICATION AND TRACE
==============================

AttackSpec fixes which measurement rows are falsified (Γ, kept as a sorted
index set), from which step, and by which strategy. AttackTrace records what
was injected at every step.

On disk an AttackSpec is JSON; `targets` there are 1-based row numbers.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ScenarioConfigError

STRATEGIES = ("scua_cusum_agg", "scua_cusum_vec", "scua_chi2", "scaa_opt", "icaa")
PLACEMENTS = ("pre_se", "post_se")
RESIDUAL_MODES = ("literal", "masked")
SIGNS = ("plus", "minus")
POST_SE_SIGNS = ("observer", "printed", "sensitivity")
ESTIMATORS = ("observer_step", "pseudo_inverse")


@dataclass(frozen=True)
class AttackSpec:
    targets: tuple                 # 0-based measurement rows
    k_star: int
    strategy: str
    detector_params: dict = field(default_factory=dict, compare=False)
    beta: float = 0.01
    n_max: int = 100
    zeta: float = 0.22
    placement: str = "pre_se"
    sign: str = "plus"
    residual_mode: str = "literal"
    post_se_sign: str = "observer"
    estimator: str = "observer_step"
    zone_targets: tuple = ()       # bus ids seeding the attack zone

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(sorted(set(int(i) for i in self.targets))))
        object.__setattr__(self, "zone_targets", tuple(int(b) for b in self.zone_targets))
        checks = (
            (self.strategy in STRATEGIES, f"strategy must be one of {STRATEGIES}"),
            (self.placement in PLACEMENTS, f"placement must be one of {PLACEMENTS}"),
            (self.sign in SIGNS, f"sign must be one of {SIGNS}"),
            (self.residual_mode in RESIDUAL_MODES, f"residual_mode must be one of {RESIDUAL_MODES}"),
            (self.post_se_sign in POST_SE_SIGNS, f"post_se_sign must be one of {POST_SE_SIGNS}"),
            (self.estimator in ESTIMATORS, f"estimator must be one of {ESTIMATORS}"),
            (self.k_star >= 1, f"k_star must be at least 1, got {self.k_star}"),
            (0.0 < self.beta < 1.0, f"beta must lie in (0, 1), got {self.beta}"),
            (self.n_max >= 1, f"n_max must be at least 1, got {self.n_max}"),
            (self.zeta >= 0.0, f"zeta must be nonnegative, got {self.zeta}"),
            (len(self.targets) >= 1, "at least one target measurement is required"),
            (min(self.targets, default=0) >= 0, "target rows must be nonnegative"),
        )
        for ok, message in checks:
            if not ok:
                raise ScenarioConfigError(message)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def check_rows(self, p: int):
        if max(self.targets) >= p:
            raise ScenarioConfigError(f"target row {max(self.targets) + 1} exceeds measurement count {p}")

    def gamma(self, p: int) -> np.ndarray:
        """p×p diagonal 0/1 selection matrix."""
        self.check_rows(p)
        g = np.zeros((p, p))
        g[self.targets, self.targets] = 1.0
        return g

    def mask(self, p: int) -> np.ndarray:
        self.check_rows(p)
        out = np.zeros(p, dtype=bool)
        out[list(self.targets)] = True
        return out

    def to_dict(self) -> dict:
        return {
            "targets": [i + 1 for i in self.targets],
            "k_star": self.k_star,
            "strategy": self.strategy,
            "beta": self.beta,
            "n_max": self.n_max,
            "zeta": self.zeta,
            "placement": self.placement,
            "sign": self.sign,
            "residual_mode": self.residual_mode,
            "post_se_sign": self.post_se_sign,
            "estimator": self.estimator,
            "zone_targets": list(self.zone_targets),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackSpec":
        data = dict(data)
        try:
            targets = [int(i) - 1 for i in data.pop("targets")]
        except KeyError:
            raise ScenarioConfigError("attack spec needs 'targets'") from None
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ScenarioConfigError(f"unknown attack spec fields: {sorted(unknown)}")
        try:
            return cls(targets=tuple(targets), **data)
        except TypeError as exc:
            raise ScenarioConfigError(f"invalid attack spec: {exc}") from None


def load_attack_spec(path: str | Path) -> AttackSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioConfigError(f"attack spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioConfigError(f"{path}: {exc}") from None
    return AttackSpec.from_dict(data)


@dataclass
class AttackTrace:
    injected: np.ndarray          # (K+1)×p, a_k
    attacked_measurements: np.ndarray   # (K+1)×p, y*_k
    attacked_estimates: np.ndarray      # (K+1)×n, x̂*_k
    feasible: np.ndarray          # (K+1,) bool
    iterations: np.ndarray        # (K+1,) int
    detector_stat: np.ndarray     # (K+1,) statistic after the attacked residual
    reports: list = field(default_factory=list)

    @property
    def g_abs_sum(self) -> np.ndarray:
        return np.array([r.g_abs_sum if r is not None else np.nan for r in self.reports])

    @property
    def violations(self) -> np.ndarray:
        return np.array([r.violation_count if r is not None else 0 for r in self.reports], dtype=int)

    def to_frame(self) -> pd.DataFrame:
        k = np.arange(self.injected.shape[0])
        return pd.DataFrame({
            "k": k,
            "feasible": self.feasible.astype(int),
            "iterations": self.iterations,
            "norm_a": np.linalg.norm(self.injected, axis=1),
            "g_abs_sum": self.g_abs_sum,
            "violations": self.violations,
            "detector_stat": self.detector_stat,
        })
