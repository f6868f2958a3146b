# -*- coding: utf-8 -*-

"""
SCENARIO CONFIG VALIDATION
==========================

Source of truth  : config/defaults.yaml
Scenario input   : config/scenarios/<name>.yaml (merged over the defaults)
Validated output : ScenarioConfig (pydantic)

Every scenario names a case file and a seed; everything else falls back to
the defaults.
"""

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.app_config import CASE_DIR, load_defaults, resolve_path
from errors import ScenarioConfigError

# ============================================================
# SCHEMA CONTRACT
# ============================================================


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PowerFlowSettings(_Section):
    tolerance: float = Field(1e-8, gt=0)
    max_iterations: int = Field(50, ge=1)
    reactive_form: Literal["standard", "printed"] = "standard"


class IntegratorSettings(_Section):
    dt: float = Field(0.01, gt=0)
    newton_tolerance: float = Field(1e-10, gt=0)
    newton_max_iterations: int = Field(25, ge=1)
    min_dt: float = Field(1e-4, gt=0)

    @model_validator(mode="after")
    def _min_dt_below_dt(self):
        if self.min_dt > self.dt:
            raise ValueError(f"min_dt {self.min_dt} exceeds dt {self.dt}")
        return self


class ControlSettings(_Section):
    primary: bool = True
    droop: float = Field(0.05, gt=0)
    avr_gain: float = Field(20.0, ge=0)
    efd_max: float = Field(5.0, gt=0)


class NoiseSettings(_Section):
    measurement_std: float = Field(0.01, ge=0)
    process_std_dynamic: float = Field(0.0005, ge=0)
    process_std_algebraic: float = Field(0.0, ge=0)
    renewable_std_fraction: float = Field(0.01, ge=0)
    load_std_fraction: float = Field(0.01, ge=0)


class ObserverSettings(_Section):
    gain_file: str | None = None
    pole_factor: float = Field(5.0, gt=0)
    algebraic_blend: float = Field(0.5, ge=0)
    measurement_weight: float = Field(1.0, gt=0)
    validation_horizon: float = Field(10.0, gt=0)
    validation_angle_offset: float = 0.05
    validation_decay_ratio: float = Field(0.9, gt=0, le=1)


class DetectorSettings(_Section):
    kind: Literal["cusum", "chi2"] = "cusum"
    mode: Literal["aggregated", "vector"] = "aggregated"
    false_alarm_interval: float = Field(1000, ge=2)
    calibration_horizon: float = Field(30.0, gt=0)
    bias: float | list[float] | None = None
    threshold: float | list[float] | None = None

    @model_validator(mode="after")
    def _bias_and_threshold_together(self):
        if (self.bias is None) != (self.threshold is None):
            raise ValueError("detector bias and threshold must be given together (or both left to calibration)")
        return self


class ConstraintSettings(_Section):
    zeta: float = Field(0.22, ge=0)


class AttackSettings(_Section):
    strategy: Literal["scua_cusum_agg", "scua_cusum_vec", "scua_chi2", "scaa_opt", "icaa"] | None = None
    start_time: float = Field(15.0, gt=0)
    target_buses: list[int] | None = None
    target_rows: list[int] | None = None      # 1-based
    n_targets: int | None = Field(None, ge=1)
    zone_targets: list[int] | None = None
    spec_file: str | None = None
    beta: float = Field(0.01, gt=0, lt=1)
    n_max: int = Field(100, ge=1)
    sign: Literal["plus", "minus"] = "plus"
    residual_mode: Literal["literal", "masked"] = "literal"
    placement: Literal["pre_se", "post_se"] = "pre_se"
    post_se_sign: Literal["observer", "printed", "sensitivity"] = "observer"
    estimator: Literal["observer_step", "pseudo_inverse"] = "observer_step"
    relinearize_every: int = Field(50, ge=1)
    relinearize_distance: float = Field(0.05, gt=0)

    @model_validator(mode="after")
    def _one_target_selector(self):
        chosen = [k for k in ("target_buses", "target_rows", "n_targets") if getattr(self, k) is not None]
        if len(chosen) > 1:
            raise ValueError(f"choose one of target_buses / target_rows / n_targets, got {chosen}")
        if self.strategy and not chosen and not self.spec_file:
            raise ValueError("an attack needs target_buses, target_rows, n_targets or spec_file")
        return self


class ZoneSettings(_Section):
    d_max: int = Field(3, ge=0)
    epsilon: float = Field(1e-6, gt=0)


class LoadStepEvent(_Section):
    kind: Literal["load_step"] = "load_step"
    bus: int
    fraction: float
    time: float = Field(ge=0)


class SweepSettings(_Section):
    parameter: Literal["beta", "zeta", "n_targets"]
    values: list[float] = Field(min_length=1)
    max_workers: int = Field(1, ge=1)


class ScenarioConfig(_Section):
    name: str
    case: str
    seed: int
    horizon: float = Field(30.0, gt=0)
    output_dir: str | None = None
    baseline: str | None = None         # scenario whose exported summary anchors `report`
    sweep: SweepSettings | None = None
    events: list[LoadStepEvent] = []
    power_flow: PowerFlowSettings = PowerFlowSettings()
    integrator: IntegratorSettings = IntegratorSettings()
    controls: ControlSettings = ControlSettings()
    noise: NoiseSettings = NoiseSettings()
    observer: ObserverSettings = ObserverSettings()
    detector: DetectorSettings = DetectorSettings()
    constraints: ConstraintSettings = ConstraintSettings()
    attack: AttackSettings = AttackSettings()
    zone: ZoneSettings = ZoneSettings()

    @model_validator(mode="after")
    def _cross_checks(self):
        dt = self.integrator.dt
        for label, span in (("horizon", self.horizon), ("calibration horizon", self.detector.calibration_horizon)):
            steps = span / dt
            if abs(steps - round(steps)) > 1e-6:
                raise ValueError(f"{label} {span} is not a whole number of dt = {dt} steps")
        if self.attack.strategy and self.attack.start_time >= self.horizon:
            raise ValueError(f"attack start {self.attack.start_time} s is not before the horizon {self.horizon} s")
        for event in self.events:
            if event.time > self.horizon:
                raise ValueError(f"event at {event.time} s lies after the horizon")
        return self

    @property
    def case_path(self) -> Path:
        return resolve_path(self.case, Path(CASE_DIR))

    @property
    def attacked(self) -> bool:
        return self.attack.strategy is not None or self.attack.spec_file is not None

# ============================================================
# MERGING & LOADING
# ============================================================


def deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def validate_files(cfg: ScenarioConfig):
    missing = []
    if not cfg.case_path.exists():
        missing.append(f"case file {cfg.case}")
    for label, value in (("gain file", cfg.observer.gain_file), ("attack spec", cfg.attack.spec_file)):
        if value and not resolve_path(value).exists():
            missing.append(f"{label} {value}")
    if missing:
        raise ScenarioConfigError(f"referenced files do not exist: {', '.join(missing)}")


def scenario_from_dict(data: dict, defaults: dict | None = None, check_files: bool = True) -> ScenarioConfig:
    merged = deep_merge(load_defaults() if defaults is None else defaults, data)
    try:
        cfg = ScenarioConfig.model_validate(merged)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'scenario'}: {err['msg']}" for err in exc.errors()
        )
        raise ScenarioConfigError(f"invalid scenario config: {problems}") from None
    if check_files:
        validate_files(cfg)
    return cfg


def load_scenario_config(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    path = resolve_path(path)
    if not path.exists():
        raise ScenarioConfigError(f"scenario file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ScenarioConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioConfigError(f"{path}: top level must be a mapping")
    data.setdefault("name", path.stem)
    return scenario_from_dict(deep_merge(data, overrides or {}))
