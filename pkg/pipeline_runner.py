# -*- coding: utf-8 -*-

"""
GRID ATTACK LAB — SCENARIO RUNNER
=================================

Runs one scenario end-to-end from a YAML config:

  STAGE 0 → Config validation
  STAGE 1 → Case, power flow, descriptor model
  STAGE 2 → Observer gain (load or synthesize + validate)
  STAGE 3 → Detector calibration on an attack-free run
  STAGE 4 → Ground-truth simulation
  STAGE 5 → Estimation / detection / attack loop
  STAGE 6 → Metrics and export

Usage:
  python pipeline_runner.py <subcommand> --config <path> [--out <dir>] [--seed <n>]

Subcommands:
  simulate   ground truth only
  calibrate  detector calibration only
  attack     full scenario (a config without an attack gives the baseline)
  zone       attack zone for the configured target buses
  sweep      one scenario per parameter value
  report     findings from exported tables

Exit codes: 0 success, 1 config error, 2 runtime error, 3 attack infeasible.
"""

import argparse
import json
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from analytics.metrics import compute_metrics, mean_g_abs_sum, per_state_rmse, violation_rate, window_rmse
from analytics.validators import ScenarioConfig, load_scenario_config, scenario_from_dict
from attacks.context import AttackContext
from attacks.icaa import icaa
from attacks.scaa import LinearizationCache, scaa_optimize
from attacks.spec import AttackSpec, AttackTrace, load_attack_spec
from attacks.zone import AttackZone, zone_for_case
from config.app_config import log, resolve_path
from detection.calibration import calibrate_cusum, detector_from_calibration, history_steps
from detection.chi2 import Chi2Detector
from detection.cusum import CusumDetector
from detection.monitor import advance
from errors import (
    INPUT_ERRORS,
    AttackInfeasibleError,
    GridLabError,
    ScenarioConfigError,
    StageError,
)
from estimation.gain import load_or_synthesize_gain
from estimation.observer import ObserverConfig, estimate_sigma, observer_step, run_observer
from grid.case_parser import GridCase, load_case
from grid.constraints import ConstraintModel, constraint_model
from grid.descriptor import DescriptorSystem, assemble_descriptor
from grid.network import solve_power_flow
from insights.insight_engine import derive_findings
from simulation.controls import PrimaryControl
from simulation.noise import DisturbanceModel, NoiseModel
from simulation.simulator import LoadStep, Trajectory, simulate
from storage.results_store import (
    output_root,
    read_table,
    sha256_file,
    sha256_text,
    write_manifest,
    write_table,
)

# ============================================================
# VERSION
# ============================================================

PIPELINE_VERSION = "1.0.0"

CALIBRATION_SEED_OFFSET = 1
CONSTRAINED_STRATEGIES = ("icaa", "scaa_opt")
SCUA_DETECTORS = {
    "scua_cusum_agg": ("cusum", "aggregated"),
    "scua_cusum_vec": ("cusum", "vector"),
    "scua_chi2": ("chi2", None),
}
SWEEP_KEYS = {
    "beta": ("attack", "beta"),
    "zeta": ("constraints", "zeta"),
    "n_targets": ("attack", "n_targets"),
}

# ============================================================
# SCENARIO MODEL
# ============================================================


@dataclass
class ScenarioModel:
    case: GridCase
    sys: DescriptorSystem
    constraints: ConstraintModel
    observer: ObserverConfig


@dataclass
class DetectorSetup:
    detector: object
    sigma: np.ndarray
    info: dict


@dataclass
class ScenarioResult:
    name: str
    seed: int
    dt: float
    times: np.ndarray
    rmse: float
    mae_series: np.ndarray
    abs_error: np.ndarray          # (K+1)×n
    violations: np.ndarray         # (K+1,)
    g_abs_sum: np.ndarray          # (K+1,)
    detector_trace: np.ndarray     # (K+1,), NaN at k = 0
    alarm_steps: list
    runtime: float
    truth: Trajectory
    estimates: np.ndarray
    measurements: np.ndarray       # what the detector saw, y*_k
    attack: AttackTrace | None = None
    k_star: int | None = None
    strategy: str | None = None
    calibration: dict = field(default_factory=dict)
    config_hash: str = ""
    case_hash: str = ""

    @property
    def alarm_times(self) -> list:
        return [float(self.times[k]) for k in self.alarm_steps]

    @property
    def post_attack_rmse(self) -> float:
        if self.k_star is None:
            return float("nan")
        return window_rmse(self.truth.states, self.estimates, self.k_star)

    @property
    def post_attack_alarms(self) -> int:
        start = self.k_star or 0
        return sum(1 for k in self.alarm_steps if k >= start)

    @property
    def reverted_steps(self) -> int:
        if self.attack is None or self.k_star is None:
            return 0
        return int(np.count_nonzero(~self.attack.feasible[self.k_star:]))

    @property
    def all_reverted(self) -> bool:
        if self.attack is None or self.strategy not in CONSTRAINED_STRATEGIES:
            return False
        return not bool(np.any(self.attack.feasible[self.k_star:]))

    def summary(self) -> dict:
        start = self.k_star or 0
        return {
            "scenario": self.name,
            "seed": self.seed,
            "strategy": self.strategy or "none",
            "k_star": -1 if self.k_star is None else self.k_star,
            "rmse": self.rmse,
            "post_attack_rmse": self.post_attack_rmse,
            "mean_mae": float(np.mean(self.mae_series)),
            "alarm_count": len(self.alarm_steps),
            "post_attack_alarms": self.post_attack_alarms,
            "violation_rate": violation_rate(self.violations, start),
            "violations": int(self.violations[start:].sum()),
            "mean_g_abs_sum": mean_g_abs_sum(self.g_abs_sum, start),
            "reverted_steps": self.reverted_steps,
            "post_attack_steps": int(self.times.size - start),
        }

    def tables(self) -> dict:
        t = self.times
        names = self.truth.state_names
        states = pd.DataFrame(self.truth.states, columns=names)
        states.insert(0, "t", t)
        estimates = pd.DataFrame(self.estimates, columns=names)
        estimates.insert(0, "t", t)
        measurements = pd.DataFrame(self.measurements, columns=self.truth.measurement_names)
        measurements.insert(0, "t", t)
        alarmed = np.zeros(t.size, dtype=int)
        alarmed[self.alarm_steps] = 1
        metrics = pd.DataFrame({
            "k": np.arange(t.size),
            "t": t,
            "mae": self.mae_series,
            "violations": self.violations,
            "g_abs_sum": self.g_abs_sum,
            "detector_stat": self.detector_trace,
            "alarm": alarmed,
        })
        abs_error = pd.DataFrame(self.abs_error, columns=names)
        abs_error.insert(0, "t", t)
        out = {
            "states": states,
            "estimates": estimates,
            "measurements": measurements,
            "metrics": metrics,
            "abs_error": abs_error,
            "per_state_rmse": per_state_rmse(self.truth.states, self.estimates, names),
            "alarms": pd.DataFrame({"k": self.alarm_steps, "t": self.alarm_times}),
            "summary": pd.DataFrame([self.summary()]),
        }
        if self.attack is not None:
            attack = self.attack.to_frame()
            attack.insert(1, "t", t)
            out["attack"] = attack
        return out

# ============================================================
# BUILDING BLOCKS
# ============================================================


def config_hash(cfg: ScenarioConfig) -> str:
    return sha256_text(cfg.model_dump_json())


def build_model(cfg: ScenarioConfig) -> ScenarioModel:
    pf_cfg = cfg.power_flow
    case = load_case(cfg.case_path)
    op = solve_power_flow(case, tolerance=pf_cfg.tolerance, max_iterations=pf_cfg.max_iterations,
                          form=pf_cfg.reactive_form)
    log(f"Power flow | converged in {op.iterations} iterations | mismatch {op.mismatch:.2e}")
    sys_model = assemble_descriptor(case, op, pf_cfg.reactive_form)
    gain = load_or_synthesize_gain(sys_model, cfg.integrator.dt, cfg.observer.model_dump())
    observer = ObserverConfig(gain=gain, dt=cfg.integrator.dt, initial_estimate=sys_model.x_op.copy())
    return ScenarioModel(
        case=case,
        sys=sys_model,
        constraints=constraint_model(case, pf_cfg.reactive_form),
        observer=observer,
    )


def noise_models(cfg: ScenarioConfig, model: ScenarioModel, seed: int):
    n = cfg.noise
    disturbance = DisturbanceModel.from_case(
        model.case, seed,
        renewable_std_fraction=n.renewable_std_fraction,
        load_std_fraction=n.load_std_fraction,
    )
    noise = NoiseModel.diagonal(
        model.sys, seed,
        measurement_std=n.measurement_std,
        process_std_dynamic=n.process_std_dynamic,
        process_std_algebraic=n.process_std_algebraic,
    )
    return disturbance, noise


def plant_controls(cfg: ScenarioConfig, model: ScenarioModel) -> PrimaryControl | None:
    c = cfg.controls
    if not c.primary:
        return None
    return PrimaryControl.from_system(model.sys, droop=c.droop, avr_gain=c.avr_gain, efd_max=c.efd_max)


def simulate_truth(cfg: ScenarioConfig, model: ScenarioModel, seed: int, horizon: float | None = None,
                   with_events: bool = True) -> Trajectory:
    disturbance, noise = noise_models(cfg, model, seed)
    events = [LoadStep(e.bus, e.fraction, e.time) for e in cfg.events] if with_events else []
    return simulate(
        model.sys, model.sys.x_op, plant_controls(cfg, model), disturbance, noise,
        dt=cfg.integrator.dt,
        horizon=cfg.horizon if horizon is None else horizon,
        events=events,
        tolerance=cfg.integrator.newton_tolerance,
        max_iterations=cfg.integrator.newton_max_iterations,
        min_dt=cfg.integrator.min_dt,
    )


def calibration_horizon(cfg: ScenarioConfig) -> float:
    """Configured calibration span, raised so a CUSUM fit gets its full held-out half."""
    d = cfg.detector
    if d.kind != "cusum" or d.bias is not None:
        return d.calibration_horizon
    dt = cfg.integrator.dt
    needed = history_steps(d.false_alarm_interval) * dt
    if d.calibration_horizon >= needed:
        return d.calibration_horizon
    log(f"Calibration horizon {d.calibration_horizon:g} s raised to {needed:g} s for m = {d.false_alarm_interval:g}")
    return needed


def calibration_residuals(cfg: ScenarioConfig, model: ScenarioModel) -> np.ndarray:
    """Residual history of an attack-free run, in the placement the detector will see."""
    run = simulate_truth(cfg, model, cfg.seed + CALIBRATION_SEED_OFFSET,
                         horizon=calibration_horizon(cfg), with_events=False)
    trace = run_observer(model.sys, model.observer, run.measurements, run.inputs)
    if cfg.attack.placement == "post_se":
        return trace.residuals[1:]
    return run.measurements[1:] - trace.estimates[:-1] @ model.sys.C.T


def build_detector(cfg: ScenarioConfig, model: ScenarioModel) -> DetectorSetup:
    d = cfg.detector
    history = calibration_residuals(cfg, model)
    sigma = estimate_sigma(history)
    sigma_inv = np.linalg.inv(sigma)

    if d.kind == "chi2":
        det = Chi2Detector.from_sigma(sigma, d.false_alarm_interval)
        log(f"Chi-squared detector | alpha {det.alpha:.4f} | p {det.p}")
        return DetectorSetup(det, sigma, {"kind": "chi2", "alpha": det.alpha, "history_len": len(history)})

    if d.bias is not None:
        det = CusumDetector(mode=d.mode, b=d.bias, tau=d.threshold,
                            sigma_inv=sigma_inv if d.mode == "aggregated" else None)
        info = {"kind": "cusum", "mode": d.mode, "b": d.bias, "tau": d.threshold, "history_len": len(history)}
        return DetectorSetup(det, sigma, info)

    cal = calibrate_cusum(history, d.false_alarm_interval, mode=d.mode, sigma_inv=sigma_inv)
    det = detector_from_calibration(cal, sigma_inv if d.mode == "aggregated" else None)
    return DetectorSetup(det, sigma, {"kind": "cusum", **cal.to_dict()})


def attack_start_step(cfg: ScenarioConfig) -> int:
    """First step k with k·dt ≥ start time."""
    return max(1, int(np.ceil(cfg.attack.start_time / cfg.integrator.dt - 1e-9)))


def rows_touching(labels, buses) -> list:
    buses = {int(b) for b in buses}
    rows = []
    for i, label in enumerate(labels):
        ends = label.split("_", 1)[1].split("-")
        if any(int(e) in buses for e in ends):
            rows.append(i)
    return rows


def build_attack_spec(cfg: ScenarioConfig, model: ScenarioModel) -> AttackSpec | None:
    a = cfg.attack
    if a.spec_file:
        spec = load_attack_spec(resolve_path(a.spec_file))
    elif a.strategy is None:
        return None
    else:
        labels = model.sys.measurement_labels
        if a.target_buses is not None:
            targets = rows_touching(labels, a.target_buses)
            if not targets:
                raise ScenarioConfigError(f"no measurement rows touch buses {a.target_buses}")
        elif a.target_rows is not None:
            targets = [r - 1 for r in a.target_rows]
        else:
            if a.n_targets > len(labels):
                raise ScenarioConfigError(f"n_targets {a.n_targets} exceeds measurement count {len(labels)}")
            targets = list(range(a.n_targets))
        spec = AttackSpec(
            targets=tuple(targets),
            k_star=attack_start_step(cfg),
            strategy=a.strategy,
            detector_params={"kind": cfg.detector.kind, "mode": cfg.detector.mode},
            beta=a.beta,
            n_max=a.n_max,
            zeta=cfg.constraints.zeta,
            placement=a.placement,
            sign=a.sign,
            residual_mode=a.residual_mode,
            post_se_sign=a.post_se_sign,
            estimator=a.estimator,
            zone_targets=tuple(a.zone_targets or a.target_buses or ()),
        )

    spec.check_rows(model.sys.p)
    wanted = SCUA_DETECTORS.get(spec.strategy)
    if wanted is not None:
        kind, mode = wanted
        if cfg.detector.kind != kind or (mode is not None and cfg.detector.mode != mode):
            raise ScenarioConfigError(
                f"strategy {spec.strategy} needs a {kind} detector"
                + (f" in {mode} mode" if mode else "")
            )
    return spec


def build_zone(cfg: ScenarioConfig, case: GridCase, spec: AttackSpec | None) -> AttackZone | None:
    targets = (spec.zone_targets if spec is not None else ()) or tuple(cfg.attack.zone_targets or ())
    if not targets:
        return None
    return zone_for_case(case, targets, cfg.zone.d_max, cfg.zone.epsilon)

# ============================================================
# ESTIMATION / DETECTION / ATTACK LOOP
# ============================================================


def _attack_step(ctx: AttackContext, cache, y, x_hat, u, k, is_first):
    """(a, feasible, iterations, attacker's predicted x̂*) for one attacked step."""
    spec = ctx.spec
    if spec.strategy == "icaa":
        res = icaa(ctx, y, x_hat, u, is_first)
        return res.a, res.feasible, res.iterations_used, res.x_hat_star
    if spec.strategy == "scaa_opt":
        res = scaa_optimize(ctx, y, x_hat, u, cache.get(x_hat, k))
        return res.a, res.status == "optimal", 1, None
    return ctx.scua_vector(y, x_hat, u, is_first), True, 0, None


def run_loop(cfg: ScenarioConfig, model: ScenarioModel, truth: Trajectory, setup: DetectorSetup,
             spec: AttackSpec | None, zone: AttackZone | None):
    sys_model = model.sys
    k_total = len(truth)
    detector = setup.detector

    estimates = np.empty((k_total, sys_model.n))
    seen = truth.measurements.copy()
    stats = np.full(k_total, np.nan)
    violations = np.zeros(k_total, dtype=int)
    g_abs = np.full(k_total, np.nan)
    alarm_steps = []

    ctx = cache = trace = None
    if spec is not None:
        ctx = AttackContext(sys=sys_model, observer=model.observer, spec=spec, detector=detector,
                            sigma=setup.sigma, constraints=model.constraints, zone=zone)
        cache = LinearizationCache(ctx, cfg.attack.relinearize_every, cfg.attack.relinearize_distance)
        trace = AttackTrace(
            injected=np.zeros((k_total, sys_model.p)),
            attacked_measurements=seen,
            attacked_estimates=estimates,
            feasible=np.zeros(k_total, dtype=bool),
            iterations=np.zeros(k_total, dtype=int),
            detector_stat=stats,
        )

    def check(x):
        if ctx is not None:
            return ctx.report(x)
        return model.constraints.report(x, cfg.constraints.zeta)

    x_hat = np.asarray(model.observer.initial_estimate, dtype=float).copy()
    estimates[0] = x_hat
    first = check(x_hat)
    violations[0], g_abs[0] = first.violation_count, first.g_abs_sum
    if trace is not None:
        trace.reports.append(first)

    for k in range(1, k_total):
        y = truth.measurements[k]
        u = truth.inputs[k - 1]
        a = None
        predicted = None

        if spec is not None and k >= spec.k_star:
            try:
                a, ok, iters, predicted = _attack_step(ctx, cache, y, x_hat, u, k, k == spec.k_star)
            except GridLabError as exc:
                raise StageError("attack", k, exc) from exc
            trace.injected[k] = a
            trace.feasible[k] = ok
            trace.iterations[k] = iters

        y_star = y if a is None else y + a
        seen[k] = y_star
        try:
            if predicted is not None and spec.estimator == "observer_step":
                x_next = predicted
            else:
                x_next = observer_step(sys_model, model.observer, x_hat, y_star, u, sys_model.q_bar)
        except GridLabError as exc:
            raise StageError("estimate", k, exc) from exc

        r = y_star - sys_model.C @ (x_next if cfg.attack.placement == "post_se" else x_hat)
        stats[k], alarm = advance(detector, r)
        if alarm:
            alarm_steps.append(k)

        x_hat = x_next
        estimates[k] = x_hat
        report = check(x_hat)
        violations[k], g_abs[k] = report.violation_count, report.g_abs_sum
        if trace is not None:
            trace.reports.append(report)

    return estimates, seen, stats, violations, g_abs, alarm_steps, trace

# ============================================================
# SCENARIO ENTRY POINT
# ============================================================


def _stage(n: int, what: str, fn, *args):
    log(f"STAGE {n} | {what}")
    try:
        out = fn(*args)
    except StageError:
        raise
    except GridLabError as exc:
        raise StageError(what, None, exc) from exc
    log(f"STAGE {n} | {what} | SUCCESS")
    return out


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Simulate → (attack) → observe → detect, with ground truth kept for the metrics."""
    started = time.perf_counter()
    log(f"Scenario {cfg.name} | seed {cfg.seed} | runner v{PIPELINE_VERSION}")

    model = _stage(1, "build model", build_model, cfg)
    spec = _stage(2, "attack spec", build_attack_spec, cfg, model)
    zone = _stage(2, "attack zone", build_zone, cfg, model.case, spec)
    if zone is not None:
        log(f"Attack zone | {sorted(zone.zone)} | boundary {sorted(zone.boundary)}")
    setup = _stage(3, "calibrate detector", build_detector, cfg, model)
    truth = _stage(4, "simulate", simulate_truth, cfg, model, cfg.seed)
    estimates, seen, stats, violations, g_abs, alarms, trace = _stage(
        5, "estimate / detect / attack", run_loop, cfg, model, truth, setup, spec, zone
    )

    metrics = compute_metrics(truth, estimates)
    result = ScenarioResult(
        name=cfg.name,
        seed=cfg.seed,
        dt=cfg.integrator.dt,
        times=truth.times,
        rmse=metrics["rmse"],
        mae_series=metrics["mae_series"],
        abs_error=metrics["abs_error"],
        violations=violations,
        g_abs_sum=g_abs,
        detector_trace=stats,
        alarm_steps=alarms,
        runtime=time.perf_counter() - started,
        truth=truth,
        estimates=estimates,
        measurements=seen,
        attack=trace,
        k_star=None if spec is None else spec.k_star,
        strategy=None if spec is None else spec.strategy,
        calibration=setup.info,
        config_hash=config_hash(cfg),
        case_hash=sha256_file(cfg.case_path),
    )
    log(f"STAGE 6 | rmse {result.rmse:.4f} | alarms {len(alarms)} | "
        f"reverted {result.reverted_steps} | {result.runtime:.1f} s")
    return result

# ============================================================
# EXPORT
# ============================================================


def export_tables(name: str, tables: dict, manifest: dict, out_dir=None, fmt: str = "csv") -> list:
    """`<name>.<series>.<fmt>` per table plus `<name>.manifest.json`."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format '{fmt}'")
    root = output_root(out_dir)
    written = []
    for series, df in tables.items():
        if fmt == "csv":
            written.append(write_table(root, f"{name}.{series}", df))
        else:
            path = root / f"{name}.{series}.json"
            path.write_text(df.to_json(orient="records", double_precision=12) + "\n", encoding="utf-8")
            written.append(path)
    body = dict(manifest)
    body["series"] = sorted(tables)
    body["columns"] = {series: list(df.columns) for series, df in sorted(tables.items())}
    body["format"] = fmt
    written.append(write_manifest(root, name, body))
    return written


def export(result: ScenarioResult, out_dir=None, fmt: str = "csv") -> list:
    manifest = {
        "pipeline_version": PIPELINE_VERSION,
        "config_sha256": result.config_hash,
        "case_sha256": result.case_hash,
        "seeds": {"simulation": result.seed, "calibration": result.seed + CALIBRATION_SEED_OFFSET},
        "dt": result.dt,
        "calibration": result.calibration,
        "runtime_s": round(result.runtime, 3),
    }
    paths = export_tables(result.name, result.tables(), manifest, out_dir, fmt)
    log(f"Export | {len(paths)} files → {paths[-1].parent}")
    return paths

# ============================================================
# SWEEP
# ============================================================


def sweep_config(base: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    if parameter not in SWEEP_KEYS:
        raise ScenarioConfigError(f"cannot sweep '{parameter}', choose one of {sorted(SWEEP_KEYS)}")
    section, key = SWEEP_KEYS[parameter]
    data = base.model_dump()
    data["sweep"] = None
    data["name"] = f"{base.name}.{parameter}={value:g}"
    if parameter == "n_targets":
        value = int(value)
        data["attack"]["target_buses"] = None
        data["attack"]["target_rows"] = None
    data[section][key] = value
    return scenario_from_dict(data, defaults={}, check_files=False)


def _sweep_row(parameter: str, value, cfg: ScenarioConfig) -> dict:
    result = run_scenario(cfg)
    s = result.summary()
    return {
        "parameter": parameter,
        "value": value,
        "rmse": result.rmse,
        "post_attack_rmse": s["post_attack_rmse"],
        "runtime_s": result.runtime,
        "violations": s["violations"],
        "violation_rate": s["violation_rate"],
        "alarms": s["alarm_count"],
        "reverted_steps": s["reverted_steps"],
        "iterations": 0 if result.attack is None else int(result.attack.iterations.sum()),
    }


def sweep(parameter: str, values, base: ScenarioConfig, max_workers: int = 1) -> pd.DataFrame:
    """One scenario per value, same seeds; rows keyed and sorted by value."""
    configs = [(v, sweep_config(base, parameter, v)) for v in values]
    log(f"Sweep | {parameter} over {list(values)} | workers {max_workers}")
    if max_workers <= 1:
        rows = [_sweep_row(parameter, v, c) for v, c in configs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(_sweep_row, parameter, v, c) for v, c in configs]
            rows = [f.result() for f in futures]
    return pd.DataFrame(rows).sort_values("value", ignore_index=True)

# ============================================================
# REPORT
# ============================================================


def report(cfg: ScenarioConfig, out_dir=None) -> pd.DataFrame:
    root = output_root(out_dir or cfg.output_dir)
    summary = read_table(root, f"{cfg.name}.summary")
    if summary.empty:
        raise ScenarioConfigError(f"no exported summary for scenario {cfg.name} in {root}")
    baseline = read_table(root, f"{cfg.baseline}.summary") if cfg.baseline else pd.DataFrame()
    if cfg.baseline and baseline.empty:
        log(f"WARNING | baseline {cfg.baseline} has no exported summary; impact ratio skipped")
    metrics = read_table(root, f"{cfg.name}.metrics")
    findings = derive_findings(summary.iloc[0], metrics, None if baseline.empty else baseline.iloc[0])
    write_table(root, f"{cfg.name}.findings", findings)
    return findings

# ============================================================
# CLI ENTRY
# ============================================================


def _load(args) -> ScenarioConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    return load_scenario_config(args.config, overrides)


def _cmd_simulate(cfg: ScenarioConfig) -> int:
    model = _stage(1, "build model", build_model, cfg)
    truth = _stage(4, "simulate", simulate_truth, cfg, model, cfg.seed)
    manifest = {
        "pipeline_version": PIPELINE_VERSION,
        "config_sha256": config_hash(cfg),
        "case_sha256": sha256_file(cfg.case_path),
        "seeds": {"simulation": cfg.seed},
        "dt": cfg.integrator.dt,
    }
    tables = {"states": truth.state_frame(), "measurements": truth.measurement_frame()}
    export_tables(cfg.name, tables, manifest, cfg.output_dir)
    return 0


def _cmd_calibrate(cfg: ScenarioConfig) -> int:
    model = _stage(1, "build model", build_model, cfg)
    setup = _stage(3, "calibrate detector", build_detector, cfg, model)
    root = output_root(cfg.output_dir)
    path = root / f"{cfg.name}.calibration.json"
    path.write_text(json.dumps(setup.info, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    log(f"Calibration written to {path}")
    return 0


def _cmd_attack(cfg: ScenarioConfig) -> int:
    result = run_scenario(cfg)
    export(result, cfg.output_dir)
    if result.all_reverted:
        raise AttackInfeasibleError(
            f"{result.strategy} reverted to zero at every step from k = {result.k_star}"
        )
    return 0


def _cmd_zone(cfg: ScenarioConfig) -> int:
    targets = cfg.attack.zone_targets or cfg.attack.target_buses
    if not targets:
        raise ScenarioConfigError("zone needs attack.zone_targets or attack.target_buses")
    case = load_case(cfg.case_path)
    zone = zone_for_case(case, targets, cfg.zone.d_max, cfg.zone.epsilon)
    body = {"targets": list(targets), "d_max": cfg.zone.d_max, **zone.to_dict()}
    root = output_root(cfg.output_dir)
    (root / f"{cfg.name}.zone.json").write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(body))
    return 0


def _cmd_sweep(cfg: ScenarioConfig, args) -> int:
    parameter = args.parameter or (cfg.sweep.parameter if cfg.sweep else None)
    values = args.values or (cfg.sweep.values if cfg.sweep else None)
    if not parameter or not values:
        raise ScenarioConfigError("sweep needs a parameter and values (config `sweep:` block or --parameter/--values)")
    workers = args.workers or (cfg.sweep.max_workers if cfg.sweep else 1)
    table = sweep(parameter, values, cfg, workers)
    manifest = {
        "pipeline_version": PIPELINE_VERSION,
        "config_sha256": config_hash(cfg),
        "case_sha256": sha256_file(cfg.case_path),
        "seeds": {"simulation": cfg.seed, "calibration": cfg.seed + CALIBRATION_SEED_OFFSET},
        "dt": cfg.integrator.dt,
    }
    export_tables(f"{cfg.name}.sweep", {"table": table}, manifest, cfg.output_dir)
    print(table.to_string(index=False))
    return 0


def _cmd_report(cfg: ScenarioConfig) -> int:
    findings = report(cfg)
    for row in findings.itertuples(index=False):
        print(f"- {row.finding} ({row.confidence})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipeline_runner.py", description="Grid attack lab scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "calibrate", "attack", "zone", "sweep", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario YAML")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if name == "sweep":
            p.add_argument("--parameter", choices=sorted(SWEEP_KEYS), default=None)
            p.add_argument("--values", type=float, nargs="+", default=None)
            p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log(f"Starting grid attack lab runner v{PIPELINE_VERSION} | {args.command}")
    try:
        cfg = _load(args)
        if args.command == "simulate":
            code = _cmd_simulate(cfg)
        elif args.command == "calibrate":
            code = _cmd_calibrate(cfg)
        elif args.command == "attack":
            code = _cmd_attack(cfg)
        elif args.command == "zone":
            code = _cmd_zone(cfg)
        elif args.command == "sweep":
            code = _cmd_sweep(cfg, args)
        else:
            code = _cmd_report(cfg)
        log("PIPELINE COMPLETED SUCCESSFULLY")
        return code

    except AttackInfeasibleError as e:
        log("PIPELINE FINISHED | ATTACK INFEASIBLE")
        log(str(e))
        return 3

    except INPUT_ERRORS as e:
        log("PIPELINE FAILED | CONFIG ERROR")
        log(str(e))
        return 1

    except StageError as e:
        log("PIPELINE FAILED")
        log(str(e))
        if isinstance(e.cause, INPUT_ERRORS):
            return 1
        traceback.print_exc()
        return 2

    except Exception as e:
        log("PIPELINE FAILED")
        log(str(e))
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
