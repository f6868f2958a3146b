# -*- coding: utf-8 -*-

"""
Scenario runner: building blocks, short 9-bus runs and the CLI.

Full-length runs and the multi-seed comparisons are marked slow.
"""

import json
from functools import lru_cache
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from analytics.validators import deep_merge, load_scenario_config, scenario_from_dict
from config.app_config import SCENARIO_DIR
from errors import ScenarioConfigError
from pipeline_runner import (
    attack_start_step,
    build_attack_spec,
    calibration_horizon,
    export,
    export_tables,
    main,
    report,
    rows_touching,
    run_scenario,
    sweep,
    sweep_config,
)

QUICK = {
    "name": "case9_quick",
    "case": "case9.txt",
    "seed": 3,
    "horizon": 1.0,
    "detector": {"kind": "chi2", "false_alarm_interval": 100, "calibration_horizon": 3.0},
}

SILENT = {
    "noise": {
        "measurement_std": 0.0,
        "process_std_dynamic": 0.0,
        "process_std_algebraic": 0.0,
        "renewable_std_fraction": 0.0,
        "load_std_fraction": 0.0,
    }
}


def quick(**sections):
    return scenario_from_dict(deep_merge(QUICK, sections))

# =================================================================
# Building blocks
# =================================================================


def test_rows_touching():
    labels = ["v_4", "theta_4", "imag_4-5", "iang_4-5", "v_6", "ire_6-7"]
    assert rows_touching(labels, [5]) == [2, 3]
    assert rows_touching(labels, [6, 7]) == [4, 5]
    assert rows_touching(labels, [2]) == []


def test_attack_start_step():
    assert attack_start_step(quick(attack={"strategy": "icaa", "start_time": 0.5, "target_buses": [5]})) == 50
    assert attack_start_step(quick(attack={"strategy": "icaa", "start_time": 0.005, "target_buses": [5]})) == 1


def test_cusum_calibration_run_is_sized_from_m():
    assert calibration_horizon(quick()) == 3.0
    fitted = quick(detector={"kind": "cusum", "false_alarm_interval": 100})
    assert calibration_horizon(fitted) == pytest.approx(20.0)
    longer = quick(detector={"kind": "cusum", "false_alarm_interval": 100, "calibration_horizon": 30.0})
    assert calibration_horizon(longer) == 30.0
    fixed = quick(detector={"kind": "cusum", "bias": 1.0, "threshold": 5.0})
    assert calibration_horizon(fixed) == 3.0


def test_spec_from_config(case9_sys):
    cfg = quick(attack={"strategy": "scua_chi2", "start_time": 0.5, "target_buses": [5]})
    spec = build_attack_spec(cfg, SimpleNamespace(sys=case9_sys))
    assert spec.targets == tuple(rows_touching(case9_sys.measurement_labels, [5]))
    assert spec.k_star == 50
    assert spec.zone_targets == (5,)


def test_strategy_must_match_detector(case9_sys):
    cfg = quick(detector={"kind": "cusum"}, attack={"strategy": "scua_chi2", "target_buses": [5], "start_time": 0.5})
    with pytest.raises(ScenarioConfigError, match="needs a chi2 detector"):
        build_attack_spec(cfg, SimpleNamespace(sys=case9_sys))


def test_no_rows_at_target_bus(case9_sys):
    # every case9 bus has a measured line, so use a narrower meter set
    meters = SimpleNamespace(measurement_labels=("v_4", "theta_4", "imag_4-5", "iang_4-5"), p=4)
    cfg = quick(attack={"strategy": "icaa", "start_time": 0.5, "target_buses": [2]})
    with pytest.raises(ScenarioConfigError, match="no measurement rows"):
        build_attack_spec(cfg, SimpleNamespace(sys=meters))
    cfg = quick(attack={"strategy": "icaa", "start_time": 0.5, "target_buses": [99]})
    with pytest.raises(ScenarioConfigError, match="no measurement rows"):
        build_attack_spec(cfg, SimpleNamespace(sys=case9_sys))


def test_sweep_config():
    base = quick(attack={"strategy": "icaa", "start_time": 0.5, "target_buses": [5]})
    cfg = sweep_config(base, "n_targets", 3.0)
    assert cfg.name == "case9_quick.n_targets=3"
    assert cfg.attack.n_targets == 3
    assert cfg.attack.target_buses is None
    assert sweep_config(base, "beta", 0.05).attack.beta == 0.05
    assert sweep_config(base, "zeta", 0.5).constraints.zeta == 0.5
    with pytest.raises(ScenarioConfigError):
        sweep_config(base, "seed", 1)


def test_export_formats(tmp_path):
    tables = {"metrics": pd.DataFrame({"k": [0, 1], "mae": [0.0, 0.5]})}
    paths = export_tables("run", tables, {"dt": 0.01}, tmp_path)
    assert [p.name for p in paths] == ["run.metrics.csv", "run.manifest.json"]
    paths = export_tables("run", tables, {"dt": 0.01}, tmp_path, fmt="json")
    assert json.loads(paths[0].read_text()) == [{"k": 0, "mae": 0.0}, {"k": 1, "mae": 0.5}]
    manifest = json.loads(paths[-1].read_text())
    assert manifest["columns"] == {"metrics": ["k", "mae"]}
    with pytest.raises(ValueError):
        export_tables("run", tables, {}, tmp_path, fmt="parquet")

# =================================================================
# Short 9-bus runs
# =================================================================


def test_noise_free_baseline_is_exact(tmp_path):
    cfg = quick(**SILENT)
    result = run_scenario(cfg)
    assert result.rmse < 1e-6
    assert result.alarm_steps == []
    assert result.strategy is None

    summary = result.summary()
    assert summary["k_star"] == -1
    assert summary["post_attack_steps"] == 101
    tables = result.tables()
    assert {"states", "estimates", "measurements", "metrics", "alarms", "summary"} <= set(tables)
    assert "attack" not in tables
    assert np.isnan(tables["metrics"]["detector_stat"].iloc[0])

    paths = export(result, tmp_path)
    manifest = json.loads(paths[-1].read_text())
    assert manifest["seeds"] == {"simulation": 3, "calibration": 4}

    findings = report(cfg, tmp_path)
    assert findings["category"].tolist() == ["stealth", "constraint_separation", "impact_ratio"]
    assert (tmp_path / "case9_quick.findings.csv").exists()


def test_closed_form_attack_stays_below_chi2_threshold():
    result = run_scenario(quick(attack={"strategy": "scua_chi2", "start_time": 0.5, "target_buses": [5]}))
    assert result.k_star == 50
    assert result.post_attack_alarms == 0
    assert np.all(result.detector_trace[50:] <= result.calibration["alpha"])
    frame = result.tables()["attack"]
    assert frame["norm_a"].iloc[:50].eq(0).all()
    assert (frame["norm_a"].iloc[50:] > 0).all()


def test_icaa_feasible_steps_pass_every_check():
    result = run_scenario(quick(attack={"strategy": "icaa", "start_time": 0.5, "target_buses": [5], "n_max": 20}))
    feasible = result.attack.feasible
    assert np.all(result.violations[feasible] == 0)
    assert result.post_attack_alarms == 0
    assert result.reverted_steps == int(np.count_nonzero(~feasible[50:]))


def test_beta_sweep_table():
    base = quick(attack={"strategy": "icaa", "start_time": 0.5, "target_buses": [5]})
    table = sweep("beta", [0.1, 0.01], base)
    assert table["value"].tolist() == [0.01, 0.1]
    assert {"rmse", "runtime_s", "violations", "alarms", "reverted_steps", "iterations"} <= set(table.columns)


def test_same_seed_same_run():
    cfg = quick(attack={"strategy": "scua_chi2", "start_time": 0.5, "target_buses": [5]})
    first, second = run_scenario(cfg), run_scenario(cfg)
    np.testing.assert_array_equal(first.estimates, second.estimates)
    np.testing.assert_array_equal(first.measurements, second.measurements)

# =================================================================
# CLI
# =================================================================


def test_missing_config_exits_with_config_error(tmp_path):
    assert main(["attack", "--config", str(tmp_path / "absent.yaml")]) == 1


def test_zone_subcommand(tmp_path, capsys):
    code = main(["zone", "--config", str(SCENARIO_DIR / "ieee39_scua.yaml"), "--out", str(tmp_path)])
    assert code == 0
    body = json.loads((tmp_path / "ieee39_scua.zone.json").read_text())
    assert body["targets"] == [10, 11]
    assert body["zone"] == [4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 31, 32]
    assert body["boundary"] == [3, 9, 16]
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == body


def test_zone_without_targets(tmp_path):
    assert main(["zone", "--config", str(SCENARIO_DIR / "ieee39_baseline.yaml"), "--out", str(tmp_path)]) == 1

# =================================================================
# Full-length 39-bus runs
# =================================================================


@pytest.mark.slow
def test_ieee39_constraint_unaware_attack_is_stealthy(tmp_path):
    cfg = load_scenario_config(SCENARIO_DIR / "ieee39_scua.yaml", {"output_dir": str(tmp_path)})
    result = run_scenario(cfg)
    assert result.k_star == 1500
    assert result.post_attack_alarms == 0


@pytest.mark.slow
def test_ieee39_icaa_from_cli(tmp_path):
    code = main(["attack", "--config", str(SCENARIO_DIR / "ieee39_icaa.yaml"), "--out", str(tmp_path)])
    assert code in (0, 3)
    summary = pd.read_csv(tmp_path / "ieee39_icaa.summary.csv")
    assert summary.loc[0, "strategy"] == "icaa"


SEEDS = (7, 8, 9, 10, 11)


@lru_cache(maxsize=None)
def ieee39(name: str, seed: int = 7):
    return run_scenario(load_scenario_config(SCENARIO_DIR / f"{name}.yaml", {"seed": seed}))


@pytest.mark.slow
def test_ieee39_baseline_stays_quiet_and_near_feasible():
    result = ieee39("ieee39_baseline")
    expected = (result.times.size - 1) / result.calibration["target_interval"]
    assert len(result.alarm_steps) <= 2 * expected
    assert 0.11 <= result.summary()["mean_g_abs_sum"] <= 0.33


@pytest.mark.slow
@pytest.mark.parametrize("seed", SEEDS)
def test_ieee39_constraint_awareness_limits_the_damage(seed):
    baseline, scua, scaa = (ieee39(name, seed).rmse for name in ("ieee39_baseline", "ieee39_scua", "ieee39_scaa"))
    assert scua > 2 * scaa
    assert scaa < 1.5 * baseline


@pytest.mark.slow
def test_ieee39_unaware_attack_breaks_constraints_and_icaa_does_not():
    scua, icaa = ieee39("ieee39_scua"), ieee39("ieee39_icaa")
    assert np.mean(scua.violations[scua.k_star:] > 0) >= 0.9
    after = np.arange(icaa.times.size) >= icaa.k_star
    accepted = after & icaa.attack.feasible
    reverted = after & ~icaa.attack.feasible
    assert np.all(icaa.violations[accepted] == 0)
    np.testing.assert_array_equal(icaa.attack.injected[reverted], 0.0)


@pytest.mark.slow
def test_ieee39_finer_beta_costs_time_not_accuracy():
    base = load_scenario_config(SCENARIO_DIR / "ieee39_sweep_beta.yaml")
    table = sweep("beta", [0.1, 0.01, 0.001], base).sort_values("value", ascending=False, ignore_index=True)
    assert table["value"].tolist() == [0.1, 0.01, 0.001]
    assert table["runtime_s"].is_monotonic_increasing and table["runtime_s"].is_unique
    assert table["iterations"].is_monotonic_increasing
    assert table["rmse"].is_monotonic_decreasing
    assert table.loc[2, "rmse"] == pytest.approx(table.loc[1, "rmse"], rel=0.02)


@pytest.mark.slow
def test_ieee39_vector_cusum_contains_a_wide_attack():
    vector = ieee39("ieee39_vector_cusum")
    aggregated = ieee39("ieee39_aggregated_50")
    assert vector.rmse < 0.5 * aggregated.rmse


@pytest.mark.slow
def test_case9_optimized_and_iterative_attacks_do_equal_damage():
    chi2 = {"detector": {"kind": "chi2"}}
    mae = {"icaa": [], "scaa_opt": []}
    for seed in range(20):
        for name in ("case9_icaa", "case9_scaa"):
            result = run_scenario(load_scenario_config(SCENARIO_DIR / f"{name}.yaml", {"seed": seed, **chi2}))
            mae[result.strategy].append(float(np.mean(result.mae_series)))
    icaa, scaa = np.mean(mae["icaa"]), np.mean(mae["scaa_opt"])
    assert abs(scaa - icaa) / icaa < 0.15
