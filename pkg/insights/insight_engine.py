# -*- coding: utf-8 -*-

import numpy as np
import pandas as pd

# -------------------------------------------------
# REQUIRED INPUT COLUMNS
# -------------------------------------------------

REQUIRED_COLUMNS = {
    "scenario",
    "strategy",
    "k_star",
    "rmse",
    "post_attack_rmse",
    "post_attack_alarms",
    "violation_rate",
    "mean_g_abs_sum",
    "reverted_steps",
    "post_attack_steps",
}

SEPARATION_RATE = 0.9
IMPACT_HIGH = 2.0
IMPACT_MODERATE = 1.5

# -------------------------------------------------
# VALIDATION
# -------------------------------------------------

def _validate_input(summary):
    missing = REQUIRED_COLUMNS - set(summary.index)
    if missing:
        raise ValueError(f"Missing required columns in scenario summary: {sorted(missing)}")

# -------------------------------------------------
# CONFIDENCE
# -------------------------------------------------

def confidence_note(steps):
    steps = int(steps)
    if steps >= 1000:
        return "high"
    if steps >= 100:
        return "medium"
    return "low"

# -------------------------------------------------
# FINDINGS
# -------------------------------------------------

def derive_stealth(summary, metrics):
    alarms = int(summary["post_attack_alarms"])
    evidence = [f"{alarms} detector alarms after the attack start (k = {int(summary['k_star'])})"]
    if metrics is not None and not metrics.empty and "detector_stat" in metrics.columns:
        k_star = max(int(summary["k_star"]), 0)
        stat = pd.to_numeric(metrics["detector_stat"], errors="coerce").iloc[k_star:]
        if stat.notna().any():
            evidence.append(f"Peak detector statistic after the start is {stat.max():.4g}")
    if alarms == 0:
        return "Attack stayed stealthy", evidence
    return "Detector caught the attack", evidence


def derive_separation(summary):
    rate = float(summary["violation_rate"])
    evidence = [
        f"{rate:.1%} of post-attack steps violate a constraint check",
        f"Mean |sum g| after the start is {float(summary['mean_g_abs_sum']):.4g}",
    ]
    reverted = int(summary["reverted_steps"])
    if summary["strategy"] in ("icaa", "scaa_opt"):
        evidence.append(f"{reverted} steps reverted to no injection")
    if rate >= SEPARATION_RATE:
        return "Constraint checks expose the attack", evidence
    if rate == 0:
        return "Attacked estimates stay physically consistent", evidence
    return "Constraint checks flag the attack intermittently", evidence


def derive_impact(summary, baseline):
    if baseline is None:
        return "No baseline to measure impact against", ["Set `baseline` in the scenario config"], "low"
    ratio = float(summary["rmse"]) / max(float(baseline["rmse"]), np.finfo(float).tiny)
    evidence = [
        f"RMSE {float(summary['rmse']):.4g} against baseline {float(baseline['rmse']):.4g} ({baseline['scenario']})",
        f"Impact ratio {ratio:.3g}",
    ]
    if np.isfinite(float(summary["post_attack_rmse"])):
        evidence.append(f"Post-attack window RMSE {float(summary['post_attack_rmse']):.4g}")
    if ratio > IMPACT_HIGH:
        finding = "Attack degrades the estimate significantly"
    elif ratio > IMPACT_MODERATE:
        finding = "Attack degrades the estimate moderately"
    else:
        finding = "Attack impact on the estimate is small"
    return finding, evidence, None

# -------------------------------------------------
# ENTRY POINT
# -------------------------------------------------

def derive_findings(summary, metrics=None, baseline=None) -> pd.DataFrame:
    """One row per finding with evidence points and a confidence note."""
    _validate_input(summary)
    confidence = confidence_note(summary["post_attack_steps"])

    rows = []

    finding, evidence = derive_stealth(summary, metrics)
    rows.append(("stealth", finding, evidence, confidence))

    finding, evidence = derive_separation(summary)
    rows.append(("constraint_separation", finding, evidence, confidence))

    finding, evidence, override = derive_impact(summary, baseline)
    rows.append(("impact_ratio", finding, evidence, override or confidence))

    return pd.DataFrame(
        [
            {
                "scenario": summary["scenario"],
                "category": category,
                "finding": finding,
                "key_evidence_points": "\n".join(f"- {point}" for point in evidence),
                "confidence": conf,
            }
            for category, finding, evidence, conf in rows
        ]
    )
