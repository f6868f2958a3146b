# -*- coding: utf-8 -*-

import threading
import uuid as _uuid
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from analytics.validators import load_scenario_config
from attacks.zone import D_MAX, EPSILON, zone_for_case
from config.app_config import CASE_DIR, resolve_path
from detection.chi2 import chi2_threshold
from errors import INPUT_ERRORS, GridLabError
from grid.case_parser import load_case

# =====================================================
# FASTAPI APP
# =====================================================

app = FastAPI(
    title="Grid Attack Lab API",
    description="Scenario jobs, attack zones and detector thresholds",
    version="1.0.0",
)

# In-memory scenario job registry
_scenario_jobs: dict = {}

# =====================================================
# REQUEST SCHEMAS
# =====================================================

class ScenarioRunRequest(BaseModel):
    config_path: str
    seed: Optional[int] = None
    export: bool = True


class ZoneRequest(BaseModel):
    case_path: str
    targets: List[int] = Field(min_length=1)
    d_max: int = Field(D_MAX, ge=0)
    epsilon: float = Field(EPSILON, gt=0)

# =====================================================
# JOBS
# =====================================================

def _start_scenario_job(config_path: str, seed: Optional[int] = None, export: bool = True) -> str:
    """Validate up front, then run the scenario on a background thread."""
    overrides = {} if seed is None else {"seed": seed}
    cfg = load_scenario_config(config_path, overrides)

    job_id = str(_uuid.uuid4())
    _scenario_jobs[job_id] = {"status": "running", "error": "", "scenario": cfg.name, "rmse": None}

    def _worker():
        try:
            from pipeline_runner import export as export_result
            from pipeline_runner import run_scenario

            result = run_scenario(cfg)
            if export:
                export_result(result, cfg.output_dir)
            _scenario_jobs[job_id].update(
                status="done",
                rmse=result.rmse,
                alarms=len(result.alarm_steps),
                reverted_steps=result.reverted_steps,
                runtime_s=round(result.runtime, 3),
            )
        except Exception as exc:
            _scenario_jobs[job_id]["status"] = "failed"
            _scenario_jobs[job_id]["error"] = str(exc)

    threading.Thread(target=_worker, daemon=True).start()
    return job_id

# =====================================================
# API ENDPOINTS
# =====================================================

@app.post("/scenario/run")
def start_scenario(req: ScenarioRunRequest):
    """Start a scenario run in the background."""
    try:
        job_id = _start_scenario_job(req.config_path, req.seed, req.export)
    except INPUT_ERRORS as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"job_id": job_id, "status": "running"}


@app.get("/scenario/status/{job_id}")
def get_scenario_status(job_id: str):
    """Poll the status of a scenario job."""
    if job_id not in _scenario_jobs:
        raise HTTPException(status_code=404, detail="Job not found")
    return _scenario_jobs[job_id]


@app.post("/zone")
def compute_zone(req: ZoneRequest):
    path = resolve_path(req.case_path, resolve_path(CASE_DIR))
    if not path.exists():
        raise HTTPException(status_code=404, detail=f"case file not found: {req.case_path}")
    try:
        zone = zone_for_case(load_case(path), req.targets, req.d_max, req.epsilon)
    except (GridLabError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"targets": req.targets, "d_max": req.d_max, **zone.to_dict()}


@app.get("/chi2-threshold")
def get_chi2_threshold(n_y: int, m: float):
    try:
        alpha = chi2_threshold(n_y, m)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"n_y": n_y, "m": m, "alpha": alpha}


@app.get("/")
def health():
    return {"status": "ok"}
