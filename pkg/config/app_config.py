import os
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import yaml
from dotenv import load_dotenv

load_dotenv()

REPO_ROOT = Path(__file__).resolve().parent.parent

# Output directory for exported tables — overridable via env var
OUTPUT_DIR = os.getenv("GRID_LAB_OUTPUT_DIR", "results")

DEFAULTS_PATH = os.getenv("GRID_LAB_DEFAULTS", str(REPO_ROOT / "config" / "defaults.yaml"))

CASE_DIR = os.getenv("GRID_LAB_CASE_DIR", str(REPO_ROOT / "data" / "cases"))

SCENARIO_DIR = REPO_ROOT / "config" / "scenarios"


def log(message: str):
    if os.getenv("GRID_LAB_QUIET", "0") == "1":
        return
    ts = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S UTC")
    print(f"[{ts}] {message}")


@lru_cache(maxsize=4)
def _load_defaults_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}


def load_defaults(path: str | None = None) -> dict:
    """Nested defaults dict; callers get a fresh copy they may mutate."""
    import copy

    return copy.deepcopy(_load_defaults_file(path or DEFAULTS_PATH))


def resolve_path(path: str | os.PathLike, base: Path | None = None) -> Path:
    p = Path(path)
    if p.is_absolute():
        return p
    if base is not None and (base / p).exists():
        return base / p
    return REPO_ROOT / p
