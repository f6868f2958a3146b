# -*- coding: utf-8 -*-

import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd

from config.app_config import OUTPUT_DIR, REPO_ROOT

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.12g"


def output_root(out_dir: str | Path | None = None) -> Path:
    root = Path(out_dir or OUTPUT_DIR)
    if not root.is_absolute():
        root = REPO_ROOT / root
    root.mkdir(parents=True, exist_ok=True)
    return root


def table_path(root: Path, table_name: str) -> Path:
    return Path(root) / f"{table_name}.csv"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# =====================================================
# SANITIZER
# =====================================================

def _sanitize_df(df: pd.DataFrame) -> pd.DataFrame:
    if df is None or df.empty:
        return df
    df = df.copy()
    df.replace([np.inf, -np.inf], np.nan, inplace=True)
    return df


# =====================================================
# READ
# =====================================================

def read_table(root: str | Path, table_name: str) -> pd.DataFrame:
    path = table_path(Path(root), table_name)
    if not path.exists():
        return pd.DataFrame()
    return pd.read_csv(path)


# =====================================================
# WRITE
# =====================================================

def write_table(root: str | Path, table_name: str, df: pd.DataFrame) -> Path:
    path = table_path(Path(root), table_name)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = _sanitize_df(df)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


# =====================================================
# MANIFEST
# =====================================================

def write_manifest(root: str | Path, scenario: str, manifest: dict) -> Path:
    """<scenario>.manifest.json with keys sorted so reruns are byte-identical."""
    path = Path(root) / f"{scenario}.manifest.json"
    body = {"schema_version": SCHEMA_VERSION, "scenario": scenario, **manifest}
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")
