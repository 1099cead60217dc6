#!/usr/bin/env python3
"""
storage.py

Helper functions to persist results and models as JSON and tables as CSV.

Key requirement: if a file cannot be read or written, log an error and let
the caller decide how to continue (readers return None, writers False).
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

# 17 significant digits round-trip every float64 exactly.
CSV_FLOAT_FORMAT = "%.17g"


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays to plain Python; NaN and inf become None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _replace_atomically(path: Path, payload: str) -> bool:
    """Write to a temp file next to path, then replace path with it."""
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp_path.write_text(payload, encoding="utf-8")
        tmp_path.replace(path)
        return True
    except OSError as exc:
        logger.error("Cannot write file '%s': %s.", path, exc)
        try:
            if tmp_path.exists():
                tmp_path.unlink()
        except OSError as cleanup_exc:
            logger.error("Cannot cleanup temp file '%s': %s.", tmp_path, cleanup_exc)
        return False


def read_json_object(path: Path) -> dict[str, Any] | None:
    """
    Read a JSON file expected to contain one object.

    A UTF-8 BOM is accepted. Missing, empty, invalid or non-object files log
    an error and return None.
    """
    try:
        raw = path.read_text(encoding="utf-8-sig").strip()
    except OSError as exc:
        logger.error("Cannot read file '%s': %s.", path, exc)
        return None
    if not raw:
        logger.error("Empty file '%s'.", path)
        return None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        logger.error("Invalid JSON in '%s': %s.", path, exc)
        return None
    if not isinstance(data, dict):
        logger.error("Invalid format in '%s': expected a JSON object.", path)
        return None
    return data


def read_json_list(path: Path) -> list[dict[str, Any]] | None:
    """Read a JSON list of objects; non-object items are skipped with an error."""
    try:
        data = json.loads(path.read_text(encoding="utf-8-sig"))
    except OSError as exc:
        logger.error("Cannot read file '%s': %s.", path, exc)
        return None
    except json.JSONDecodeError as exc:
        logger.error("Invalid JSON in '%s': %s.", path, exc)
        return None
    if not isinstance(data, list):
        logger.error("Invalid format in '%s': expected a JSON list.", path)
        return None
    cleaned: list[dict[str, Any]] = []
    for idx, item in enumerate(data):
        if isinstance(item, dict):
            cleaned.append(item)
        else:
            logger.error(
                "Invalid item type at index %d in '%s': expected object, got %s. Skipping.",
                idx, path, type(item).__name__,
            )
    return cleaned


def write_json(path: Path, data: dict[str, Any]) -> bool:
    """Write a dict as sorted, indented JSON through an atomic replace."""
    try:
        payload = json.dumps(to_jsonable(data), ensure_ascii=False, indent=2, sort_keys=True)
    except (TypeError, ValueError) as exc:
        logger.error("Cannot serialize data for '%s': %s.", path, exc)
        return False
    return _replace_atomically(path, payload + "\n")


def write_csv(path: Path, frame: pd.DataFrame) -> bool:
    """Write a table with full float precision through an atomic replace."""
    payload = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT)
    return _replace_atomically(path, payload)
