#!/usr/bin/env python3
"""
preprocess.py

CSV ingestion and the gene-expression filtering pipeline.

Order of steps: clamp to [floor, ceiling] -> fold-change filter -> log
transform -> drop zero-variance columns -> correlation filter -> standardize.
The fitted Preprocessing is stored with a model so that evaluate() can
replay it on raw CSV input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from src.core import DataError, Dataset, Standardization

logger = logging.getLogger(__name__)

RESPONSE_COLUMN = "y"


class LogTransform(str, Enum):
    """Optional log transform of the clamped covariates."""

    NONE = "none"
    LOG2 = "log2"
    LOG10 = "log10"

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Transform values, rejecting non-positive entries."""
        if self is LogTransform.NONE:
            return values
        if np.any(values <= 0.0):
            raise DataError(f"{self.value} transform needs positive values; set a floor.")
        return np.log2(values) if self is LogTransform.LOG2 else np.log10(values)


@dataclass(frozen=True, slots=True)
class Preprocessing:
    """Filter options and, once fitted, the retained columns."""

    corr_threshold: float | None = None
    transform: LogTransform = LogTransform.NONE
    floor: float | None = None
    ceiling: float | None = None
    min_fold: float | None = None
    min_range: float | None = None
    retained: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "transform", LogTransform(self.transform))
        object.__setattr__(self, "retained", tuple(str(c) for c in self.retained))
        if self.corr_threshold is not None and not 0.0 < self.corr_threshold < 1.0:
            raise ValueError("corr_threshold must be in (0, 1).")
        if self.floor is not None and self.ceiling is not None and self.floor > self.ceiling:
            raise ValueError("floor must not exceed ceiling.")
        if (self.min_fold is None) != (self.min_range is None):
            raise ValueError("min_fold and min_range must be given together.")

    def clamp_and_transform(self, values: np.ndarray) -> np.ndarray:
        """Clamp then log-transform a raw covariate block."""
        if self.floor is not None or self.ceiling is not None:
            values = np.clip(values, self.floor, self.ceiling)
        return self.transform.apply(values)

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {
            "corr_threshold": self.corr_threshold,
            "transform": self.transform.value,
            "clamps": {"floor": self.floor, "ceiling": self.ceiling},
            "fold_filter": {"min_fold": self.min_fold, "min_range": self.min_range},
            "retained": list(self.retained),
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "Preprocessing":
        """Deserialize from a dict, raising on missing fields."""
        clamps = data.get("clamps", {})
        fold = data.get("fold_filter", {})
        return Preprocessing(
            corr_threshold=data.get("corr_threshold"),
            transform=LogTransform(str(data["transform"])),
            floor=clamps.get("floor"),
            ceiling=clamps.get("ceiling"),
            min_fold=fold.get("min_fold"),
            min_range=fold.get("min_range"),
            retained=tuple(data["retained"]),
        )


def read_frame(path: Path) -> pd.DataFrame:
    """Read a CSV with a header row and check the response column."""
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise DataError(f"Input file '{path}' does not exist.") from exc
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"Cannot parse '{path}': {exc}") from exc
    if RESPONSE_COLUMN not in frame.columns:
        raise DataError(f"'{path}' has no '{RESPONSE_COLUMN}' column.")
    return frame


def response(frame: pd.DataFrame) -> np.ndarray:
    """The y column as floats, checked to be binary."""
    y = pd.to_numeric(frame[RESPONSE_COLUMN], errors="coerce").to_numpy(dtype=float)
    if np.any(~np.isin(y, (0.0, 1.0))):
        raise DataError("Column 'y' must contain only 0/1 values.")
    return y


def covariates(frame: pd.DataFrame, columns: list[str]) -> np.ndarray:
    """Numeric covariate block, rejecting missing or non-numeric values."""
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"Missing covariate columns: {missing}.")
    block = frame[columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(block)):
        raise DataError("Covariates must be finite numbers with no missing values.")
    return block


def _fold_keep(values: np.ndarray, min_fold: float, min_range: float) -> np.ndarray:
    """Drop a column when max/min <= min_fold and max - min <= min_range."""
    hi = values.max(axis=0)
    lo = values.min(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        fold = np.where(lo > 0.0, hi / lo, np.inf)
    return ~((fold <= min_fold) & (hi - lo <= min_range))


def _abs_correlation(values: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|Pearson correlation| of each column with y."""
    centred = values - values.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt(np.sum(centred**2, axis=0) * np.sum(yc**2))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = centred.T @ yc / denom
    return np.abs(np.nan_to_num(corr))


def ingest(path: Path, options: Preprocessing | None = None) -> tuple[Dataset, Preprocessing]:
    """Load a CSV, run the filtering pipeline and standardize the survivors."""
    options = options or Preprocessing()
    frame = read_frame(path)
    y = response(frame)
    columns = [str(c) for c in frame.columns if c != RESPONSE_COLUMN]
    values = covariates(frame, columns)

    if options.floor is not None or options.ceiling is not None:
        values = np.clip(values, options.floor, options.ceiling)
    keep = np.ones(len(columns), dtype=bool)
    if options.min_fold is not None and options.min_range is not None:
        keep &= _fold_keep(values, options.min_fold, options.min_range)
    values = options.transform.apply(values)

    keep &= values.std(axis=0) > 0.0
    if options.corr_threshold is not None:
        keep &= _abs_correlation(values, y) > options.corr_threshold

    retained = [c for c, k in zip(columns, keep) if k]
    logger.info("Retained %d of %d covariate columns from '%s'.", len(retained), len(columns), path)
    if not retained:
        raise DataError("No covariate column survived the filters.")
    data = Dataset.from_arrays(y, values[:, keep], names=retained)
    return data, replace(options, retained=tuple(retained))


def replay(frame: pd.DataFrame, fitted: Preprocessing, scaling: Standardization) -> np.ndarray:
    """Apply a fitted pipeline to raw covariates: select, clamp, log, standardize."""
    values = covariates(frame, list(fitted.retained))
    return scaling.apply(fitted.clamp_and_transform(values))
