#!/usr/bin/env python3
"""
model.py

Fitted-model entity (versioned JSON schema) and out-of-sample evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.special import expit

from src.core import INTERCEPT_NAME, DataError, Dataset, Standardization
from src.irls import FitResult
from src.penalty import WeightScheme
from src.preprocess import Preprocessing, read_frame, replay, response

MODEL_SCHEMA = "awdpd-model/1"
CLASSIFICATION_THRESHOLD = 0.5


@dataclass(frozen=True, slots=True)
class FittedModel:
    """Coefficients plus everything needed to score raw CSV rows."""

    alpha: float
    lambda_star: float
    scheme: WeightScheme
    coefficients: dict[str, float]
    preprocessing: Preprocessing
    standardization: Standardization
    schema: str = MODEL_SCHEMA

    def __post_init__(self) -> None:
        if self.schema != MODEL_SCHEMA:
            raise ValueError(f"Unsupported model schema '{self.schema}'.")
        names = list(self.coefficients)
        if not names or names[0] != INTERCEPT_NAME:
            raise ValueError(f"coefficients must start with '{INTERCEPT_NAME}'.")
        if tuple(names[1:]) != self.standardization.names:
            raise ValueError("coefficient names do not match the standardization record.")
        if tuple(names[1:]) != self.preprocessing.retained:
            raise ValueError("coefficient names do not match the retained columns.")

    @staticmethod
    def from_fit(
        result: FitResult,
        data: Dataset,
        alpha: float,
        scheme: WeightScheme,
        preprocessing: Preprocessing,
    ) -> "FittedModel":
        """Package a fit on ingested data."""
        if data.standardization is None:
            raise ValueError("The training data carries no standardization record.")
        return FittedModel(
            alpha=alpha,
            lambda_star=result.lam,
            scheme=scheme,
            coefficients=result.beta_hat.to_dict(data.names),
            preprocessing=preprocessing,
            standardization=data.standardization,
        )

    @property
    def beta(self) -> np.ndarray:
        """Coefficient vector, intercept first."""
        return np.fromiter(self.coefficients.values(), dtype=float)

    def predict_proba(self, rows: Any) -> np.ndarray:
        """pi_hat for raw CSV rows (a DataFrame with the retained columns)."""
        z = replay(rows, self.preprocessing, self.standardization)
        X = np.column_stack([np.ones(z.shape[0]), z])
        return expit(X @ self.beta)

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {
            "schema": self.schema,
            "alpha": self.alpha,
            "lambda_star": self.lambda_star,
            "scheme": self.scheme.to_dict(),
            "coefficients": dict(self.coefficients),
            "preprocessing": {
                **self.preprocessing.to_dict(),
                "means": [float(v) for v in self.standardization.means],
                "scales": [float(v) for v in self.standardization.scales],
            },
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "FittedModel":
        """Deserialize from a dict, raising on missing or malformed fields."""
        prep = data["preprocessing"]
        fitted = Preprocessing.from_dict(prep)
        # JSON objects are written with sorted keys; the retained list keeps the order.
        raw = data["coefficients"]
        names = (INTERCEPT_NAME, *fitted.retained)
        return FittedModel(
            alpha=float(data["alpha"]),
            lambda_star=float(data["lambda_star"]),
            scheme=WeightScheme.from_dict(data["scheme"]),
            coefficients={name: float(raw[name]) for name in names},
            preprocessing=fitted,
            standardization=Standardization(
                names=fitted.retained,
                means=np.asarray(prep["means"], dtype=float),
                scales=np.asarray(prep["scales"], dtype=float),
            ),
            schema=str(data["schema"]),
        )


@dataclass(frozen=True, slots=True)
class EvaluationReport:
    """Accuracy at the 0.5 threshold and mean |pi_hat - y|."""

    n: int
    accuracy: float
    mae: float

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {"n": self.n, "accuracy": self.accuracy, "mae": self.mae}


def score(pi_hat: np.ndarray, y: np.ndarray) -> EvaluationReport:
    """Accuracy and MAE of probabilities against 0/1 labels."""
    if y.size == 0:
        raise DataError("Evaluation set is empty.")
    predicted = (pi_hat >= CLASSIFICATION_THRESHOLD).astype(float)
    return EvaluationReport(
        n=int(y.size),
        accuracy=float(np.mean(predicted == y)),
        mae=float(np.mean(np.abs(pi_hat - y))),
    )


def evaluate(
    model: FittedModel,
    csv_path: Path,
    exclude_rows: Sequence[int] = (),
) -> EvaluationReport:
    """Score a model on a raw CSV, optionally without the given 1-based rows."""
    frame = read_frame(csv_path)
    if exclude_rows:
        bad = [r for r in exclude_rows if not 1 <= r <= len(frame)]
        if bad:
            raise DataError(f"Rows out of range: {bad}.")
        frame = frame.drop(index=frame.index[[r - 1 for r in exclude_rows]])
    y = response(frame)
    return score(model.predict_proba(frame), y)
