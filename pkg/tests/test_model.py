# pylint: disable=missing-function-docstring,consider-using-with
# !/usr/bin/env python3
"""
test_model.py

Unit tests for model.py: the saved-model record and out-of-sample scoring.
"""

from __future__ import annotations

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from src.core import DataError
from src.irls import FitConfig, fit, initial_beta
from src.model import MODEL_SCHEMA, FittedModel, evaluate, score
from src.penalty import WeightScheme
from src.preprocess import Preprocessing, ingest, read_frame


def _write_csv(path: Path, n: int = 50, seed: int = 1) -> None:
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, 1.0, (n, 12))
    y = rng.binomial(1, 1.0 / (1.0 + np.exp(-(1.5 * z[:, 0] - z[:, 10]))))
    columns = {"y": y}
    columns.update({f"g{j + 1}": z[:, j] for j in range(12)})
    pd.DataFrame(columns).to_csv(path, index=False)


class ScoreTestCase(unittest.TestCase):
    """Tests for accuracy and MAE."""

    def test_constant_predictor(self) -> None:
        y = np.array([1.0] * 6 + [0.0] * 4)
        report = score(np.full(10, 0.5), y)
        self.assertAlmostEqual(report.accuracy, 0.6, places=15)
        self.assertAlmostEqual(report.mae, 0.5, places=15)
        self.assertEqual(report.n, 10)

    def test_exact_predictor(self) -> None:
        y = np.array([0.0, 1.0, 1.0, 0.0])
        report = score(y.copy(), y)
        self.assertEqual(report.accuracy, 1.0)
        self.assertEqual(report.mae, 0.0)

    def test_empty_set(self) -> None:
        with self.assertRaises(DataError):
            score(np.array([]), np.array([]))


class FittedModelTestCase(unittest.TestCase):
    """Tests for FittedModel and evaluate()."""

    def setUp(self) -> None:
        self.tmp_dir = tempfile.TemporaryDirectory()
        self.base = Path(self.tmp_dir.name)
        self.path = self.base / "train.csv"
        _write_csv(self.path)
        self.data, self.prep = ingest(self.path, Preprocessing())
        self.result = fit(self.data, FitConfig(alpha=0.3, lam=0.02), initial_beta(self.data))
        self.model = FittedModel.from_fit(self.result, self.data, 0.3, WeightScheme(), self.prep)

    def tearDown(self) -> None:
        self.tmp_dir.cleanup()

    def test_training_predictions_match_fit(self) -> None:
        pi = self.model.predict_proba(read_frame(self.path))
        self.assertTrue(np.array_equal(pi, self.data.predict_proba(self.result.beta_hat)))

    def test_json_round_trip_preserves_predictions(self) -> None:
        text = json.dumps(self.model.to_dict(), sort_keys=True)
        again = FittedModel.from_dict(json.loads(text))
        self.assertEqual(list(again.coefficients), list(self.model.coefficients))
        frame = read_frame(self.path)
        self.assertTrue(np.array_equal(again.predict_proba(frame), self.model.predict_proba(frame)))
        self.assertEqual(again.to_dict()["schema"], MODEL_SCHEMA)

    def test_unknown_schema_rejected(self) -> None:
        raw = self.model.to_dict()
        raw["schema"] = "other/9"
        with self.assertRaises(ValueError):
            FittedModel.from_dict(raw)

    def test_evaluate_matches_training_score(self) -> None:
        report = evaluate(self.model, self.path)
        expected = score(self.data.predict_proba(self.result.beta_hat), self.data.y)
        self.assertEqual(report, expected)

    def test_evaluate_excludes_rows(self) -> None:
        report = evaluate(self.model, self.path, exclude_rows=(1, 2, 50))
        self.assertEqual(report.n, 47)
        with self.assertRaises(DataError):
            evaluate(self.model, self.path, exclude_rows=(51,))

    def test_missing_column_at_scoring(self) -> None:
        frame = read_frame(self.path).drop(columns="g1")
        with self.assertRaises(DataError):
            self.model.predict_proba(frame)


if __name__ == "__main__":
    unittest.main()
