# pylint: disable=missing-function-docstring
# !/usr/bin/env python3
"""
test_sim.py

Unit tests for sim.py: designs, contamination, metrics and the experiment runner.

Set AWDPD_SLOW=1 to also run the contamination trends.
"""

from __future__ import annotations

import math
import os
import unittest

import numpy as np
from numpy.testing import assert_allclose

from src.irls import FitConfig
from src.penalty import WeightKind, WeightScheme
from src.sim import (
    METRIC_NAMES,
    Contamination,
    ContaminationKind,
    SimScenario,
    contaminate_labels,
    contaminate_leverage,
    default_beta_true,
    estimate,
    generate,
    metrics,
    replication_rng,
    run_experiment,
    toeplitz_factor,
)

SLOW = os.environ.get("AWDPD_SLOW") == "1"


class DesignTestCase(unittest.TestCase):
    """Tests for the Toeplitz design and scenario generation."""

    def test_toeplitz_correlation(self) -> None:
        rng = np.random.default_rng(0)
        z = rng.standard_normal((10000, 3)) @ toeplitz_factor(3, 0.5).T
        corr = np.corrcoef(z, rowvar=False)
        self.assertAlmostEqual(corr[0, 1], 0.5, delta=0.03)
        self.assertAlmostEqual(corr[0, 2], 0.25, delta=0.03)

    def test_default_truth(self) -> None:
        beta = default_beta_true(8).beta
        assert_allclose(beta, [0.0, 3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0])
        with self.assertRaises(ValueError):
            default_beta_true(4)

    def test_generate_is_reproducible_per_replication(self) -> None:
        scn = SimScenario(n=30, k=6, seed=4)
        first, _ = generate(scn, rep=3)
        again, _ = generate(scn, rep=3)
        other, _ = generate(scn, rep=4)
        self.assertTrue(np.array_equal(first.X, again.X))
        self.assertTrue(np.array_equal(first.y, again.y))
        self.assertFalse(np.array_equal(first.X, other.X))

    def test_replication_streams_differ(self) -> None:
        self.assertNotEqual(replication_rng(1, 0).random(), replication_rng(1, 1).random())

    def test_zero_rho_gives_identity_factor(self) -> None:
        self.assertTrue(np.array_equal(toeplitz_factor(6, 0.0), np.eye(6)))

    def test_scenario_validation(self) -> None:
        with self.assertRaises(ValueError):
            SimScenario(k=6, rho=1.0)
        with self.assertRaises(ValueError):
            SimScenario(k=6, beta_true=np.zeros(3))
        with self.assertRaises(ValueError):
            Contamination(ContaminationKind.LABELS, 0.5)
        self.assertEqual(SimScenario(k=6).to_dict()["contamination"], {"kind": "none", "eps": 0.0})


class ContaminationTestCase(unittest.TestCase):
    """Tests for label flips and leverage points."""

    def setUp(self) -> None:
        self.rng = np.random.default_rng(7)
        self.beta = default_beta_true(10).beta

    def test_label_redraw_fraction(self) -> None:
        z = self.rng.standard_normal((10000, 10))
        y = self.rng.binomial(1, 0.5, 10000).astype(float)
        _, mask = contaminate_labels(y, z, self.beta, 0.1, self.rng, return_mask=True)
        self.assertAlmostEqual(float(mask.mean()), 0.1, delta=0.01)

    def test_zero_eps_keeps_labels(self) -> None:
        z = self.rng.standard_normal((50, 10))
        y = self.rng.binomial(1, 0.5, 50).astype(float)
        self.assertTrue(np.array_equal(contaminate_labels(y, z, self.beta, 0.0, self.rng), y))

    def test_label_eps_bounds(self) -> None:
        z = self.rng.standard_normal((20, 10))
        y = np.zeros(20)
        with self.assertRaises(ValueError):
            contaminate_labels(y, z, self.beta, 0.6, self.rng)
        out = contaminate_labels(y, z, self.beta, 0.9, self.rng, strict=False)
        self.assertTrue(np.all(np.isin(out, (0.0, 1.0))))

    def test_leverage_type_a(self) -> None:
        z = self.rng.standard_normal((100, 10))
        y = np.array([1.0, 0.0] * 50)
        out = contaminate_leverage(z, y, self.beta, 0.1, self.rng, type_a_prob=1.0)
        changed = np.flatnonzero(np.any(out != z, axis=1))
        self.assertEqual(changed.size, 10)
        self.assertTrue(np.all(y[changed] == 1.0))
        diff = out - z
        for i in changed:
            cols = np.flatnonzero(diff[i])
            self.assertEqual(cols.size, 1)
            self.assertIn(int(cols[0]), (0, 1, 4))
            self.assertAlmostEqual(float(diff[i, cols[0]]), -5.0, delta=0.5)

    def test_leverage_type_b(self) -> None:
        z = self.rng.standard_normal((100, 10))
        y = np.ones(100)
        out = contaminate_leverage(z, y, self.beta, 0.05, self.rng, type_a_prob=0.0)
        diff = out - z
        changed = np.flatnonzero(np.any(diff != 0.0, axis=1))
        self.assertEqual(changed.size, 5)
        for i in changed:
            cols = np.flatnonzero(diff[i])
            self.assertEqual(cols.size, 5)
            self.assertTrue(np.all(self.beta[cols + 1] == 0.0))
            assert_allclose(diff[i, cols], 5.0, atol=0.5)

    def test_leverage_shift_distribution(self) -> None:
        z = self.rng.standard_normal((2100, 10))
        out = contaminate_leverage(z, np.ones(2100), self.beta, 0.49, self.rng, type_a_prob=1.0)
        shifts = (out - z)[out != z]
        self.assertGreaterEqual(shifts.size, 1000)
        self.assertAlmostEqual(float(shifts.mean()), -5.0, delta=0.01)
        self.assertAlmostEqual(float(shifts.std()), 0.1, delta=0.01)

    def test_leverage_zero_eps(self) -> None:
        z = self.rng.standard_normal((20, 10))
        self.assertTrue(np.array_equal(contaminate_leverage(z, np.ones(20), self.beta, 0.0, self.rng), z))


class MetricsTestCase(unittest.TestCase):
    """Tests for the support and error metrics."""

    def test_exact_recovery(self) -> None:
        truth = default_beta_true(10)
        report = metrics(truth, truth)
        self.assertEqual(report.as_tuple(), (3.0, 1.0, 1.0, 0.0, 0.0))

    def test_one_extra_coordinate(self) -> None:
        truth = default_beta_true(10)
        est = truth.beta.copy()
        est[7] = 0.1
        report = metrics(est, truth)
        self.assertEqual(report.MS, 4.0)
        self.assertEqual(report.TP, 1.0)
        self.assertAlmostEqual(report.TN, 6.0 / 7.0, places=15)
        self.assertAlmostEqual(report.MAE, 0.01, places=15)
        self.assertEqual(report.MSES, 0.0)

    def test_missed_coordinate(self) -> None:
        truth = default_beta_true(10)
        est = truth.beta.copy()
        est[1] = 0.0
        report = metrics(est, truth)
        self.assertAlmostEqual(report.TP, 2.0 / 3.0, places=15)
        self.assertAlmostEqual(report.MSES, 3.0, places=15)
        self.assertEqual(list(report.to_dict()), list(METRIC_NAMES))

    def test_length_mismatch(self) -> None:
        with self.assertRaises(ValueError):
            metrics(np.zeros(4), np.zeros(5))


class ExperimentTestCase(unittest.TestCase):
    """Tests for run_experiment."""

    def test_small_experiment(self) -> None:
        scn = SimScenario(
            n=60,
            k=8,
            contamination=Contamination(ContaminationKind.LABELS, 0.1),
            seed=2,
        )
        methods = [
            FitConfig(alpha=0.1, n_lambda=6),
            FitConfig(alpha=0.5, n_lambda=6, scheme=WeightScheme(WeightKind.HARD_THRESHOLD)),
        ]
        table = run_experiment(scn, methods, reps=2)
        frame = table.to_frame()
        self.assertEqual(list(frame["method"]), ["DPD-LASSO a=0.1", "Ad-DPD-LASSO a=0.5"])
        for name in METRIC_NAMES:
            self.assertIn(name, frame.columns)
            self.assertIn(f"{name}_se", frame.columns)
        self.assertTrue(all(frame["reps"] + frame["failures"] == 2))
        self.assertEqual(len(table.replications["DPD-LASSO a=0.1"]), 2)
        self.assertFalse(any(math.isnan(v) for v in frame["TP"]))

    def test_single_replication_matches_estimate(self) -> None:
        scn = SimScenario(n=50, k=8, contamination=Contamination(ContaminationKind.LEVERAGE, 0.1), seed=6)
        cfg = FitConfig(alpha=0.3, n_lambda=5, scheme=WeightScheme(WeightKind.HARD_THRESHOLD))
        table = run_experiment(scn, [cfg], reps=1)
        data, truth = generate(scn, rep=0)
        expected = metrics(estimate(data, cfg).selected.beta_hat, truth)
        self.assertEqual(table.replications[cfg.method_label], (expected,))
        self.assertEqual(table.summaries[0].means, expected)
        self.assertEqual(table.summaries[0].std_errors, (0.0,) * len(METRIC_NAMES))

    def test_worker_count_does_not_change_results(self) -> None:
        scn = SimScenario(n=50, k=8, contamination=Contamination(ContaminationKind.LABELS, 0.1), seed=8)
        methods = [FitConfig(alpha=0.1, n_lambda=5), FitConfig(alpha=0.5, n_lambda=5)]
        serial = run_experiment(scn, methods, reps=3)
        pooled = run_experiment(scn, methods, reps=3, workers=2)
        self.assertEqual(serial.replications, pooled.replications)
        self.assertTrue(serial.to_frame().equals(pooled.to_frame()))

    def test_rejects_duplicate_labels(self) -> None:
        with self.assertRaises(ValueError):
            run_experiment(SimScenario(n=20, k=6), [FitConfig(), FitConfig()], reps=1)
        with self.assertRaises(ValueError):
            run_experiment(SimScenario(n=20, k=6), [FitConfig()], reps=0)


@unittest.skipUnless(SLOW, "set AWDPD_SLOW=1 to run contamination trends")
class RobustnessTrendTestCase(unittest.TestCase):
    """Robust adaptive fits beat the near-likelihood fit under contamination."""

    def _batches_won(self, kind: ContaminationKind) -> int:
        robust = FitConfig(alpha=0.5, scheme=WeightScheme(WeightKind.HARD_THRESHOLD))
        plain = FitConfig(alpha=1e-6, label="near-likelihood")
        won = 0
        for batch in range(5):
            scn = SimScenario(n=100, k=50, contamination=Contamination(kind, 0.1), seed=100 + batch)
            table = run_experiment(scn, [robust, plain], reps=20)
            robust_mses, plain_mses = (s.means.MSES for s in table.summaries)
            won += robust_mses < plain_mses
        return won

    def test_label_flips(self) -> None:
        self.assertGreaterEqual(self._batches_won(ContaminationKind.LABELS), 4)

    def test_leverage_points(self) -> None:
        self.assertGreaterEqual(self._batches_won(ContaminationKind.LEVERAGE), 4)


if __name__ == "__main__":
    unittest.main()
