# pylint: disable=missing-function-docstring
# !/usr/bin/env python3
"""
test_core.py

Unit tests for core.py: sigmoid, DPD loss, log-likelihood and the data entities.
"""

from __future__ import annotations

import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from src.core import (
    EPS_PI,
    Coefficients,
    DataError,
    Dataset,
    DpdParams,
    Standardization,
    dpd_loss,
    nll,
    sigmoid,
)


def _random_data(n: int, k: int, seed: int) -> tuple[Dataset, np.ndarray]:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, k))
    beta = rng.normal(0.0, 0.8, size=k + 1)
    y = rng.binomial(1, sigmoid(beta[0] + z @ beta[1:]))
    return Dataset.from_arrays(y, z, standardize=False), beta


def _loss_by_hand(data: Dataset, beta: np.ndarray, alpha: float) -> float:
    total = 0.0
    for i in range(data.n):
        eta = sum(data.X[i, j] * beta[j] for j in range(beta.size))
        pi = min(max(math.exp(eta) / (1.0 + math.exp(eta)), EPS_PI), 1.0 - EPS_PI)
        y = data.y[i]
        total += (
            pi ** (1.0 + alpha)
            + (1.0 - pi) ** (1.0 + alpha)
            - (1.0 + 1.0 / alpha) * (y * pi**alpha + (1.0 - y) * (1.0 - pi) ** alpha)
            + 1.0 / alpha
        )
    return total / data.n ** (1.0 + alpha)


def _nll_by_hand(data: Dataset, beta: np.ndarray) -> float:
    total = 0.0
    for i in range(data.n):
        eta = float(data.X[i] @ beta)
        pi = 1.0 / (1.0 + math.exp(-eta))
        total -= data.y[i] * math.log(pi) + (1.0 - data.y[i]) * math.log(1.0 - pi)
    return total


class SigmoidTestCase(unittest.TestCase):
    """Tests for the logistic function."""

    def test_known_values(self) -> None:
        self.assertEqual(sigmoid(0.0), 0.5)
        self.assertAlmostEqual(sigmoid(1.0), math.e / (1.0 + math.e), places=15)

    def test_extremes_do_not_overflow(self) -> None:
        self.assertEqual(sigmoid(1000.0), 1.0)
        self.assertEqual(sigmoid(-1000.0), 0.0)

    def test_symmetry(self) -> None:
        eta = np.linspace(-30.0, 30.0, 121)
        assert_allclose(sigmoid(-eta), 1.0 - sigmoid(eta), atol=1e-15)

    def test_scalar_in_scalar_out(self) -> None:
        self.assertIsInstance(sigmoid(0.3), float)


class DpdLossTestCase(unittest.TestCase):
    """Tests for the DPD loss and the negative log-likelihood."""

    def test_single_observation_example(self) -> None:
        data = Dataset(y=np.array([1.0]), X=np.array([[1.0]]))
        self.assertAlmostEqual(dpd_loss(data, np.array([0.0]), 1.0), 0.5, places=15)

    def test_matches_straight_line_formula(self) -> None:
        data, beta = _random_data(20, 5, seed=3)
        for alpha in (0.1, 0.5, 1.0):
            assert_allclose(dpd_loss(data, beta, alpha), _loss_by_hand(data, beta, alpha), rtol=1e-12)

    def test_alpha_zero_is_scaled_nll(self) -> None:
        data, beta = _random_data(30, 4, seed=5)
        self.assertAlmostEqual(dpd_loss(data, beta, DpdParams(0.0)), nll(data, beta) / data.n, places=14)

    def test_small_alpha_approaches_nll(self) -> None:
        data, beta = _random_data(30, 4, seed=6)
        assert_allclose(dpd_loss(data, beta, 1e-7), nll(data, beta) / data.n, rtol=1e-5)

    def test_permutation_invariance(self) -> None:
        data, beta = _random_data(25, 3, seed=8)
        order = np.random.default_rng(0).permutation(data.n)
        shuffled = data.subset(order)
        assert_allclose(dpd_loss(shuffled, beta, 0.5), dpd_loss(data, beta, 0.5), rtol=1e-13)

    def test_extreme_predictor_stays_finite(self) -> None:
        data = Dataset(y=np.array([0.0, 1.0]), X=np.array([[1.0, 50.0], [1.0, -50.0]]))
        self.assertTrue(math.isfinite(dpd_loss(data, np.array([0.0, 10.0]), 0.5)))
        self.assertTrue(math.isfinite(nll(data, np.array([0.0, 10.0]))))

    def test_negative_alpha_rejected(self) -> None:
        data, beta = _random_data(10, 2, seed=1)
        with self.assertRaises(ValueError):
            dpd_loss(data, beta, -0.1)
        with self.assertRaises(ValueError):
            DpdParams(-1.0)

    def test_nll_at_zero_is_n_log_two(self) -> None:
        data, _ = _random_data(17, 3, seed=2)
        self.assertAlmostEqual(nll(data, np.zeros(4)), 17 * math.log(2.0), places=12)

    def test_nll_matches_straight_line_formula(self) -> None:
        data, beta = _random_data(10, 3, seed=4)
        assert_allclose(nll(data, beta), _nll_by_hand(data, beta), rtol=1e-12)


class DatasetTestCase(unittest.TestCase):
    """Tests for Dataset, Standardization and Coefficients."""

    def test_rejects_non_binary_labels(self) -> None:
        with self.assertRaises(DataError):
            Dataset(y=np.array([0.0, 2.0]), X=np.ones((2, 1)))

    def test_rejects_missing_intercept(self) -> None:
        with self.assertRaises(DataError):
            Dataset(y=np.array([0.0, 1.0]), X=np.array([[1.0, 2.0], [0.0, 3.0]]))

    def test_rejects_non_finite_covariates(self) -> None:
        with self.assertRaises(DataError):
            Dataset(y=np.array([0.0, 1.0]), X=np.array([[1.0, np.nan], [1.0, 3.0]]))

    def test_rejects_row_mismatch(self) -> None:
        with self.assertRaises(DataError):
            Dataset(y=np.array([0.0, 1.0, 1.0]), X=np.ones((2, 1)))

    def test_arrays_are_read_only(self) -> None:
        data, _ = _random_data(5, 2, seed=0)
        with self.assertRaises(ValueError):
            data.X[0, 1] = 3.0

    def test_from_arrays_standardizes(self) -> None:
        rng = np.random.default_rng(11)
        z = rng.normal(5.0, 3.0, size=(40, 3))
        data = Dataset.from_arrays(rng.binomial(1, 0.5, 40), z, names=["a", "b", "c"])
        assert_allclose(data.X[:, 1:].mean(axis=0), 0.0, atol=1e-12)
        assert_allclose(data.X[:, 1:].std(axis=0), 1.0, rtol=1e-12)
        self.assertEqual(data.names, ("(Intercept)", "a", "b", "c"))
        self.assertEqual((data.n, data.k), (40, 3))

    def test_zero_variance_column_rejected(self) -> None:
        z = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
        with self.assertRaises(DataError):
            Standardization.fit(z, ["a", "b"])

    def test_standardization_round_trip(self) -> None:
        z = np.random.default_rng(2).normal(size=(10, 2))
        std = Standardization.fit(z, ["a", "b"])
        again = Standardization.from_dict(std.to_dict())
        assert_allclose(again.apply(z), std.apply(z), rtol=0.0, atol=0.0)

    def test_coefficients_support_excludes_intercept(self) -> None:
        beta = Coefficients(np.array([1.5, 0.0, -2.0, 0.0, 0.3]))
        self.assertEqual(beta.support(), (2, 4))
        self.assertEqual(Coefficients.zeros(3).support(), ())
        self.assertEqual(list(beta.to_dict())[:2], ["(Intercept)", "x1"])

    def test_coefficients_reject_non_finite(self) -> None:
        with self.assertRaises(ValueError):
            Coefficients(np.array([0.0, np.inf]))

    def test_predict_proba(self) -> None:
        data = Dataset(y=np.array([0.0, 1.0]), X=np.array([[1.0, 0.0], [1.0, 1.0]]))
        assert_allclose(data.predict_proba(np.array([0.0, 0.0])), [0.5, 0.5])


if __name__ == "__main__":
    unittest.main()
