#!/usr/bin/env python3
"""
core.py

Logistic model primitives and the density power divergence (DPD) loss family.

Every function here is a pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.special import expit

# Probabilities are clamped to [EPS_PI, 1 - EPS_PI] before powers and logs.
EPS_PI = 1e-10
INTERCEPT_NAME = "(Intercept)"


class DataError(ValueError):
    """Input data cannot be used (non-binary labels, missing columns, ...)."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a finite answer."""

    def __init__(self, message: str, state: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.state = dict(state or {})


def _frozen_array(values: Any, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional; got shape {arr.shape}.")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True)
class Standardization:
    """Per-column centring and scaling applied to the raw covariates."""

    names: tuple[str, ...]
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "means", _frozen_array(self.means, 1, "means"))
        object.__setattr__(self, "scales", _frozen_array(self.scales, 1, "scales"))
        if not len(self.names) == self.means.size == self.scales.size:
            raise ValueError("names, means and scales must have the same length.")
        if np.any(~np.isfinite(self.scales)) or np.any(self.scales <= 0.0):
            raise ValueError("scales must be finite and positive.")

    @staticmethod
    def fit(z: np.ndarray, names: Sequence[str]) -> "Standardization":
        """Mean 0, variance 1 with the population (n) denominator."""
        z = np.asarray(z, dtype=float)
        scales = z.std(axis=0, ddof=0)
        if np.any(scales == 0.0):
            bad = [str(n) for n, s in zip(names, scales) if s == 0.0]
            raise DataError(f"Columns with zero variance cannot be standardized: {bad}.")
        return Standardization(names=tuple(names), means=z.mean(axis=0), scales=scales)

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Standardize raw covariates with the stored means and scales."""
        z = np.asarray(z, dtype=float)
        if z.ndim != 2 or z.shape[1] != self.means.size:
            raise DataError(
                f"Expected {self.means.size} covariate columns; got shape {z.shape}."
            )
        return (z - self.means) / self.scales

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {
            "names": list(self.names),
            "means": [float(v) for v in self.means],
            "scales": [float(v) for v in self.scales],
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "Standardization":
        """Deserialize from a dict, raising on missing fields."""
        return Standardization(
            names=tuple(data["names"]),
            means=np.asarray(data["means"], dtype=float),
            scales=np.asarray(data["scales"], dtype=float),
        )


@dataclass(frozen=True, slots=True)
class Dataset:
    """Binary responses and a design matrix whose column 0 is the intercept."""

    y: np.ndarray
    X: np.ndarray
    standardization: Standardization | None = None

    def __post_init__(self) -> None:
        y = _frozen_array(self.y, 1, "y")
        X = _frozen_array(self.X, 2, "X")
        if y.size == 0:
            raise DataError("Dataset needs at least one observation.")
        if X.shape[0] != y.size:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.size} entries.")
        if X.shape[1] < 1 or np.any(X[:, 0] != 1.0):
            raise DataError("Column 0 of X must be the all-ones intercept column.")
        if np.any((y != 0.0) & (y != 1.0)):
            raise DataError("y must contain only 0/1 labels.")
        if not np.all(np.isfinite(X)):
            raise DataError("X must contain only finite values.")
        if self.standardization is not None and self.standardization.means.size != X.shape[1] - 1:
            raise DataError("standardization does not match the number of covariates.")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @staticmethod
    def from_arrays(
        y: Any,
        z: Any,
        names: Sequence[str] | None = None,
        standardize: bool = True,
    ) -> "Dataset":
        """Build a Dataset from labels and raw covariates (no intercept column)."""
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        if names is None:
            names = [f"x{j}" for j in range(1, z.shape[1] + 1)]
        if len(names) != z.shape[1]:
            raise DataError("names must match the number of covariate columns.")
        std = None
        if standardize:
            std = Standardization.fit(z, names)
            z = std.apply(z)
        X = np.column_stack([np.ones(z.shape[0]), z])
        return Dataset(y=np.asarray(y, dtype=float), X=X, standardization=std)

    @property
    def n(self) -> int:
        """Number of observations."""
        return int(self.X.shape[0])

    @property
    def k(self) -> int:
        """Number of covariates, intercept excluded."""
        return int(self.X.shape[1] - 1)

    @property
    def names(self) -> tuple[str, ...]:
        """Coefficient names, intercept first."""
        if self.standardization is not None:
            return (INTERCEPT_NAME, *self.standardization.names)
        return (INTERCEPT_NAME, *(f"x{j}" for j in range(1, self.k + 1)))

    def linear_predictor(self, beta: "Coefficients | np.ndarray") -> np.ndarray:
        """Return X @ beta."""
        return self.X @ as_beta(beta, self.k + 1)

    def predict_proba(self, beta: "Coefficients | np.ndarray") -> np.ndarray:
        """Model probabilities sigmoid(x_i^T beta), unclamped."""
        return expit(self.linear_predictor(beta))

    def subset(self, rows: Any) -> "Dataset":
        """Row selection (train/test splits, outlier removal); keeps the scaling record."""
        rows = np.asarray(rows)
        return Dataset(y=self.y[rows], X=self.X[rows], standardization=self.standardization)


@dataclass(frozen=True, slots=True)
class Coefficients:
    """beta = (beta_0, ..., beta_k); index 0 is the intercept."""

    beta: np.ndarray

    def __post_init__(self) -> None:
        beta = _frozen_array(self.beta, 1, "beta")
        if beta.size < 1:
            raise ValueError("beta needs at least the intercept entry.")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta entries must be finite.")
        object.__setattr__(self, "beta", beta)

    @staticmethod
    def zeros(k: int) -> "Coefficients":
        """All-zero coefficients for k covariates."""
        return Coefficients(np.zeros(k + 1))

    def support(self) -> tuple[int, ...]:
        """Indices j >= 1 with a nonzero coefficient."""
        return tuple(int(j) + 1 for j in np.flatnonzero(self.beta[1:]))

    def to_dict(self, names: Sequence[str] | None = None) -> dict[str, float]:
        """Name -> value map (positional names when none are given)."""
        if names is None:
            names = [INTERCEPT_NAME, *(f"x{j}" for j in range(1, self.beta.size))]
        return {str(n): float(v) for n, v in zip(names, self.beta)}


def as_beta(beta: Coefficients | np.ndarray | Sequence[float], size: int | None = None) -> np.ndarray:
    """Coerce to a float vector, checking its length when size is given."""
    arr = beta.beta if isinstance(beta, Coefficients) else np.asarray(beta, dtype=float)
    if arr.ndim != 1:
        raise ValueError("beta must be a vector.")
    if size is not None and arr.size != size:
        raise ValueError(f"beta has length {arr.size}; expected {size}.")
    return arr


@dataclass(frozen=True, slots=True)
class DpdParams:
    """Robustness tuning parameter; alpha = 0 is the log-likelihood limit."""

    alpha: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise ValueError("alpha must be finite and >= 0.")


def sigmoid(eta: Any) -> Any:
    """e^eta / (1 + e^eta) without overflow; floats in, floats out."""
    out = expit(np.asarray(eta, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def clamp_probabilities(pi: np.ndarray) -> np.ndarray:
    """Clamp into [EPS_PI, 1 - EPS_PI]."""
    return np.clip(pi, EPS_PI, 1.0 - EPS_PI)


def dpd_bracket(pi: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """Per-observation DPD term for alpha > 0 (y^(1+a) + (1-y)^(1+a) = 1 for binary y)."""
    q = 1.0 - pi
    return (
        pi ** (1.0 + alpha)
        + q ** (1.0 + alpha)
        - (1.0 + 1.0 / alpha) * (y * pi**alpha + (1.0 - y) * q**alpha)
        + 1.0 / alpha
    )


def nll_from_predictor(eta: np.ndarray, y: np.ndarray) -> float:
    """Negative log-likelihood given the linear predictor."""
    pi = clamp_probabilities(expit(eta))
    return float(-np.sum(y * np.log(pi) + (1.0 - y) * np.log1p(-pi)))


def loss_from_predictor(eta: np.ndarray, y: np.ndarray, alpha: float) -> float:
    """DPD loss given the linear predictor; nll/n at alpha = 0."""
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0.")
    n = y.size
    if alpha == 0.0:
        return nll_from_predictor(eta, y) / n
    pi = clamp_probabilities(expit(eta))
    return float(np.sum(dpd_bracket(pi, y, alpha)) / float(n) ** (1.0 + alpha))


def nll(data: Dataset, beta: Coefficients | np.ndarray) -> float:
    """Negative Bernoulli log-likelihood."""
    return nll_from_predictor(data.linear_predictor(beta), data.y)


def dpd_loss(data: Dataset, beta: Coefficients | np.ndarray, params: DpdParams | float) -> float:
    """DPD loss n^-(1+alpha) * sum of brackets; nll/n at alpha = 0."""
    alpha = params.alpha if isinstance(params, DpdParams) else float(params)
    return loss_from_predictor(data.linear_predictor(beta), data.y, alpha)
