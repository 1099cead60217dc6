#!/usr/bin/env python3
"""
deriv.py

Analytic first and second derivatives of the DPD loss.

All expressions are written in terms of pi = sigmoid(eta) and q = 1 - pi,
computed separately so that neither tail loses precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from src.core import Coefficients, Dataset, DpdParams

# Floor for the IRLS weights h2.
EPS_H = 1e-6


def _alpha(params: DpdParams | float) -> float:
    return params.alpha if isinstance(params, DpdParams) else float(params)


def _scale(alpha: float, n: int) -> float:
    return (alpha + 1.0) / float(n) ** alpha


def psi(xb: Any, y: Any, alpha: float) -> Any:
    """
    Estimating-equation kernel of the logistic MDPDE.

    (e^{a xb} + e^{xb}) (e^{xb} - y (1 + e^{xb})) / (1 + e^{xb})^{a+2}
    rearranged as (pi^a q + pi q^a) (pi - y).
    """
    xb = np.asarray(xb, dtype=float)
    p = expit(xb)
    q = expit(-xb)
    out = (p**alpha * q + p * q**alpha) * (p - np.asarray(y, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def h2_raw(xb: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """d psi / d xb, without the (alpha + 1) / n^alpha factor."""
    p = expit(xb)
    q = expit(-xb)
    pa = p**alpha
    qa = q**alpha
    unlabelled = p * pa * q * ((1.0 + alpha) - (2.0 + alpha) * p) + qa * p**2 * (
        2.0 - (2.0 + alpha) * p
    )
    labelled = pa * q * (alpha - (1.0 + alpha) * p) + p * qa * (1.0 - (alpha + 1.0) * p)
    return unlabelled - y * labelled


@dataclass(frozen=True, slots=True)
class DerivBundle:
    """Per-observation gradient weights H1 and the diagonal of H2."""

    h1: np.ndarray
    h2: np.ndarray
    h2_raw: np.ndarray
    clamped_count: int

    def __post_init__(self) -> None:
        if not self.h1.shape == self.h2.shape == self.h2_raw.shape:
            raise ValueError("h1, h2 and h2_raw must have the same length.")
        if self.clamped_count < 0:
            raise ValueError("clamped_count must be >= 0.")

    @property
    def clamped_fraction(self) -> float:
        """Share of floored h2 entries."""
        return self.clamped_count / self.h2.size


def gradient(
    data: Dataset,
    beta: Coefficients | np.ndarray,
    params: DpdParams | float,
) -> np.ndarray:
    """(1/n) X^T H1 with H1_i = ((alpha+1)/n^alpha) psi(x_i^T beta, y_i, alpha)."""
    alpha = _alpha(params)
    h1 = _scale(alpha, data.n) * psi(data.linear_predictor(beta), data.y, alpha)
    return data.X.T @ h1 / data.n


def hessian_diag(
    data: Dataset,
    beta: Coefficients | np.ndarray,
    params: DpdParams | float,
    floor: float = EPS_H,
) -> DerivBundle:
    """H1, the floored H2 diagonal and the number of floored entries."""
    alpha = _alpha(params)
    eta = data.linear_predictor(beta)
    scale = _scale(alpha, data.n)
    h1 = scale * psi(eta, data.y, alpha)
    raw = scale * h2_raw(eta, data.y, alpha)
    below = raw < floor
    return DerivBundle(
        h1=h1,
        h2=np.where(below, floor, raw),
        h2_raw=raw,
        clamped_count=int(np.count_nonzero(below)),
    )


def hessian_vector_product(data: Dataset, weights: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(1/n) X^T diag(weights) X v without forming the matrix."""
    return data.X.T @ (weights * (data.X @ v)) / data.n
