#!/usr/bin/env python3
"""
influence.py

Influence function of the AW-DPD-LASSO functional under point contamination
(y_t, x_t), for a fixed design.

The estimating equations are restricted to the active set: the intercept plus
every slope with a nonzero coefficient. Off the active set the influence
function is identically zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from src.core import Coefficients, Dataset, NumericalError, as_beta
from src.deriv import hessian_diag, psi
from src.penalty import WeightKind, WeightScheme, compute_weights, weight_derivative

logger = logging.getLogger(__name__)

# Relative size below which the smallest singular value makes S singular.
_SINGULAR_RTOL = 1e-12


def active_set(beta: Coefficients | np.ndarray) -> tuple[int, ...]:
    """Intercept plus the indices of the nonzero slopes."""
    b = as_beta(beta)
    return (0, *(int(j) + 1 for j in np.flatnonzero(b[1:])))


@dataclass(frozen=True, slots=True)
class IfRequest:
    """Evaluation point, tuning constants and the contamination point."""

    data: Dataset
    beta: Coefficients
    alpha: float
    lam: float
    scheme: WeightScheme = field(default_factory=WeightScheme)
    beta_tilde: Coefficients | None = None
    if_initial: np.ndarray | None = None
    y_t: float = 1.0
    x_t: np.ndarray | None = None

    def __post_init__(self) -> None:
        beta = self.beta if isinstance(self.beta, Coefficients) else Coefficients(self.beta)
        object.__setattr__(self, "beta", beta)
        if beta.beta.size != self.data.k + 1:
            raise ValueError("beta does not match the design.")
        if self.alpha < 0.0 or self.lam < 0.0:
            raise ValueError("alpha and lam must be >= 0.")
        if self.y_t not in (0.0, 1.0):
            raise ValueError("y_t must be 0 or 1.")
        if self.beta_tilde is not None and not isinstance(self.beta_tilde, Coefficients):
            object.__setattr__(self, "beta_tilde", Coefficients(self.beta_tilde))
        if self.x_t is not None:
            x_t = np.asarray(self.x_t, dtype=float)
            if x_t.shape != (self.data.k + 1,) or x_t[0] != 1.0:
                raise ValueError("x_t must have length k+1 with a leading 1.")
            object.__setattr__(self, "x_t", x_t)
        if self.if_initial is not None:
            init = np.asarray(self.if_initial, dtype=float)
            if init.shape != (len(active_set(beta)),):
                raise ValueError("if_initial must have one entry per active coordinate.")
            object.__setattr__(self, "if_initial", init)

    @property
    def support(self) -> tuple[int, ...]:
        """Active coordinates (intercept first)."""
        return active_set(self.beta)

    def at(self, t: float) -> "IfRequest":
        """Same request contaminated at x_t = (1, t, ..., t)."""
        x_t = np.full(self.data.k + 1, float(t))
        x_t[0] = 1.0
        return replace(self, x_t=x_t)


def j_alpha(
    data: Dataset,
    beta: Coefficients | np.ndarray,
    alpha: float,
    support: Sequence[int] | None = None,
) -> np.ndarray:
    """
    Jacobian of the DPD estimating equations restricted to the support:
    (1/n) sum_i h2_i x_i x_i^T with h2_i the unfloored second-derivative
    weight at the observed label y_i. At a = 0 this is the Fisher
    information pi q. Entries are not floored, so S can be indefinite.
    """
    if support is None:
        support = active_set(beta)
    idx = np.asarray(support, dtype=int)
    if idx.size == 0:
        raise ValueError("support must not be empty.")
    weights = hessian_diag(data, beta, alpha, floor=-np.inf).h2_raw
    Xs = data.X[:, idx]
    s_matrix = (Xs.T * weights) @ Xs / data.n
    singular = np.linalg.svd(s_matrix, compute_uv=False)
    if singular[-1] <= _SINGULAR_RTOL * max(singular[0], 1e-300):
        raise NumericalError(
            f"S_alpha is singular (smallest singular value {singular[-1]:.3e}).",
            {"singular_values": singular.tolist(), "support": idx.tolist()},
        )
    return s_matrix


def influence_vector(req: IfRequest) -> np.ndarray:
    """
    IF on the active set:
    -S^{-1} [ ((1+a)/n^a) psi(x_t^T b, y_t, a) x_t + lam P* + lam P2 IF_initial ].
    """
    if req.x_t is None:
        raise ValueError("IfRequest needs a contamination point x_t.")
    idx = np.asarray(req.support, dtype=int)
    beta = req.beta.beta
    n = req.data.n
    s_matrix = j_alpha(req.data, beta, req.alpha, idx)

    score = (1.0 + req.alpha) / float(n) ** req.alpha * psi(
        float(req.x_t @ beta), req.y_t, req.alpha
    )
    rhs = score * req.x_t[idx]

    beta_tilde = req.beta_tilde.beta if req.beta_tilde is not None else beta
    slopes = idx[idx > 0]
    penalty_rows = idx > 0
    if req.lam > 0.0:
        weights = compute_weights(beta_tilde, req.scheme, req.lam).w
        p_star = np.zeros(idx.size)
        p_star[penalty_rows] = weights[slopes - 1] * np.sign(beta[slopes])
        rhs = rhs + req.lam * p_star
        if req.if_initial is not None and req.scheme.kind is not WeightKind.CONSTANT:
            deriv = weight_derivative(beta_tilde, req.scheme, req.lam)
            p_two = np.zeros(idx.size)
            p_two[penalty_rows] = deriv[slopes - 1] * np.sign(beta_tilde[slopes] * beta[slopes])
            rhs = rhs + req.lam * p_two * req.if_initial
    return -np.linalg.solve(s_matrix, rhs)


def full_influence(req: IfRequest) -> np.ndarray:
    """IF over all k+1 coordinates, zero off the active set."""
    out = np.zeros(req.data.k + 1)
    out[np.asarray(req.support, dtype=int)] = influence_vector(req)
    return out


def if_norm_curve(template: IfRequest, t_grid: Sequence[float]) -> pd.DataFrame:
    """||IF||_2 at x_t = (1, t, ..., t) over the grid; failed points are NaN."""
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("t_grid must not be empty.")
    norms = np.empty(grid.size)
    for i, t in enumerate(grid):
        try:
            norms[i] = float(np.linalg.norm(influence_vector(template.at(t))))
        except (NumericalError, np.linalg.LinAlgError) as exc:
            logger.warning("Influence function failed at t=%g: %s", t, exc)
            norms[i] = np.nan
    return pd.DataFrame({"t": grid, "if_norm": norms})


def curve_design(
    slopes: Sequence[float] = (3.0, 2.0),
    n: int = 100,
    seed: int = 0,
) -> tuple[Dataset, Coefficients]:
    """Standardized Gaussian design with len(slopes) covariates and zero intercept."""
    rng = np.random.default_rng(seed)
    beta = np.concatenate([[0.0], np.asarray(slopes, dtype=float)])
    z = rng.standard_normal((n, beta.size - 1))
    z = (z - z.mean(axis=0)) / z.std(axis=0)
    y = rng.binomial(1, expit(beta[0] + z @ beta[1:]))
    return Dataset.from_arrays(y, z, standardize=False), Coefficients(beta)


def describe(req: IfRequest) -> dict[str, Any]:
    """Summary of the request for result files."""
    return {
        "alpha": req.alpha,
        "lambda": req.lam,
        "scheme": req.scheme.to_dict(),
        "beta": [float(v) for v in req.beta.beta],
        "y_t": req.y_t,
        "n": req.data.n,
    }
