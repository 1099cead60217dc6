#!/usr/bin/env python3
"""
inner.py

Penalized weighted least squares by cyclic coordinate descent.

Solves   min_g (ym - Xm g)^T (ym - Xm g) + lam * sum_{j>=1} w_j |g_j|
(no 1/2 on the quadratic, so each coordinate is soft-thresholded at lam w_j / 2).
Column 0 is the unpenalized intercept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from src.core import Coefficients, as_beta
from src.penalty import PenaltyWeights

logger = logging.getLogger(__name__)

# Full sweeps interleaved with active-set sweeps.
_FULL_SWEEP_EVERY = 10


def soft_threshold(z: Any, tau: float) -> Any:
    """sign(z) * max(|z| - tau, 0)."""
    if tau < 0.0:
        raise ValueError("tau must be >= 0.")
    out = np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, slots=True)
class SurrogateProblem:
    """Xm = diag(sqrt h2) X, ym = -diag(sqrt h2) z, with lam and the weights."""

    Xm: np.ndarray
    ym: np.ndarray
    lam: float
    w: PenaltyWeights

    def __post_init__(self) -> None:
        Xm = np.asarray(self.Xm, dtype=float)
        ym = np.asarray(self.ym, dtype=float)
        if Xm.ndim != 2 or ym.ndim != 1 or Xm.shape[0] != ym.size:
            raise ValueError(f"Incompatible shapes Xm {Xm.shape} and ym {ym.shape}.")
        if self.w.w.size != Xm.shape[1] - 1:
            raise ValueError("Need one weight per non-intercept column.")
        if not self.lam >= 0.0:
            raise ValueError("lam must be >= 0.")
        object.__setattr__(self, "Xm", Xm)
        object.__setattr__(self, "ym", ym)

    @property
    def thresholds(self) -> np.ndarray:
        """Per-coordinate soft-threshold levels, 0 for the intercept."""
        return np.concatenate([[0.0], self.lam * self.w.w / 2.0])

    def objective(self, gamma: np.ndarray) -> float:
        """Value of the penalized least-squares criterion."""
        r = self.ym - self.Xm @ gamma
        return float(r @ r + self.lam * np.sum(self.w.w * np.abs(gamma[1:])))


@dataclass(frozen=True, slots=True)
class InnerSolution:
    """Coordinate-descent output; converged=False means sweeps ran out."""

    gamma: np.ndarray
    sweeps: int
    converged: bool
    objective_trace: tuple[float, ...]

    @property
    def coefficients(self) -> Coefficients:
        """gamma wrapped as Coefficients."""
        return Coefficients(self.gamma)


def _sweep(
    p: SurrogateProblem,
    coords: np.ndarray,
    gamma: np.ndarray,
    r: np.ndarray,
    sq_norms: np.ndarray,
    thresholds: np.ndarray,
) -> float:
    """One cyclic pass; updates gamma and the residual r in place."""
    biggest = 0.0
    for j in coords:
        s_j = sq_norms[j]
        old = gamma[j]
        if s_j == 0.0:
            new = 0.0
        else:
            col = p.Xm[:, j]
            rho = col @ r + s_j * old
            new = soft_threshold(rho, thresholds[j]) / s_j
        if new != old:
            r -= (new - old) * p.Xm[:, j]
            gamma[j] = new
            biggest = max(biggest, abs(new - old))
    return biggest


def solve_weighted_lasso(
    p: SurrogateProblem,
    gamma_init: Coefficients | np.ndarray,
    tol: float = 1e-8,
    max_sweeps: int = 1000,
) -> InnerSolution:
    """
    Cyclic coordinate descent with active-set iterations.

    After a full sweep only the nonzero coordinates are cycled; a full sweep is
    forced every few passes and convergence is only declared on a full sweep.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1.")
    if not tol > 0.0:
        raise ValueError("tol must be > 0.")

    gamma = np.array(as_beta(gamma_init, p.Xm.shape[1]), dtype=float)
    r = p.ym - p.Xm @ gamma
    sq_norms = np.einsum("ij,ij->j", p.Xm, p.Xm)
    thresholds = p.thresholds
    all_coords = np.arange(gamma.size)

    trace = [p.objective(gamma)]
    converged = False
    full = True
    since_full = 0
    sweeps = 0
    while sweeps < max_sweeps:
        coords = all_coords if full else np.flatnonzero(gamma)
        change = _sweep(p, coords, gamma, r, sq_norms, thresholds)
        sweeps += 1
        trace.append(p.objective(gamma))
        if full:
            if change < tol:
                converged = True
                break
            full = False
            since_full = 0
        else:
            since_full += 1
            full = change < tol or since_full >= _FULL_SWEEP_EVERY

    if not converged:
        logger.debug("Coordinate descent stopped after %d sweeps without converging.", sweeps)
    return InnerSolution(
        gamma=gamma,
        sweeps=sweeps,
        converged=converged,
        objective_trace=tuple(trace),
    )


def kkt_residuals(p: SurrogateProblem, gamma: np.ndarray) -> np.ndarray:
    """Per-coordinate violation of the optimality conditions (0 at an exact solution)."""
    g = 2.0 * p.Xm.T @ (p.Xm @ gamma - p.ym)
    bound = np.concatenate([[0.0], p.lam * p.w.w])
    return np.where(
        gamma != 0.0,
        np.abs(g + bound * np.sign(gamma)),
        np.maximum(np.abs(g) - bound, 0.0),
    )


def lambda_zero_threshold(p: SurrogateProblem) -> float:
    """Smallest lam at which every penalized coordinate is zero (intercept free)."""
    x0 = p.Xm[:, 0]
    s0 = float(x0 @ x0)
    g0 = float(x0 @ p.ym) / s0 if s0 > 0.0 else 0.0
    corr = 2.0 * np.abs(p.Xm[:, 1:].T @ (p.ym - g0 * x0))
    w = p.w.w
    live = w > 0.0
    if not np.any(live):
        return 0.0
    return float(np.max(corr[live] / w[live]))
