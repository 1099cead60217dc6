#!/usr/bin/env python3
"""
irls.py

IRLS computation of AW-DPD-LASSO estimates, the lambda path and HGIC selection.

Each iteration linearizes the DPD loss around the current beta, solves the
weighted-l1 least-squares surrogate by coordinate descent, and moves along
beta + (1 - t)(gamma - beta) with t picked on a grid that includes t = 1, so
the tracked objective never increases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from scipy.special import logit

from src.core import (
    Coefficients,
    Dataset,
    DpdParams,
    NumericalError,
    as_beta,
    dpd_loss,
    loss_from_predictor,
    nll,
)
from src.deriv import hessian_diag
from src.inner import SurrogateProblem, lambda_zero_threshold, solve_weighted_lasso
from src.penalty import (
    PenaltyWeights,
    WeightKind,
    WeightScheme,
    compute_weights,
    folded_penalty_value,
    penalty_value,
)

logger = logging.getLogger(__name__)

INTERCEPT_LIMIT = 10.0
LAMBDA_MAX_MARGIN = 1e-9
METHOD_NAMES = {
    WeightKind.CONSTANT: "DPD-LASSO",
    WeightKind.HARD_THRESHOLD: "Ad-DPD-LASSO",
    WeightKind.SCAD: "AW-DPD-LASSO",
}


@dataclass(frozen=True, slots=True)
class FitConfig:
    """Hyper-parameters of one estimator (single lambda or a path)."""

    alpha: float = 0.1
    lam: float | None = None
    lambda_grid: tuple[float, ...] | None = None
    n_lambda: int = 50
    lambda_ratio: float = 1e-3
    scheme: WeightScheme = field(default_factory=WeightScheme)
    max_iter: int = 100
    obj_tol: float = 1e-7
    line_search_points: int = 20
    inner_tol: float = 1e-8
    inner_max_sweeps: int = 1000
    freeze_weights: bool = False
    warm_start: bool = True
    label: str | None = None

    def __post_init__(self) -> None:
        DpdParams(self.alpha)
        if self.lam is not None and not self.lam > 0.0:
            raise ValueError("lam must be > 0.")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid:
                raise ValueError("lambda_grid must not be empty.")
            if any(v <= 0.0 for v in grid):
                raise ValueError("lambda_grid entries must be > 0.")
            if any(b >= a for a, b in zip(grid, grid[1:])):
                raise ValueError("lambda_grid must be strictly descending.")
            object.__setattr__(self, "lambda_grid", grid)
        if self.n_lambda < 1:
            raise ValueError("n_lambda must be >= 1.")
        if not 0.0 < self.lambda_ratio <= 1.0:
            raise ValueError("lambda_ratio must be in (0, 1].")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1.")
        if not self.obj_tol > 0.0:
            raise ValueError("obj_tol must be > 0.")
        if self.line_search_points < 2:
            raise ValueError("line_search_points must be >= 2.")
        if not self.inner_tol > 0.0 or self.inner_max_sweeps < 1:
            raise ValueError("inner_tol must be > 0 and inner_max_sweeps >= 1.")

    @property
    def line_search_grid(self) -> np.ndarray:
        """t values from 0 (full step) to 1 (stay put)."""
        return np.linspace(0.0, 1.0, self.line_search_points)

    @property
    def method_label(self) -> str:
        """Label used in result tables, e.g. 'Ad-DPD-LASSO a=0.1'."""
        if self.label:
            return self.label
        return f"{METHOD_NAMES[self.scheme.kind]} a={self.alpha:g}"

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {
            "alpha": self.alpha,
            "lam": self.lam,
            "lambda_grid": None if self.lambda_grid is None else list(self.lambda_grid),
            "n_lambda": self.n_lambda,
            "lambda_ratio": self.lambda_ratio,
            "scheme": self.scheme.to_dict(),
            "max_iter": self.max_iter,
            "obj_tol": self.obj_tol,
            "line_search_points": self.line_search_points,
            "inner_tol": self.inner_tol,
            "inner_max_sweeps": self.inner_max_sweeps,
            "freeze_weights": self.freeze_weights,
            "warm_start": self.warm_start,
            "label": self.label,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "FitConfig":
        """Deserialize from a dict; absent keys take their defaults."""
        defaults = FitConfig()
        grid = data.get("lambda_grid")
        lam = data.get("lam", data.get("lambda"))
        scheme = data.get("scheme")
        if isinstance(scheme, str):
            scheme = {"kind": scheme}
        return FitConfig(
            alpha=float(data.get("alpha", defaults.alpha)),
            lam=None if lam is None else float(lam),
            lambda_grid=None if grid is None else tuple(float(v) for v in grid),
            n_lambda=int(data.get("n_lambda", defaults.n_lambda)),
            lambda_ratio=float(data.get("lambda_ratio", defaults.lambda_ratio)),
            scheme=defaults.scheme if scheme is None else WeightScheme.from_dict(scheme),
            max_iter=int(data.get("max_iter", defaults.max_iter)),
            obj_tol=float(data.get("obj_tol", defaults.obj_tol)),
            line_search_points=int(data.get("line_search_points", defaults.line_search_points)),
            inner_tol=float(data.get("inner_tol", defaults.inner_tol)),
            inner_max_sweeps=int(data.get("inner_max_sweeps", defaults.inner_max_sweeps)),
            freeze_weights=bool(data.get("freeze_weights", defaults.freeze_weights)),
            warm_start=bool(data.get("warm_start", defaults.warm_start)),
            label=data.get("label"),
        )


@dataclass(frozen=True, slots=True)
class FitResult:
    """One AW-DPD-LASSO estimate at a fixed lambda."""

    beta_hat: Coefficients
    lam: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...]
    clamped_fraction: float
    surrogate_trace: tuple[float, ...] = ()

    @property
    def support(self) -> tuple[int, ...]:
        """Indices j >= 1 of the nonzero coefficients."""
        return self.beta_hat.support()

    @property
    def objective(self) -> float:
        """Final value of the tracked objective."""
        return self.objective_trace[-1]

    def to_dict(self, names: Sequence[str] | None = None) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        coefficients = self.beta_hat.to_dict(names)
        keys = list(coefficients)
        return {
            "lambda": self.lam,
            "coefficients": coefficients,
            "support": [keys[j] for j in self.support],
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
            "surrogate_trace": list(self.surrogate_trace),
            "clamped_fraction": self.clamped_fraction,
        }


@dataclass(frozen=True, slots=True)
class PathResult:
    """Fits over a descending lambda grid and the HGIC choice among them."""

    lambdas: tuple[float, ...]
    fits: tuple[FitResult | None, ...]
    hgic: tuple[float, ...]
    lambda_star: float
    selected: FitResult
    stage_one: "PathResult | None" = None

    @property
    def failures(self) -> int:
        """Number of grid points whose fit was skipped."""
        return sum(1 for f in self.fits if f is None)

    def to_dict(self, names: Sequence[str] | None = None) -> dict[str, Any]:
        """Serialize to a JSON-ready dict (NaN HGIC values become null)."""
        out: dict[str, Any] = {
            "lambda_grid": list(self.lambdas),
            "hgic": [v if math.isfinite(v) else None for v in self.hgic],
            "lambda_star": self.lambda_star,
            "selected": self.selected.to_dict(names),
            "path": [None if f is None else f.to_dict(names) for f in self.fits],
        }
        if self.stage_one is not None:
            out["stage_one"] = self.stage_one.to_dict(names)
        return out


def initial_beta(data: Dataset) -> Coefficients:
    """Intercept logit(mean y), clamped to +-10; slopes 0."""
    beta = np.zeros(data.k + 1)
    beta[0] = float(np.clip(logit(float(np.mean(data.y))), -INTERCEPT_LIMIT, INTERCEPT_LIMIT))
    return Coefficients(beta)


def objective(
    data: Dataset,
    beta: Coefficients | np.ndarray,
    alpha: float,
    weights: PenaltyWeights,
    lam: float,
) -> float:
    """Q = dpd_loss + lam * sum_j w_j |beta_j|."""
    return dpd_loss(data, beta, alpha) + penalty_value(beta, weights, lam)


def hgic(data: Dataset, beta_hat: Coefficients | np.ndarray) -> float:
    """
    -2 logL / n + log(log n) log(k) / n * ||beta_hat||_0 (intercept not counted).

    log(k) is floored at log 2 so one- and zero-slope designs still charge
    for a nonzero slope.
    """
    n = data.n
    if n <= math.e:
        raise ValueError(f"HGIC needs n > e so that log log n > 0; got n={n}.")
    beta = as_beta(beta_hat, data.k + 1)
    nonzero = int(np.count_nonzero(beta[1:]))
    penalty = math.log(math.log(n)) * math.log(max(data.k, 2)) / n
    return 2.0 * nll(data, beta) / n + penalty * nonzero


def _surrogate(
    data: Dataset,
    beta: np.ndarray,
    alpha: float,
    weights: PenaltyWeights,
    lam: float,
) -> tuple[SurrogateProblem, int]:
    """
    Weighted least-squares surrogate at beta.

    The quadratic model of the loss is multiplied by 2n to match the
    un-halved least-squares form, so the inner lambda is 2 n lam.
    """
    bundle = hessian_diag(data, beta, alpha)
    root = np.sqrt(bundle.h2)
    z = bundle.h1 / bundle.h2 - data.X @ beta
    problem = SurrogateProblem(
        Xm=root[:, None] * data.X,
        ym=-root * z,
        lam=2.0 * data.n * lam,
        w=weights,
    )
    return problem, bundle.clamped_count


def lambda_max(data: Dataset, cfg: FitConfig, beta0: Coefficients | np.ndarray) -> float:
    """Smallest lambda zeroing every slope in the first IRLS step from beta0."""
    beta = np.array(as_beta(beta0, data.k + 1), dtype=float)
    if cfg.scheme.kind is WeightKind.HARD_THRESHOLD:
        weights = compute_weights(beta, cfg.scheme, 1.0)
    else:
        # SCAD weights depend on lambda itself; unit weights bound them from above.
        weights = PenaltyWeights(np.ones(data.k))
    problem, _ = _surrogate(data, beta, cfg.alpha, weights, 1.0)
    value = lambda_zero_threshold(problem) / (2.0 * data.n)
    if not math.isfinite(value) or value <= 0.0:
        logger.warning("Could not derive lambda_max (got %r); using 1.0.", value)
        return 1.0
    # Nudged up so rounding in the first sweep cannot leave a tiny nonzero slope.
    return value * (1.0 + LAMBDA_MAX_MARGIN)


def lambda_grid(lam_max: float, n_points: int = 50, ratio: float = 1e-3) -> tuple[float, ...]:
    """n_points values log-spaced from lam_max down to lam_max * ratio."""
    if n_points == 1:
        return (float(lam_max),)
    exponents = np.linspace(0.0, math.log10(ratio), n_points)
    return tuple(float(lam_max * 10.0**e) for e in exponents)


def _tracked_objective(
    eta: np.ndarray,
    beta: np.ndarray,
    data: Dataset,
    cfg: FitConfig,
    lam: float,
    frozen: PenaltyWeights | None,
) -> float:
    loss = loss_from_predictor(eta, data.y, cfg.alpha)
    if frozen is not None:
        return loss + penalty_value(beta, frozen, lam)
    return loss + folded_penalty_value(beta, cfg.scheme, lam)


def _fit_at(
    data: Dataset,
    cfg: FitConfig,
    lam: float,
    beta0: Coefficients | np.ndarray,
    frozen: PenaltyWeights | None = None,
) -> FitResult:
    """
    IRLS at one lambda.

    objective_trace holds the loss plus the folded penalty (the concave
    penalty whose derivative is the weight function), or the weighted l1
    penalty when the weights are frozen; it is non-increasing.
    surrogate_trace holds, per accepted step, the value the line search
    minimized: the loss plus the l1 penalty weighted at the previous iterate.
    """
    beta = np.array(as_beta(beta0, data.k + 1), dtype=float)
    ts = cfg.line_search_grid
    eta = data.X @ beta
    current = _tracked_objective(eta, beta, data, cfg, lam, frozen)
    if not math.isfinite(current):
        raise NumericalError(
            "Objective is not finite at the initial value.",
            {"iteration": 0, "lambda": lam, "beta": beta.tolist()},
        )

    trace = [current]
    surrogate_trace: list[float] = []
    clamped = 0
    converged = False
    iterations = 0
    for m in range(1, cfg.max_iter + 1):
        iterations = m
        weights = frozen if frozen is not None else compute_weights(beta, cfg.scheme, lam)
        problem, clamped_now = _surrogate(data, beta, cfg.alpha, weights, lam)
        clamped += clamped_now
        inner = solve_weighted_lasso(problem, beta, cfg.inner_tol, cfg.inner_max_sweeps)
        gamma = inner.gamma

        eta_gamma = data.X @ gamma
        values = np.empty(ts.size)
        for i, t in enumerate(ts):
            candidate = t * beta + (1.0 - t) * gamma
            values[i] = loss_from_predictor(
                t * eta + (1.0 - t) * eta_gamma, data.y, cfg.alpha
            ) + penalty_value(candidate, weights, lam)
        finite = np.isfinite(values)
        if not np.any(finite):
            raise NumericalError(
                "Objective is not finite at any line-search point.",
                {
                    "iteration": m,
                    "lambda": lam,
                    "beta": beta.tolist(),
                    "gamma": gamma.tolist(),
                    "inner_sweeps": inner.sweeps,
                },
            )
        best = int(np.argmin(np.where(finite, values, np.inf)))
        t = float(ts[best])
        new_beta = t * beta + (1.0 - t) * gamma
        new_eta = data.X @ new_beta
        new_value = _tracked_objective(new_eta, new_beta, data, cfg, lam, frozen)

        logger.debug(
            "lambda=%.6g iter=%d t=%.4f objective=%.12g inner_sweeps=%d",
            lam, m, t, new_value, inner.sweeps,
        )
        if t == 1.0 or not new_value < current:
            converged = True
            break
        decrease = current - new_value
        beta, eta = new_beta, new_eta
        trace.append(new_value)
        surrogate_trace.append(float(values[best]))
        if decrease <= cfg.obj_tol * max(abs(current), 1e-300):
            converged = True
            break
        current = new_value

    if not converged:
        logger.warning("IRLS reached max_iter=%d at lambda=%.6g without converging.", cfg.max_iter, lam)
    return FitResult(
        beta_hat=Coefficients(beta),
        lam=float(lam),
        iterations=iterations,
        converged=converged,
        objective_trace=tuple(trace),
        clamped_fraction=clamped / (data.n * iterations),
        surrogate_trace=tuple(surrogate_trace),
    )


def fit(
    data: Dataset,
    cfg: FitConfig,
    beta0: Coefficients | np.ndarray,
    frozen_weights: PenaltyWeights | None = None,
) -> FitResult:
    """AW-DPD-LASSO estimate at cfg.lam starting from beta0."""
    if cfg.lam is None:
        raise ValueError("fit() needs cfg.lam; use fit_path() for a grid.")
    return _fit_at(data, cfg, cfg.lam, beta0, frozen_weights)


def fit_path(data: Dataset, cfg: FitConfig, beta0: Coefficients | np.ndarray) -> PathResult:
    """Fits along a descending lambda grid; the HGIC minimizer is selected."""
    beta0 = Coefficients(as_beta(beta0, data.k + 1))
    if cfg.lambda_grid is not None:
        grid = cfg.lambda_grid
    elif cfg.lam is not None:
        grid = (cfg.lam,)
    else:
        grid = lambda_grid(lambda_max(data, cfg, beta0), cfg.n_lambda, cfg.lambda_ratio)

    fits: list[FitResult | None] = []
    scores: list[float] = []
    start = beta0
    for lam in grid:
        frozen = None
        if cfg.freeze_weights and cfg.scheme.is_adaptive:
            frozen = compute_weights(beta0, cfg.scheme, lam)
        try:
            result = _fit_at(data, cfg, lam, start, frozen)
        except NumericalError as exc:
            logger.warning("Skipping lambda=%.6g: %s", lam, exc)
            fits.append(None)
            scores.append(math.nan)
            continue
        score = hgic(data, result.beta_hat)
        logger.info(
            "lambda=%.6g support=%d hgic=%.6f iterations=%d",
            lam, len(result.support), score, result.iterations,
        )
        fits.append(result)
        scores.append(score)
        if cfg.warm_start:
            start = result.beta_hat

    if all(f is None for f in fits):
        raise NumericalError(
            "Every lambda on the grid failed.", {"lambda_grid": list(grid)}
        )
    best = int(np.nanargmin(np.asarray(scores)))
    selected = fits[best]
    assert selected is not None
    return PathResult(
        lambdas=tuple(float(v) for v in grid),
        fits=tuple(fits),
        hgic=tuple(scores),
        lambda_star=float(grid[best]),
        selected=selected,
    )


def two_stage_fit(
    data: Dataset,
    cfg: FitConfig,
    beta0: Coefficients | np.ndarray | None = None,
) -> PathResult:
    """
    DPD-LASSO path first, then the adaptive path started from its HGIC choice.

    Every stage-2 lambda starts from the stage-1 estimate: once an adaptive
    fit zeroes a coordinate its weight hits the cap, so warm starts down the
    grid would never let it back in.
    """
    if beta0 is None:
        beta0 = initial_beta(data)
    stage_one_cfg = replace(
        cfg,
        scheme=WeightScheme(WeightKind.CONSTANT, cap=cfg.scheme.cap),
        freeze_weights=False,
    )
    stage_one = fit_path(data, stage_one_cfg, beta0)
    if not cfg.scheme.is_adaptive:
        return stage_one
    stage_two = fit_path(data, replace(cfg, warm_start=False), stage_one.selected.beta_hat)
    return replace(stage_two, stage_one=stage_one)
