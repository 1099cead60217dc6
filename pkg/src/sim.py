#!/usr/bin/env python3
"""
sim.py

Monte-Carlo harness: Toeplitz-Gaussian designs, label-flip and leverage
contamination, and support-recovery / estimation-error metrics.

Replication r draws from np.random.default_rng(SeedSequence([seed, r])), so
results do not depend on the order or process replications run in.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np
import pandas as pd
from scipy.linalg import cholesky, toeplitz
from scipy.special import expit

from src.core import Coefficients, Dataset, NumericalError, as_beta
from src.irls import FitConfig, PathResult, fit_path, initial_beta, two_stage_fit

logger = logging.getLogger(__name__)

DEFAULT_LEADING_SLOPES = (3.0, 1.5, 0.0, 0.0, 2.0)
METRIC_NAMES = ("MS", "TP", "TN", "MSES", "MAE")


class ContaminationKind(str, Enum):
    """Where the contamination goes; the value is its command-line name."""

    NONE = "none"
    LABELS = "labels"
    LEVERAGE = "leverage"


@dataclass(frozen=True, slots=True)
class Contamination:
    """Contamination scheme and level eps."""

    kind: ContaminationKind = ContaminationKind.NONE
    eps: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ContaminationKind(self.kind))
        if not 0.0 <= self.eps < 0.5:
            raise ValueError("eps must be in [0, 0.5).")

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {"kind": self.kind.value, "eps": self.eps}


def default_beta_true(k: int) -> Coefficients:
    """Zero intercept, first five slopes (3, 1.5, 0, 0, 2), the rest zero."""
    if k < len(DEFAULT_LEADING_SLOPES):
        raise ValueError("The default truth needs k >= 5.")
    beta = np.zeros(k + 1)
    beta[1 : len(DEFAULT_LEADING_SLOPES) + 1] = DEFAULT_LEADING_SLOPES
    return Coefficients(beta)


@dataclass(frozen=True, slots=True)
class SimScenario:
    """One simulation design."""

    n: int = 100
    k: int = 500
    rho: float = 0.5
    beta_true: Coefficients | None = None
    contamination: Contamination = field(default_factory=Contamination)
    seed: int = 0
    leverage_type_a_prob: float = 0.5

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1:
            raise ValueError("n and k must be >= 1.")
        if not abs(self.rho) < 1.0:
            raise ValueError("rho must satisfy |rho| < 1 for a positive-definite Toeplitz matrix.")
        if not 0.0 <= self.leverage_type_a_prob <= 1.0:
            raise ValueError("leverage_type_a_prob must be in [0, 1].")
        if self.beta_true is None:
            object.__setattr__(self, "beta_true", default_beta_true(self.k))
        elif not isinstance(self.beta_true, Coefficients):
            object.__setattr__(self, "beta_true", Coefficients(self.beta_true))
        if self.truth.beta.size != self.k + 1:
            raise ValueError("beta_true must have length k+1.")

    @property
    def truth(self) -> Coefficients:
        """beta_true, never None after construction."""
        assert self.beta_true is not None
        return self.beta_true

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {
            "n": self.n,
            "k": self.k,
            "rho": self.rho,
            "beta_true": [float(v) for v in self.truth.beta],
            "contamination": self.contamination.to_dict(),
            "seed": self.seed,
            "leverage_type_a_prob": self.leverage_type_a_prob,
        }


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """Support recovery (MS, TP, TN) and estimation error (MSES, MAE)."""

    MS: float
    TP: float
    TN: float
    MSES: float
    MAE: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.TP <= 1.0 and 0.0 <= self.TN <= 1.0):
            raise ValueError("TP and TN must lie in [0, 1].")
        if self.MS < 0 or self.MSES < 0.0 or self.MAE < 0.0:
            raise ValueError("MS, MSES and MAE must be >= 0.")

    def as_tuple(self) -> tuple[float, ...]:
        """Values in METRIC_NAMES order."""
        return (self.MS, self.TP, self.TN, self.MSES, self.MAE)

    def to_dict(self) -> dict[str, float]:
        """Serialize to a JSON-ready dict."""
        return dict(zip(METRIC_NAMES, self.as_tuple()))


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent stream for replication rep."""
    return np.random.default_rng(np.random.SeedSequence([seed, rep]))


def toeplitz_factor(k: int, rho: float) -> np.ndarray:
    """Lower Cholesky factor of Sigma_ij = rho^|i-j|."""
    if not abs(rho) < 1.0:
        raise ValueError("rho must satisfy |rho| < 1.")
    return cholesky(toeplitz(rho ** np.arange(k)), lower=True)


def contaminate_labels(
    y: np.ndarray,
    X: np.ndarray,
    beta_true: Coefficients | np.ndarray,
    eps: float,
    rng: np.random.Generator,
    strict: bool = True,
    return_mask: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """
    With probability eps redraw y_i from Bernoulli(1 - pi(x_i^T beta_true)).

    X holds the raw covariates (no intercept column). strict=False allows
    eps outside [0, 0.5) for diagnostics.
    """
    if strict and not 0.0 <= eps < 0.5:
        raise ValueError("eps must be in [0, 0.5).")
    beta = as_beta(beta_true, X.shape[1] + 1)
    pi = expit(beta[0] + X @ beta[1:])
    redraw = rng.random(y.size) < eps
    flipped = rng.binomial(1, 1.0 - pi).astype(float)
    out = np.where(redraw, flipped, np.asarray(y, dtype=float))
    if return_mask:
        return out, redraw
    return out


def contaminate_leverage(
    X: np.ndarray,
    y: np.ndarray,
    beta_true: Coefficients | np.ndarray,
    eps: float,
    rng: np.random.Generator,
    type_a_prob: float = 0.5,
) -> np.ndarray:
    """
    Shift covariates of ceil(eps n) observations drawn among those with y = 1.

    Type (a): one true-nonzero covariate gets N(-5, 0.01) added.
    Type (b): five true-zero covariates each get N(5, 0.01) added.
    """
    if not 0.0 <= eps < 0.5:
        raise ValueError("eps must be in [0, 0.5).")
    beta = as_beta(beta_true, X.shape[1] + 1)
    out = np.array(X, dtype=float)
    wanted = math.ceil(round(eps * out.shape[0], 9))
    if wanted == 0:
        return out
    candidates = np.flatnonzero(np.asarray(y) == 1)
    if candidates.size < wanted:
        logger.warning(
            "Only %d observations with y=1 for %d leverage points; corrupting all of them.",
            candidates.size, wanted,
        )
        wanted = candidates.size
    chosen = rng.choice(candidates, size=wanted, replace=False)
    nonzero = np.flatnonzero(beta[1:])
    zero = np.flatnonzero(beta[1:] == 0.0)
    for i in chosen:
        if nonzero.size and (not zero.size or rng.random() < type_a_prob):
            j = rng.choice(nonzero)
            out[i, j] += rng.normal(-5.0, 0.1)
        else:
            cols = rng.choice(zero, size=min(5, zero.size), replace=False)
            out[i, cols] += rng.normal(5.0, 0.1, size=cols.size)
    return out


def generate(scn: SimScenario, rep: int = 0) -> tuple[Dataset, Coefficients]:
    """Draw one replication: design, responses, contamination, then scaling."""
    rng = replication_rng(scn.seed, rep)
    beta = scn.truth.beta
    z = rng.standard_normal((scn.n, scn.k)) @ toeplitz_factor(scn.k, scn.rho).T
    y = rng.binomial(1, expit(beta[0] + z @ beta[1:])).astype(float)

    kind = scn.contamination.kind
    eps = scn.contamination.eps
    if kind is ContaminationKind.LABELS:
        y = contaminate_labels(y, z, beta, eps, rng)
    elif kind is ContaminationKind.LEVERAGE:
        z = contaminate_leverage(z, y, beta, eps, rng, scn.leverage_type_a_prob)
    return Dataset.from_arrays(y, z), scn.truth


def metrics(beta_hat: Coefficients | np.ndarray, beta_true: Coefficients | np.ndarray) -> MetricsReport:
    """MS, TP, TN, MSES and MAE over the slopes (intercept excluded)."""
    est = as_beta(beta_hat)[1:]
    true = as_beta(beta_true)[1:]
    if est.size != true.size:
        raise ValueError("beta_hat and beta_true must have the same length.")
    chosen = est != 0.0
    relevant = true != 0.0
    s = int(np.count_nonzero(relevant))
    zeros = true.size - s
    tp = np.count_nonzero(chosen & relevant) / s if s else 1.0
    tn = np.count_nonzero(~chosen & ~relevant) / zeros if zeros else 1.0
    mses = float(np.sum((est[relevant] - true[relevant]) ** 2) / s) if s else 0.0
    mae = float(np.sum(np.abs(est - true)) / true.size)
    return MetricsReport(
        MS=float(np.count_nonzero(chosen)),
        TP=float(tp),
        TN=float(tn),
        MSES=mses,
        MAE=mae,
    )


def estimate(data: Dataset, cfg: FitConfig) -> PathResult:
    """Run one configured method: two-stage for adaptive schemes, else a single path."""
    if cfg.scheme.is_adaptive:
        return two_stage_fit(data, cfg)
    return fit_path(data, cfg, initial_beta(data))


@dataclass(frozen=True, slots=True)
class MethodSummary:
    """Mean and standard error of each metric for one method."""

    label: str
    means: MetricsReport | None
    std_errors: tuple[float, ...]
    completed: int
    failed: int

    def row(self) -> dict[str, Any]:
        """One output table row."""
        values = self.means.as_tuple() if self.means else (math.nan,) * len(METRIC_NAMES)
        row: dict[str, Any] = {"method": self.label}
        row.update(zip(METRIC_NAMES, values))
        row.update({f"{name}_se": se for name, se in zip(METRIC_NAMES, self.std_errors)})
        row.update({"reps": self.completed, "failures": self.failed})
        return row


@dataclass(frozen=True, slots=True)
class ExperimentTable:
    """Per-method summaries plus every per-replication report."""

    summaries: tuple[MethodSummary, ...]
    replications: dict[str, tuple[MetricsReport | None, ...]]

    def to_frame(self) -> pd.DataFrame:
        """Table with columns method, MS, TP, TN, MSES, MAE, standard errors, counts."""
        return pd.DataFrame([s.row() for s in self.summaries])


def _run_replication(
    scn: SimScenario,
    methods: Sequence[FitConfig],
    rep: int,
) -> list[MetricsReport | None]:
    data, truth = generate(scn, rep)
    reports: list[MetricsReport | None] = []
    for cfg in methods:
        try:
            path = estimate(data, cfg)
        except (NumericalError, ValueError) as exc:
            logger.error("Replication %d, method %s failed: %s", rep, cfg.method_label, exc)
            reports.append(None)
            continue
        reports.append(metrics(path.selected.beta_hat, truth))
    logger.info("Replication %d finished.", rep)
    return reports


def _summarize(label: str, reports: Sequence[MetricsReport | None]) -> MethodSummary:
    ok = np.array([r.as_tuple() for r in reports if r is not None], dtype=float)
    failed = sum(1 for r in reports if r is None)
    if ok.size == 0:
        return MethodSummary(label, None, (math.nan,) * len(METRIC_NAMES), 0, failed)
    means = ok.mean(axis=0)
    if ok.shape[0] > 1:
        se = ok.std(axis=0, ddof=1) / math.sqrt(ok.shape[0])
    else:
        se = np.zeros(len(METRIC_NAMES))
    return MethodSummary(
        label=label,
        means=MetricsReport(*(float(v) for v in means)),
        std_errors=tuple(float(v) for v in se),
        completed=int(ok.shape[0]),
        failed=failed,
    )


def run_experiment(
    scn: SimScenario,
    methods: Sequence[FitConfig],
    reps: int,
    workers: int = 1,
) -> ExperimentTable:
    """Generate reps datasets, fit every method on each, and average the metrics."""
    if reps < 1:
        raise ValueError("reps must be >= 1.")
    if not methods:
        raise ValueError("methods must not be empty.")
    labels = [cfg.method_label for cfg in methods]
    if len(set(labels)) != len(labels):
        raise ValueError(f"Method labels must be unique; got {labels}.")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(
                pool.map(_run_replication, [scn] * reps, [list(methods)] * reps, range(reps))
            )
    else:
        per_rep = [_run_replication(scn, methods, rep) for rep in range(reps)]

    replications = {
        label: tuple(rep_reports[i] for rep_reports in per_rep)
        for i, label in enumerate(labels)
    }
    summaries = tuple(_summarize(label, replications[label]) for label in labels)
    return ExperimentTable(summaries=summaries, replications=replications)
