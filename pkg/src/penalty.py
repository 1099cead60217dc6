#!/usr/bin/env python3
"""
penalty.py

Adaptive weight schemes and the weighted l1 penalty.

Scheme names on the command line and in JSON:
- lasso    : constant weights (DPD-LASSO)
- adaptive : w(s) = 1/s, capped (Ad-DPD-LASSO)
- scad     : derivative of SCAD, w(s) = I(s <= lam) + (a lam - s)_+ / ((a-1) lam) I(s > lam)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from src.core import Coefficients, as_beta

DEFAULT_SCAD_A = 3.7
DEFAULT_WEIGHT_CAP = 1e6


class WeightKind(str, Enum):
    """Tag of a weight scheme; the value is its command-line name."""

    CONSTANT = "lasso"
    HARD_THRESHOLD = "adaptive"
    SCAD = "scad"


@dataclass(frozen=True, slots=True)
class WeightScheme:
    """A weight function w(|beta_tilde_j|) and its ceiling."""

    kind: WeightKind = WeightKind.CONSTANT
    a: float = DEFAULT_SCAD_A
    cap: float = DEFAULT_WEIGHT_CAP

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if self.kind is WeightKind.SCAD and not self.a > 2.0:
            raise ValueError("SCAD weights need a > 2.")
        if not np.isfinite(self.cap) or self.cap <= 0.0:
            raise ValueError("cap must be finite and positive.")

    @property
    def is_adaptive(self) -> bool:
        """True when the weights depend on an initial estimate."""
        return self.kind is not WeightKind.CONSTANT

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-ready dict."""
        return {"kind": self.kind.value, "a": self.a, "cap": self.cap}

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "WeightScheme":
        """Deserialize from a dict; missing a/cap take their defaults."""
        return WeightScheme(
            kind=WeightKind(str(data["kind"])),
            a=float(data.get("a", DEFAULT_SCAD_A)),
            cap=float(data.get("cap", DEFAULT_WEIGHT_CAP)),
        )


@dataclass(frozen=True, slots=True)
class PenaltyWeights:
    """w_1..w_k; the intercept is never penalized."""

    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.w, dtype=float)
        if w.ndim != 1:
            raise ValueError("w must be a vector.")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("weights must be finite and >= 0.")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


def _abs_slopes(beta: Coefficients | np.ndarray) -> np.ndarray:
    return np.abs(as_beta(beta)[1:])


def _check_scad_lambda(lam: float) -> None:
    if not lam > 0.0:
        raise ValueError("SCAD weights need lambda > 0.")


def compute_weights(
    beta_tilde: Coefficients | np.ndarray,
    scheme: WeightScheme,
    lam: float,
) -> PenaltyWeights:
    """Weights from an initial estimate beta_tilde."""
    s = _abs_slopes(beta_tilde)
    if scheme.kind is WeightKind.CONSTANT:
        return PenaltyWeights(np.ones_like(s))
    if scheme.kind is WeightKind.HARD_THRESHOLD:
        with np.errstate(divide="ignore"):
            raw = 1.0 / s
        return PenaltyWeights(np.minimum(raw, scheme.cap))
    _check_scad_lambda(lam)
    a = scheme.a
    tail = np.maximum(a * lam - s, 0.0) / ((a - 1.0) * lam)
    return PenaltyWeights(np.minimum(np.where(s <= lam, 1.0, tail), scheme.cap))


def weight_derivative(
    beta_tilde: Coefficients | np.ndarray,
    scheme: WeightScheme,
    lam: float,
) -> np.ndarray:
    """w'(|beta_tilde_j|) for j = 1..k; zero where the weight is capped or flat."""
    s = _abs_slopes(beta_tilde)
    if scheme.kind is WeightKind.CONSTANT:
        return np.zeros_like(s)
    if scheme.kind is WeightKind.HARD_THRESHOLD:
        out = np.zeros_like(s)
        live = s > 1.0 / scheme.cap
        out[live] = -1.0 / s[live] ** 2
        return out
    _check_scad_lambda(lam)
    a = scheme.a
    return np.where((s > lam) & (s < a * lam), -1.0 / ((a - 1.0) * lam), 0.0)


def penalty_value(beta: Coefficients | np.ndarray, w: PenaltyWeights, lam: float) -> float:
    """lam * sum_j w_j |beta_j|, intercept excluded."""
    s = _abs_slopes(beta)
    if s.size != w.w.size:
        raise ValueError(f"beta has {s.size} slopes but there are {w.w.size} weights.")
    return float(lam * np.sum(w.w * s))


def folded_penalty_value(beta: Coefficients | np.ndarray, scheme: WeightScheme, lam: float) -> float:
    """
    lam * sum_j P(|beta_j|) where P' is the scheme's weight function and P(0) = 0.

    P is concave, so the weighted l1 penalty built at beta_tilde majorizes it
    up to a constant and touches it at beta_tilde.
    """
    s = _abs_slopes(beta)
    if scheme.kind is WeightKind.CONSTANT:
        folded = s
    elif scheme.kind is WeightKind.HARD_THRESHOLD:
        cap = scheme.cap
        with np.errstate(divide="ignore"):
            folded = np.where(s <= 1.0 / cap, cap * s, 1.0 + np.log(cap * s))
    else:
        _check_scad_lambda(lam)
        a = scheme.a
        middle = (2.0 * a * lam * s - s**2 - lam**2) / (2.0 * (a - 1.0) * lam)
        folded = np.where(
            s <= lam, s, np.where(s <= a * lam, middle, (a + 1.0) * lam / 2.0)
        )
    return float(lam * np.sum(folded))
