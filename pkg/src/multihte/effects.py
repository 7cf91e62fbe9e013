"""Per-subject treatment effects on the log-mean-ratio scale.

W-method fits are read off directly as ``X W V'``.  An A-learner linear
score ``u`` overstates the log ratio; the log ratio it implies is
``u + log(1 + exp(-(1 - pi) u)) - log(1 + exp(pi u))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FactorizedCoefficients, _check_positivity
from .errors import DimensionError, NumericError
from .losses import softplus

METHOD_TAGS = ("Full", "MA", "MAmod", "MW", "R3A", "R3Amod", "R3W")


@dataclass(frozen=True, eq=False)
class EffectMatrix:
    H: np.ndarray
    method_tag: str

    def __post_init__(self):
        if self.method_tag not in METHOD_TAGS:
            raise ValueError(f"unknown method tag {self.method_tag!r}")
        H = np.asarray(self.H, dtype=float)
        if H.ndim != 2:
            raise DimensionError("effect matrix must be 2-d")
        if not np.all(np.isfinite(H)):
            raise NumericError("effect matrix has non-finite entries")
        object.__setattr__(self, "H", H)

    @property
    def scores(self):
        return self.H.sum(axis=1)


def _linear_scores(X, gamma):
    X = np.asarray(X, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if X.ndim != 2 or gamma.ndim != 2 or X.shape[1] != gamma.shape[0]:
        raise DimensionError(f"cannot multiply X{X.shape} by Gamma{gamma.shape}")
    return X @ gamma


def raw_effect(coeffs: FactorizedCoefficients, X, method_tag="R3W"):
    """``X W V'``."""
    return EffectMatrix(_linear_scores(X, coeffs.gamma), method_tag)


def bias_term(u, pi):
    """``log(1 + exp(-(1 - pi) u)) - log(1 + exp(pi u))``, elementwise."""
    u = np.asarray(u, dtype=float)
    pi = _check_positivity(pi)
    return softplus(-(1.0 - pi) * u) - softplus(pi * u)


def _corrected(U, pi):
    pi = np.asarray(pi, dtype=float)
    if pi.ndim == 0:
        pi = np.full(U.shape[0], float(pi))
    if pi.shape != (U.shape[0],):
        raise DimensionError(f"pi has shape {pi.shape}, expected ({U.shape[0]},)")
    pi = _check_positivity(pi)[:, None]
    # u + bias(u, pi) rewritten so that pi = 1/2 gives exactly u / 2
    return pi * U + (softplus((1.0 - pi) * U) - softplus(pi * U))


def corrected_effect(coeffs: FactorizedCoefficients, X, pi, method_tag="R3Amod"):
    """Bias-corrected effect of a reduced-rank A-learner fit."""
    return EffectMatrix(_corrected(_linear_scores(X, coeffs.gamma), pi), method_tag)


def corrected_effect_univariate(gamma, X, pi, method_tag="MAmod"):
    """Bias-corrected effect of per-outcome A-learner coefficients (p x m)."""
    return EffectMatrix(_corrected(_linear_scores(X, gamma), pi), method_tag)


def linear_effect(gamma, X, method_tag):
    """``X Gamma`` for an unfactored coefficient matrix."""
    return EffectMatrix(_linear_scores(X, gamma), method_tag)
