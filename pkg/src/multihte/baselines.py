"""Comparison estimators: the Full logistic model and per-outcome A-learner / W-method fits.

The "-mod" variants are not separate fits; apply
:func:`multihte.effects.corrected_effect_univariate` to the MA coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .data import TrialData
from .effects import EffectMatrix
from .errors import ConvergenceError, EstimationError, IllConditionedError
from .glm import irls_logistic
from .losses import A_LEARNER, W_METHOD, scale_and_weights, softplus
from .solver import MAX_CONDITION, SolverOptions


@dataclass(frozen=True, eq=False)
class SeparableFit:
    """Per-outcome coefficients stacked as columns of ``gamma`` (p x m)."""

    gamma: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    objectives: np.ndarray

    @property
    def objective(self):
        return float(np.sum(self.objectives))


def _outcome_loss(Xs, y, w, g):
    return float(np.sum(w * y * softplus(-(Xs @ g))))


def separable_mm(X, Y, scale, weights, tol=1e-6, max_iter=1000, ridge=0.0, gamma0=None):
    """Minimize ``sum_i w_i y_ij log(1 + exp(-s_i x_i' g_j))`` separately for each outcome.

    Uses the same 1/8-quadratic majorizer as the reduced-rank solver; each
    outcome stops on its own once its loss decrease falls below ``tol``.
    Fractional ``Y`` in [0, 1] is accepted (the bound still holds).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    scale = np.asarray(scale, dtype=float)
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    n, p = X.shape
    m = Y.shape[1]
    Xs = scale[:, None] * X
    M = X.T @ ((w * scale * scale)[:, None] * X) + ridge * np.eye(p)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(
            f"normal equations are singular or ill-conditioned (condition {cond:.3g}); supply a positive ridge"
        )
    cho = cho_factor(M)
    wXs = w[:, None] * Xs

    gamma = np.zeros((p, m)) if gamma0 is None else np.array(gamma0, dtype=float)
    iterations = np.zeros(m, dtype=int)
    converged = np.zeros(m, dtype=bool)
    objectives = np.zeros(m)
    for j in range(m):
        y = Y[:, j]
        g = gamma[:, j]
        prev = _outcome_loss(Xs, y, w, g)
        it = 0
        for it in range(1, max_iter + 1):
            theta = Xs @ g
            z = theta + 4.0 * y * expit(-theta)
            g = cho_solve(cho, wXs.T @ z)
            cur = _outcome_loss(Xs, y, w, g)
            if prev - cur < tol:
                converged[j] = True
                break
            prev = cur
        gamma[:, j] = g
        iterations[j] = it
        objectives[j] = cur
    return SeparableFit(gamma, iterations, converged, objectives)


def _options_kwargs(options: SolverOptions | None):
    if options is None:
        return {}
    return {"tol": options.tol, "max_iter": options.max_iter, "ridge": options.ridge}


def fit_ma(data: TrialData, options: SolverOptions | None = None) -> SeparableFit:
    """A-learner applied to each outcome separately."""
    scale, weights = scale_and_weights(A_LEARNER, data)
    return separable_mm(data.X, data.Y, scale, weights, **_options_kwargs(options))


def fit_mw(data: TrialData, options: SolverOptions | None = None) -> SeparableFit:
    """W-method applied to each outcome separately."""
    scale, weights = scale_and_weights(W_METHOD, data)
    return separable_mm(data.X, data.Y, scale, weights, **_options_kwargs(options))


@dataclass(frozen=True, eq=False)
class FullModelFit:
    """Per-outcome logistic fits of ``Y_j`` on ``[1, X, t X]``.

    ``alpha`` (m,) intercepts, ``B`` (p x m) main effects, ``C`` (p x m)
    treatment interactions, with matching standard errors.
    """

    alpha: np.ndarray
    B: np.ndarray
    C: np.ndarray
    se_alpha: np.ndarray
    se_B: np.ndarray
    se_C: np.ndarray
    iterations: np.ndarray


def fit_full(data: TrialData, max_iter=200, tol=1e-8) -> FullModelFit:
    if np.all(data.t == data.t[0]):
        raise EstimationError("Full model needs both treatment arms")
    X = data.X
    n, p = X.shape
    design = np.column_stack([np.ones(n), X, data.t[:, None] * X])
    coefs, ses, iters = [], [], []
    for j in range(data.m):
        try:
            fit = irls_logistic(design, data.Y[:, j], max_iter=max_iter, tol=tol)
        except (ConvergenceError, EstimationError) as exc:
            raise ConvergenceError(f"Full model failed for outcome {j}: {exc}") from exc
        coefs.append(fit.coef)
        ses.append(fit.stderr)
        iters.append(fit.iterations)
    coef = np.column_stack(coefs)
    se = np.column_stack(ses)
    return FullModelFit(
        alpha=coef[0], B=coef[1:p + 1], C=coef[p + 1:],
        se_alpha=se[0], se_B=se[1:p + 1], se_C=se[p + 1:],
        iterations=np.asarray(iters),
    )


def _log_sigmoid(z):
    return -softplus(-z)


def full_effect(fit: FullModelFit, X, method_tag="Full") -> EffectMatrix:
    """Log ratio of model-implied means under t = +1 versus t = -1."""
    X = np.asarray(X, dtype=float)
    base = fit.alpha + X @ fit.B
    inter = X @ fit.C
    return EffectMatrix(_log_sigmoid(base + inter) - _log_sigmoid(base - inter), method_tag)
