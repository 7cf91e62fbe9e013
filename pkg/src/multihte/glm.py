"""Plain maximum-likelihood logistic regression by IRLS.

Used for the propensity model and for the per-outcome Full baseline.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, EstimationError


@dataclass(frozen=True, eq=False)
class LogisticFit:
    coef: np.ndarray
    stderr: np.ndarray
    iterations: int


def irls_logistic(design, y, max_iter=100, tol=1e-8):
    """Fit ``P(y=1) = expit(design @ coef)`` by Newton/IRLS.

    Parameters
    ----------
    design : (n, k) array
        Full design matrix; include a column of ones for an intercept.
    y : (n,) array of 0/1
    max_iter : int
        Iteration cap. Reaching it raises :class:`ConvergenceError`.
    tol : float
        Convergence threshold on ``max|coef_new - coef_old|``.

    Raises
    ------
    EstimationError
        If ``y`` is constant (complete separation by construction).
    ConvergenceError
        On non-convergence, which for logistic regression almost always means
        (quasi-)separation, or on a singular information matrix.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = design.shape
    if y.shape != (n,):
        raise EstimationError(f"response has shape {y.shape}, expected ({n},)")
    if np.all(y == y[0]):
        raise EstimationError("response is constant; logistic MLE does not exist (separation)")

    coef = np.zeros(k)
    for it in range(1, max_iter + 1):
        eta = design @ coef
        mu = expit(eta)
        w = mu * (1.0 - mu)
        info = design.T @ (w[:, None] * design)
        score = design.T @ (y - mu)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                f"singular information matrix at iteration {it}; likely separation"
            ) from exc
        if not np.all(np.isfinite(step)):
            raise ConvergenceError(f"non-finite Newton step at iteration {it}; likely separation")
        coef = coef + step
        if np.max(np.abs(step)) < tol:
            mu = expit(design @ coef)
            w = mu * (1.0 - mu)
            info = design.T @ (w[:, None] * design)
            try:
                cov = np.linalg.inv(info)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError("singular information matrix at the optimum") from exc
            return LogisticFit(coef=coef, stderr=np.sqrt(np.clip(np.diag(cov), 0.0, None)), iterations=it)
    raise ConvergenceError(
        f"IRLS did not converge within max_iter={max_iter} iterations; likely separation"
    )
