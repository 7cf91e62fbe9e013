"""Multiple logistic loss and the W-method / A-learner objectives.

Both objectives share one shape.  With a per-subject predictor scaling ``s``
and per-subject weight ``w`` the loss is::

    sum_i w_i sum_j y_ij * log(1 + exp(-s_i * x_i' W v_j))

The W-method uses ``s = t`` and ``w = a`` (inverse-probability weights); the
A-learner uses ``s = q`` and ``w = 1``.  Terms with ``y_ij = 0`` contribute
nothing: the loss is one-sided by design.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .data import FactorizedCoefficients, TrialData
from .errors import DimensionError, NumericError

W_METHOD = "w"
A_LEARNER = "a"


def softplus(x):
    """``log(1 + exp(x))`` without overflow."""
    x = np.asarray(x, dtype=float)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def multiple_logistic_loss(Y, Theta, weights=None):
    """``sum_i weights_i sum_j Y_ij log(1 + exp(-Theta_ij))``."""
    Y = np.asarray(Y, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    if Y.shape != Theta.shape:
        raise DimensionError(f"Y has shape {Y.shape} but Theta has shape {Theta.shape}")
    if not np.all(np.isfinite(Theta)):
        raise NumericError("linear predictor contains non-finite entries")
    per_row = np.sum(Y * softplus(-Theta), axis=1)
    if weights is None:
        return float(np.sum(per_row))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (Y.shape[0],):
        raise DimensionError(f"weights have shape {weights.shape}, expected ({Y.shape[0]},)")
    return float(np.sum(weights * per_row))


def linear_predictor(X, W, V, scale):
    """``diag(scale) @ X @ W @ V.T``."""
    return np.asarray(scale, dtype=float)[:, None] * (np.asarray(X) @ np.asarray(W) @ np.asarray(V).T)


def objective(X, Y, scale, weights, W, V):
    """Generic weighted, scaled multiple logistic loss at factors ``(W, V)``."""
    return multiple_logistic_loss(Y, linear_predictor(X, W, V, scale), weights)


def scale_and_weights(kind, data: TrialData):
    """Per-subject ``(scale, weights)`` defining the W-method or A-learner loss."""
    if kind == W_METHOD:
        return data.t, data.weights()
    if kind == A_LEARNER:
        return data.scalings(), np.ones(data.n)
    raise ValueError(f"unknown loss kind {kind!r}; expected {W_METHOD!r} or {A_LEARNER!r}")


def _check_dims(coeffs, data):
    if coeffs.W.shape[0] != data.p or coeffs.V.shape[0] != data.m:
        raise DimensionError(
            f"factors W{coeffs.W.shape}, V{coeffs.V.shape} do not match data with p={data.p}, m={data.m}"
        )


def loss_w(coeffs: FactorizedCoefficients, data: TrialData) -> float:
    _check_dims(coeffs, data)
    return objective(data.X, data.Y, data.t, data.weights(), coeffs.W, coeffs.V)


def loss_a(coeffs: FactorizedCoefficients, data: TrialData) -> float:
    _check_dims(coeffs, data)
    return objective(data.X, data.Y, data.scalings(), None, coeffs.W, coeffs.V)


def objective_gradient(X, Y, scale, weights, W, V):
    """Gradient of :func:`objective` w.r.t. ``W`` and (unconstrained) ``V``."""
    X = np.asarray(X, dtype=float)
    scale = np.asarray(scale, dtype=float)
    Theta = linear_predictor(X, W, V, scale)
    # d loss / d Theta = -w * y * sigmoid(-Theta)
    Xi = -np.asarray(Y, dtype=float) * expit(-Theta)
    if weights is not None:
        Xi = Xi * np.asarray(weights, dtype=float)[:, None]
    SX = scale[:, None] * X
    dW = SX.T @ Xi @ V
    dV = Xi.T @ SX @ W
    return dW, dV


def loss_gradient(kind, coeffs: FactorizedCoefficients, data: TrialData):
    """Analytic ``(dW, dV)`` of :func:`loss_w` (``kind="w"``) or :func:`loss_a` (``kind="a"``)."""
    _check_dims(coeffs, data)
    scale, weights = scale_and_weights(kind, data)
    return objective_gradient(data.X, data.Y, scale, weights, coeffs.W, coeffs.V)
