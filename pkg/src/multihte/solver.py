"""Majorization-minimization for logistic reduced-rank regression.

Each outer iteration replaces the logistic loss by the quadratic upper bound
that follows from the curvature bound ``y * sigma(t) * sigma(-t) <= 1/4``::

    L(theta) <= L(v) + xi(v) (theta - v) + (theta - v)^2 / 8
             =  (z - theta)^2 / 8 + L(v) - 2 xi(v)^2,     z = v - 4 xi(v)

and then makes one sweep over the factors: ``V`` by an orthogonal
Procrustes step, then ``W`` by weighted least squares.  Both steps decrease
the bound, so the true loss never increases.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .data import FactorizedCoefficients, TrialData
from .errors import DimensionError, IllConditionedError, NumericError
from .losses import A_LEARNER, W_METHOD, linear_predictor, objective, scale_and_weights, softplus

logger = logging.getLogger(__name__)

#: Condition number above which the W normal equations are treated as singular.
MAX_CONDITION = 1e12
#: Relative size of the automatic ridge used when the normal equations are singular.
AUTO_RIDGE_FACTOR = 1e-8
#: Scale of the random initial W.
INIT_W_SCALE = 0.01


@dataclass(frozen=True)
class SolverOptions:
    rank: int
    tol: float = 1e-6
    max_iter: int = 1000
    init_seed: int = 0
    ridge: float = 0.0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.ridge < 0:
            raise ValueError(f"ridge must be non-negative, got {self.ridge}")


@dataclass(frozen=True, eq=False)
class FitResult:
    coeffs: FactorizedCoefficients
    objective_trace: np.ndarray
    converged: bool
    iterations: int
    ridge: float = 0.0

    @property
    def objective(self):
        return float(self.objective_trace[-1])


@dataclass(frozen=True, eq=False)
class MajorizationState:
    """Quadratic majorizer of the loss around an expansion point.

    ``Theta`` is the scaled linear predictor at the expansion point, ``Phi``
    the logistic residual factors ``sigma(-Theta)`` and ``Z`` the working
    response ``Theta + 4 Y * Phi``.
    """

    Phi: np.ndarray
    Z: np.ndarray
    Theta: np.ndarray
    Y: np.ndarray
    weights: np.ndarray
    iteration: int = 0
    surrogate_value: float = field(default=float("nan"))

    def quadratic(self, Theta):
        """``(1/8) sum_i w_i sum_j (z_ij - theta_ij)^2`` at a trial predictor."""
        R = self.Z - Theta
        return float(self.weights @ np.sum(R * R, axis=1)) / 8.0

    @property
    def tangency_constant(self):
        """Additive constant making the quadratic touch the loss at the expansion point."""
        xi = -self.Y * self.Phi
        per_entry = self.Y * softplus(-self.Theta) - 2.0 * xi * xi
        return float(self.weights @ np.sum(per_entry, axis=1))

    def surrogate(self, Theta):
        return self.quadratic(Theta) + self.tangency_constant


def majorize(X, Y, scale, weights, W, V, iteration=0):
    """Majorizer of the generic scaled/weighted loss at factors ``(W, V)``."""
    Y = np.asarray(Y, dtype=float)
    weights = np.ones(Y.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    Theta = linear_predictor(X, W, V, scale)
    if not np.all(np.isfinite(Theta)):
        raise NumericError("non-finite linear predictor while majorizing")
    Phi = expit(-Theta)
    Z = Theta + 4.0 * Y * Phi
    value = float(weights @ np.sum(Y * softplus(-Theta), axis=1))
    return MajorizationState(Phi=Phi, Z=Z, Theta=Theta, Y=Y, weights=weights,
                             iteration=iteration, surrogate_value=value)


def majorize_w(coeffs: FactorizedCoefficients, data: TrialData, iteration=0):
    return majorize(data.X, data.Y, data.t, data.weights(), coeffs.W, coeffs.V, iteration)


def majorize_a(coeffs: FactorizedCoefficients, data: TrialData, iteration=0):
    return majorize(data.X, data.Y, data.scalings(), None, coeffs.W, coeffs.V, iteration)


def _complete_basis(B, k, dim, count):
    """Extend the first ``k`` orthonormal columns of ``B`` to ``count`` columns,
    drawing candidates from the standard basis in index order."""
    cols = [B[:, j] for j in range(k)]
    for i in range(dim):
        if len(cols) == count:
            break
        e = np.zeros(dim)
        e[i] = 1.0
        for c in cols:
            e -= (c @ e) * c
        for c in cols:  # second pass for numerical orthogonality
            e -= (c @ e) * c
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            cols.append(e / nrm)
    return np.column_stack(cols)


def update_v(G):
    """Orthogonal polar factor ``K L'`` of ``G = K diag(lam) L'``.

    Maximizes ``tr(G' V)`` over ``V' V = I``.  When ``G`` is rank deficient
    the singular vectors for zero singular values are replaced by a
    deterministic completion so repeated runs agree bit for bit.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise DimensionError(f"G must be 2-d, got ndim={G.ndim}")
    m, r = G.shape
    if m < r:
        raise DimensionError(f"G has {m} rows but rank {r}; need m >= r")
    if not np.all(np.isfinite(G)):
        raise NumericError("G contains non-finite entries")
    K, lam, Lt = np.linalg.svd(G, full_matrices=False)
    cutoff = max(m, r) * np.finfo(float).eps * (lam[0] if lam.size else 0.0)
    k = int(np.sum(lam > cutoff)) if lam.size and lam[0] > 0 else 0
    if k < r:
        K = _complete_basis(K, k, m, r)
        Lt = _complete_basis(Lt.T, k, r, r).T
    idx = np.argmax(np.abs(K), axis=0)
    sgn = np.sign(K[idx, np.arange(r)])
    sgn[sgn == 0] = 1.0
    return (K * sgn) @ (Lt * sgn[:, None])


class _WSystem:
    """Cholesky-factored normal equations ``(X' diag(w s^2) X + ridge I) W = X' diag(w s) Z V``."""

    def __init__(self, X, scale, weights, ridge=0.0, auto_ridge=False):
        X = np.asarray(X, dtype=float)
        scale = np.asarray(scale, dtype=float)
        weights = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)
        self.X = X
        self.ws = weights * scale
        M = X.T @ ((weights * scale * scale)[:, None] * X)
        p = M.shape[0]
        self.ridge = float(ridge)
        try:
            self._factor(M, p)
        except IllConditionedError:
            if not auto_ridge or self.ridge > 0:
                raise
            delta = AUTO_RIDGE_FACTOR * np.trace(M) / p
            if not delta > 0:
                raise
            logger.warning("W normal equations ill-conditioned; retrying with ridge %.3g", delta)
            self.ridge = float(delta)
            self._factor(M, p)

    def _factor(self, M, p):
        A = M + self.ridge * np.eye(p)
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise IllConditionedError(
                f"normal equations for W are singular or ill-conditioned (condition {cond:.3g}); "
                "supply a positive ridge"
            )
        self.A = A
        self._cho = cho_factor(A)

    def rhs(self, Z, V):
        return self.X.T @ (self.ws[:, None] * Z) @ V

    def solve(self, Z, V):
        return cho_solve(self._cho, self.rhs(Z, V))


def weighted_w_update(X, scale, weights, Z, V, ridge=0.0):
    """``W = (X' diag(w s^2) X + ridge I)^{-1} X' diag(w s) Z V``.

    Raises :class:`IllConditionedError` when the system is singular.
    """
    return _WSystem(X, scale, weights, ridge).solve(Z, V)


def update_w_wmethod(data: TrialData, Z, V, ridge=0.0):
    """``W = (X'AX + ridge I)^{-1} X'TAZV``."""
    return weighted_w_update(data.X, data.t, data.weights(), Z, V, ridge)


def update_w_alearner(data: TrialData, Zdag, V, ridge=0.0):
    """``W = (X'Q^2X + ridge I)^{-1} X'QZV``."""
    return weighted_w_update(data.X, data.scalings(), None, Zdag, V, ridge)


def procrustes_target(X, scale, weights, Z, W):
    """``G = 2 Z' diag(w s) X W`` whose polar factor is the V-update."""
    X = np.asarray(X, dtype=float)
    ws = np.asarray(scale, dtype=float)
    if weights is not None:
        ws = ws * np.asarray(weights, dtype=float)
    return 2.0 * Z.T @ (ws[:, None] * X) @ W


def initial_factors(p, m, r, seed):
    """Seeded start: ``V`` from the QR of a Gaussian m x r matrix, ``W`` small Gaussian."""
    rng = np.random.default_rng(seed)
    V, R = np.linalg.qr(rng.standard_normal((m, r)))
    sgn = np.sign(np.diag(R))
    sgn[sgn == 0] = 1.0
    V = V * sgn
    W = INIT_W_SCALE * rng.standard_normal((p, r))
    return W, V


def mm_fit(X, Y, scale, weights, options: SolverOptions, W0=None, V0=None):
    """Run the MM iteration on the generic scaled/weighted loss.

    Stops once the decrease of the true loss over one iteration drops below
    ``options.tol`` or after ``options.max_iter`` iterations.  The returned
    trace holds the true loss, starting with its value at the initial point.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, p = X.shape
    m = Y.shape[1]
    r = options.rank
    if r > min(p, m):
        raise DimensionError(f"rank {r} exceeds min(p, m) = {min(p, m)}")
    W_init, V_init = initial_factors(p, m, r, options.init_seed)
    W = W_init if W0 is None else np.array(W0, dtype=float)
    V = V_init if V0 is None else np.array(V0, dtype=float)

    system = _WSystem(X, scale, weights, options.ridge, auto_ridge=True)
    prev = objective(X, Y, scale, weights, W, V)
    trace = [prev]
    converged = False
    it = 0
    for it in range(1, options.max_iter + 1):
        state = majorize(X, Y, scale, weights, W, V, iteration=it)
        V = update_v(procrustes_target(X, scale, weights, state.Z, W))
        W = system.solve(state.Z, V)
        cur = objective(X, Y, scale, weights, W, V)
        trace.append(cur)
        if prev - cur < options.tol:
            converged = True
            break
        prev = cur
    return FitResult(
        coeffs=FactorizedCoefficients(W, V),
        objective_trace=np.asarray(trace),
        converged=converged,
        iterations=it,
        ridge=system.ridge,
    )


def fit_r3w(data: TrialData, options: SolverOptions) -> FitResult:
    """Reduced-rank logistic regression under the W-method."""
    scale, weights = scale_and_weights(W_METHOD, data)
    return mm_fit(data.X, data.Y, scale, weights, options)


def fit_r3a(data: TrialData, options: SolverOptions) -> FitResult:
    """Reduced-rank logistic regression under the A-learner."""
    scale, weights = scale_and_weights(A_LEARNER, data)
    return mm_fit(data.X, data.Y, scale, weights, options)


def minimize_w_given_v(X, Y, scale, weights, V, tol=1e-12, max_iter=100000, ridge=0.0):
    """Minimize the loss over ``W`` with ``V`` held fixed (MM on W only).

    Returns ``(W, converged)``.  The subproblem is convex in ``W``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    V = np.asarray(V, dtype=float)
    system = _WSystem(X, scale, weights, ridge)
    W = np.zeros((X.shape[1], V.shape[1]))
    prev = objective(X, Y, scale, weights, W, V)
    for _ in range(max_iter):
        state = majorize(X, Y, scale, weights, W, V)
        W = system.solve(state.Z, V)
        cur = objective(X, Y, scale, weights, W, V)
        if prev - cur < tol:
            return W, True
        prev = cur
    return W, False
