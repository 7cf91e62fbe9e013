"""Trial data model, propensity handling, and the per-subject reweighting terms.

The W-method weights each subject's loss by the inverse probability of the
arm it actually received; the A-learner instead scales the linear predictor
by the centred treatment indicator.  Both quantities live here because every
other module needs them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (
    DataValidationError,
    DegenerateInputError,
    DimensionError,
    EstimationError,
    PositivityError,
)
from .glm import irls_logistic

#: Logistic propensity predictions are clamped to [PROPENSITY_CLAMP, 1 - PROPENSITY_CLAMP]
#: so that inverse-probability weights stay below 1e6.
PROPENSITY_CLAMP = 1e-6

#: Tolerance on column means when validating a centred covariate matrix.
#: Columns already centred to within it are left untouched by :func:`center_columns`.
CENTERING_TOL = 1e-10


def center_columns(X_raw):
    """Subtract column means. Requires at least two rows.

    Columns whose mean is already zero to within ``CENTERING_TOL`` (relative)
    are returned untouched, which makes centering exactly idempotent.
    """
    X_raw = np.asarray(X_raw, dtype=float)
    if X_raw.ndim != 2:
        raise DimensionError(f"expected a 2-d covariate matrix, got ndim={X_raw.ndim}")
    if X_raw.shape[0] < 2:
        raise DegenerateInputError("centering needs at least 2 rows")
    means = X_raw.mean(axis=0)
    scale = np.maximum(1.0, np.max(np.abs(X_raw), axis=0))
    means[np.abs(means) <= CENTERING_TOL * scale] = 0.0
    return X_raw - means


def _check_positivity(pi):
    pi = np.asarray(pi, dtype=float)
    if not np.all((pi > 0.0) & (pi < 1.0)):
        bad = np.flatnonzero(~((pi > 0.0) & (pi < 1.0)))
        raise PositivityError(
            f"propensity scores must lie strictly in (0, 1); violated at indices {bad[:10].tolist()}"
        )
    return pi


def _check_treatment(t):
    t = np.asarray(t, dtype=float)
    if not np.all((t == 1.0) | (t == -1.0)):
        raise DataValidationError("treatment must be coded -1/+1")
    return t


def w_weights(t, pi):
    """Inverse-probability weights ``a_i``: ``1/pi`` if treated, ``1/(1-pi)`` otherwise."""
    t = _check_treatment(t)
    pi = _check_positivity(pi)
    if t.shape != pi.shape:
        raise DimensionError(f"t has shape {t.shape} but pi has shape {pi.shape}")
    return 1.0 / (t * pi + (1.0 - t) / 2.0)


def a_scalings(t, pi):
    """A-learner predictor scalings ``q_i = (t_i + 1)/2 - pi_i``."""
    t = _check_treatment(t)
    pi = _check_positivity(pi)
    if t.shape != pi.shape:
        raise DimensionError(f"t has shape {t.shape} but pi has shape {pi.shape}")
    return (t + 1.0) / 2.0 - pi


def to_pm1(t, treated_level=1):
    """Map a two-level treatment vector to -1/+1 with ``treated_level`` -> +1."""
    t = np.asarray(t)
    levels = np.unique(t)
    if levels.size > 2:
        raise DataValidationError(f"treatment has {levels.size} distinct values; expected 2")
    if treated_level not in levels:
        raise DataValidationError(f"treated level {treated_level!r} not present in treatment")
    return np.where(t == treated_level, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class TrialData:
    """Centred covariates ``X`` (n x p), binary outcomes ``Y`` (n x m),
    treatment ``t`` in {-1, +1} and propensity scores ``pi``.

    Arrays are copied and made read-only on construction.
    """

    X: np.ndarray
    Y: np.ndarray
    t: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Y = np.array(self.Y, dtype=float)
        t = np.array(self.t, dtype=float).ravel()
        pi = np.array(self.pi, dtype=float).ravel()
        if X.ndim != 2 or Y.ndim != 2:
            raise DimensionError("X and Y must be 2-d")
        n = X.shape[0]
        if Y.shape[0] != n or t.shape[0] != n or pi.shape[0] != n:
            raise DimensionError(
                f"row counts disagree: X {X.shape[0]}, Y {Y.shape[0]}, t {t.shape[0]}, pi {pi.shape[0]}"
            )
        if not np.all(np.isfinite(X)):
            raise DataValidationError("X contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(X))) if X.size else 1.0)
        if X.size and np.max(np.abs(X.mean(axis=0))) > CENTERING_TOL * scale:
            raise DataValidationError("X must be column-centred; use TrialData.from_raw")
        if not np.all((Y == 0.0) | (Y == 1.0)):
            raise DataValidationError("Y must be binary 0/1")
        _check_treatment(t)
        _check_positivity(pi)
        for name, arr in (("X", X), ("Y", Y), ("t", t), ("pi", pi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_raw(cls, X_raw, Y, t, pi, treated_level=None):
        """Build from uncentred covariates; ``t`` may be 0/1 or -1/+1.

        With ``treated_level`` given, ``t`` is mapped to -1/+1 around that level.
        A 0/1 vector is mapped with 1 -> +1.
        """
        t = np.asarray(t)
        if treated_level is not None:
            t = to_pm1(t, treated_level)
        elif np.all(np.isin(t, (0, 1))) and not np.all(np.isin(t, (-1, 1))):
            t = to_pm1(t, 1)
        pi = np.broadcast_to(np.asarray(pi, dtype=float), (np.asarray(Y).shape[0],))
        return cls(center_columns(X_raw), Y, t, pi)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.Y.shape[1]

    def weights(self):
        return w_weights(self.t, self.pi)

    def scalings(self):
        return a_scalings(self.t, self.pi)


@dataclass(frozen=True, eq=False)
class FactorizedCoefficients:
    """Coefficient matrix in factored form ``Gamma = W @ V.T`` with ``V.T @ V = I``."""

    W: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        V = np.array(self.V, dtype=float)
        if W.ndim != 2 or V.ndim != 2 or W.shape[1] != V.shape[1]:
            raise DimensionError(f"incompatible factor shapes W{W.shape}, V{V.shape}")
        r = W.shape[1]
        if not 1 <= r <= min(W.shape[0], V.shape[0]):
            raise DimensionError(f"rank {r} outside [1, min(p, m)] for W{W.shape}, V{V.shape}")
        if not np.allclose(V.T @ V, np.eye(r), atol=1e-8, rtol=0.0):
            raise DataValidationError("V must have orthonormal columns")
        W.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "V", V)

    @property
    def r(self):
        return self.W.shape[1]

    @property
    def gamma(self):
        return self.W @ self.V.T

    @classmethod
    def from_gamma(cls, gamma, r):
        """Re-factor a p x m matrix at rank ``r`` via its SVD (``W = U S``, ``V`` = right vectors)."""
        gamma = np.asarray(gamma, dtype=float)
        U, s, Vt = np.linalg.svd(gamma, full_matrices=False)
        U, Vt = U[:, :r], Vt[:r]
        # deterministic signs: largest-magnitude entry of each V column positive
        idx = np.argmax(np.abs(Vt), axis=1)
        sgn = np.sign(Vt[np.arange(r), idx])
        sgn[sgn == 0] = 1.0
        return cls(U * (s[:r] * sgn), (Vt * sgn[:, None]).T)


@dataclass(frozen=True, eq=False)
class PropensityModel:
    """Fitted or fixed propensity model.

    ``kind`` is one of ``"constant"``, ``"empirical"`` or ``"logistic"``.
    ``coefficients`` (logistic only) has the intercept first.
    """

    kind: str
    constant: float | None = None
    coefficients: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind in ("constant", "empirical"):
            if self.constant is None or not 0.0 < self.constant < 1.0:
                raise PositivityError(f"constant propensity must lie in (0, 1), got {self.constant}")
        elif self.kind == "logistic":
            if self.coefficients is None:
                raise DataValidationError("logistic propensity model needs coefficients")
        else:
            raise DataValidationError(f"unknown propensity kind {self.kind!r}")

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if self.kind != "logistic":
            return np.full(X.shape[0], float(self.constant))
        eta = self.coefficients[0] + X @ self.coefficients[1:]
        pi = expit(eta)
        return np.clip(pi, PROPENSITY_CLAMP, 1.0 - PROPENSITY_CLAMP)


def estimate_propensity(X, t, mode="constant", c=0.5, max_iter=100, tol=1e-8):
    """Build a :class:`PropensityModel`.

    ``mode="constant"`` returns ``c`` regardless of the data; ``"empirical"``
    uses the observed treated fraction; ``"logistic"`` fits ``I(t=+1)`` on
    ``[1, X]`` by IRLS.
    """
    if mode == "constant":
        return PropensityModel("constant", constant=float(c))
    t = _check_treatment(t)
    if np.all(t == t[0]):
        raise EstimationError("only one treatment arm present; propensity cannot be estimated")
    if mode == "empirical":
        return PropensityModel("empirical", constant=float(np.mean(t == 1.0)))
    if mode == "logistic":
        X = np.asarray(X, dtype=float)
        design = np.column_stack([np.ones(X.shape[0]), X])
        fit = irls_logistic(design, (t == 1.0).astype(float), max_iter=max_iter, tol=tol)
        return PropensityModel("logistic", coefficients=fit.coef)
    raise DataValidationError(f"unknown propensity mode {mode!r}")
