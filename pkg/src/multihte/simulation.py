"""Data-generating process for the simulation study.

Outcomes are thresholded latent responses::

    Y* = (X D) * (X D) + T X W V' + E,      Y = 1{Y* > 0}

with equicorrelated Gaussian covariates and errors, a quadratic main effect
that the linear estimators misspecify, and a rank-r treatment effect.
"""
from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass, replace

import numpy as np

from .data import TrialData, center_columns
from .errors import DataValidationError, DimensionError

RCT = "rct"
OBSERVATIONAL = "observational"
ASSIGNMENTS = (RCT, OBSERVATIONAL)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    p: int
    m: int
    r: int
    rho1: float = 0.0
    rho2: float = 0.0
    assignment: str = RCT
    replications: int = 100
    master_seed: int = 0
    freeze_truth: bool = False

    def __post_init__(self):
        if self.n < 2 or self.p < 1 or self.m < 1:
            raise DataValidationError(f"invalid sizes n={self.n}, p={self.p}, m={self.m}")
        if not 1 <= self.r <= min(self.p, self.m):
            raise DataValidationError(f"rank r={self.r} must lie in [1, min(p, m)={min(self.p, self.m)}]")
        for name in ("rho1", "rho2"):
            rho = getattr(self, name)
            if not 0.0 <= rho < 1.0:
                raise DataValidationError(f"{name}={rho} outside [0, 1)")
        if self.assignment not in ASSIGNMENTS:
            raise DataValidationError(f"assignment must be one of {ASSIGNMENTS}, got {self.assignment!r}")
        if self.replications < 1:
            raise DataValidationError("replications must be >= 1")

    @property
    def scenario_id(self):
        return (
            f"n{self.n}_p{self.p}_m{self.m}_r{self.r}"
            f"_rho1-{self.rho1:.4g}_rho2-{self.rho2:.4g}_{self.assignment}"
        )


def published_grid(assignment=RCT, replications=100, master_seed=0):
    """All cells of the published design; ``r = 5`` is paired with ``m = 10`` only."""
    rhos = (0.0, 1 / 3, 2 / 3)
    cells = []
    for n, p, (m, r), rho1, rho2 in itertools.product(
        (100, 300, 500), (10, 50), ((5, 3), (10, 3), (10, 5)), rhos, rhos
    ):
        cells.append(ScenarioConfig(n, p, m, r, rho1, rho2, assignment, replications, master_seed))
    return cells


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    data: TrialData
    D: np.ndarray
    W_true: np.ndarray
    V_true: np.ndarray
    E: np.ndarray
    H_true: np.ndarray
    X_raw: np.ndarray

    def latent(self):
        """Rebuild ``Y*`` from the stored components."""
        X = self.data.X
        XD = X @ self.D
        return XD * XD + self.data.t[:, None] * self.H_true + self.E


def equicorrelation_cov(dim, rho):
    """``(1 - rho) I + rho 1 1'``."""
    if not 0.0 <= rho < 1.0:
        raise DataValidationError(f"rho={rho} outside [0, 1)")
    if dim < 1:
        raise DimensionError("dim must be >= 1")
    return (1.0 - rho) * np.eye(dim) + rho * np.ones((dim, dim))


def sample_equicorrelated(rng, size, dim, rho):
    """Rows iid ``N(0, equicorrelation_cov(dim, rho))`` via the lower Cholesky factor."""
    L = np.linalg.cholesky(equicorrelation_cov(dim, rho))
    return rng.standard_normal((size, dim)) @ L.T


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_truth(p, m, r, seed):
    """Draw ``(D, W_true, V_true)``; ``V_true`` is the sign-normalised Q factor of a Gaussian."""
    if not 1 <= r <= min(p, m):
        raise DimensionError(f"rank r={r} must lie in [1, min(p, m)]")
    rng = _rng(seed)
    D = rng.standard_normal((p, m))
    W = rng.standard_normal((p, r))
    Q, R = np.linalg.qr(rng.standard_normal((m, r)))
    sgn = np.sign(np.diag(R))
    sgn[sgn == 0] = 1.0
    return D, W, Q * sgn


def observational_propensity(x1):
    """``P(T = 1 | x) = 1 / (1 + exp(1 - x_1))``."""
    return 1.0 / (1.0 + np.exp(1.0 - np.asarray(x1, dtype=float)))


def assign_treatment(X, mode, seed):
    """Draw -1/+1 treatment; returns ``(t, pi)`` with ``pi`` the true assignment probability."""
    X = np.asarray(X, dtype=float)
    rng = _rng(seed)
    n = X.shape[0]
    if mode == RCT:
        pi = np.full(n, 0.5)
    elif mode == OBSERVATIONAL:
        if X.ndim != 2 or X.shape[1] < 1:
            raise DimensionError("observational assignment needs at least one covariate")
        pi = observational_propensity(X[:, 0])
    else:
        raise DataValidationError(f"unknown assignment mode {mode!r}")
    t = np.where(rng.random(n) < pi, 1.0, -1.0)
    return t, pi


def replication_seed(config: ScenarioConfig, replication_index):
    """Independent stream per (master seed, cell, replication)."""
    cell_key = zlib.crc32(config.scenario_id.encode("utf-8"))
    return np.random.SeedSequence(config.master_seed, spawn_key=(cell_key, int(replication_index)))


def generate_scenario(config: ScenarioConfig, replication_index) -> SimulatedDataset:
    ss = replication_seed(config, replication_index)
    truth_ss, x_ss, t_ss, e_ss = ss.spawn(4)
    if config.freeze_truth:
        truth_ss = replication_seed(config, 0).spawn(1)[0]
    D, W, V = sample_truth(config.p, config.m, config.r, np.random.default_rng(truth_ss))
    X_raw = sample_equicorrelated(np.random.default_rng(x_ss), config.n, config.p, config.rho1)
    t, pi = assign_treatment(X_raw, config.assignment, np.random.default_rng(t_ss))
    E = sample_equicorrelated(np.random.default_rng(e_ss), config.n, config.m, config.rho2)
    X = center_columns(X_raw)
    H = X @ W @ V.T
    XD = X @ D
    Y = (XD * XD + t[:, None] * H + E > 0).astype(float)
    return SimulatedDataset(TrialData(X, Y, t, pi), D, W, V, E, H, X_raw)


def fit_seed(config: ScenarioConfig, replication_index):
    """Integer seed for solver initialisation, derived from the replication stream."""
    ss = replication_seed(config, replication_index)
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def with_replications(config: ScenarioConfig, replications):
    return replace(config, replications=replications)
