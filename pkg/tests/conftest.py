import numpy as np
import pytest

from multihte.data import FactorizedCoefficients, TrialData


def make_trial(seed, n=40, p=4, m=3, pi=None, observational=False):
    """Small random trial with centred Gaussian covariates."""
    rng = np.random.default_rng(seed)
    X_raw = rng.standard_normal((n, p))
    if pi is None:
        pi = 1.0 / (1.0 + np.exp(-0.8 * X_raw[:, 0])) if observational else rng.uniform(0.2, 0.8, n)
    pi = np.broadcast_to(np.asarray(pi, dtype=float), (n,))
    t = np.where(rng.random(n) < pi, 1.0, -1.0)
    Y = (rng.random((n, m)) < 0.5).astype(float)
    return TrialData.from_raw(X_raw, Y, t, pi)


def make_coeffs(seed, p, m, r, scale=0.5):
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((m, r)))
    return FactorizedCoefficients(scale * rng.standard_normal((p, r)), V)


@pytest.fixture
def trial():
    return make_trial(0)
