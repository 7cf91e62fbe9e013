import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import expit

from multihte.errors import ConvergenceError, EstimationError
from multihte.glm import irls_logistic


def test_matches_generic_likelihood_maximizer():
    rng = np.random.default_rng(0)
    design = np.column_stack([np.ones(300), rng.standard_normal((300, 2))])
    y = (rng.random(300) < expit(design @ [0.2, 1.0, -0.5])).astype(float)

    def nll(b):
        eta = design @ b
        return np.sum(np.logaddexp(0, eta) - y * eta)

    ref = minimize(nll, np.zeros(3), method="BFGS", options={"gtol": 1e-10}).x
    fit = irls_logistic(design, y)
    assert np.allclose(fit.coef, ref, atol=1e-5)
    assert np.all(fit.stderr > 0) and fit.iterations < 20


def test_constant_response():
    with pytest.raises(EstimationError):
        irls_logistic(np.ones((4, 1)), np.zeros(4))


def test_separation():
    design = np.column_stack([np.ones(4), [-2.0, -1.0, 1.0, 2.0]])
    with pytest.raises(ConvergenceError):
        irls_logistic(design, np.array([0.0, 0.0, 1.0, 1.0]), max_iter=50)
