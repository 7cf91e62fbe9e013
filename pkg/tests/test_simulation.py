import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multihte.errors import DataValidationError
from multihte.simulation import (
    OBSERVATIONAL,
    RCT,
    ScenarioConfig,
    assign_treatment,
    equicorrelation_cov,
    generate_scenario,
    published_grid,
    sample_equicorrelated,
    sample_truth,
    with_replications,
)


def mean_offdiag_corr(X):
    C = np.corrcoef(X, rowvar=False)
    return C[~np.eye(C.shape[0], dtype=bool)].mean()


class TestEquicorrelation:
    def test_identity(self):
        assert np.array_equal(equicorrelation_cov(4, 0.0), np.eye(4))

    def test_two_by_two(self):
        assert np.allclose(equicorrelation_cov(2, 1 / 3), [[1, 1 / 3], [1 / 3, 1]], atol=0)

    def test_smallest_eigenvalue(self):
        assert np.linalg.eigvalsh(equicorrelation_cov(10, 2 / 3)).min() == pytest.approx(1 / 3, abs=1e-12)

    @pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
    def test_range(self, rho):
        with pytest.raises(DataValidationError):
            equicorrelation_cov(3, rho)

    def test_sample_correlation(self):
        X = sample_equicorrelated(np.random.default_rng(0), 10_000, 10, 2 / 3)
        assert abs(mean_offdiag_corr(X) - 2 / 3) < 0.02


class TestTruth:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6).flatmap(
        lambda r: st.tuples(st.just(r), st.integers(r, 12), st.integers(r, 12))))
    def test_orthonormal_and_deterministic(self, seed, dims):
        r, p, m = dims
        D, W, V = sample_truth(p, m, r, seed)
        assert D.shape == (p, m) and W.shape == (p, r) and V.shape == (m, r)
        assert np.allclose(V.T @ V, np.eye(r), atol=1e-12)
        D2, W2, V2 = sample_truth(p, m, r, seed)
        assert np.array_equal(D, D2) and np.array_equal(W, W2) and np.array_equal(V, V2)

    def test_moments(self):
        D, _, _ = sample_truth(400, 250, 1, 5)
        assert abs(D.mean()) < 0.02 and abs(D.var() - 1) < 0.02


class TestAssignment:
    def test_rct_balance(self):
        t, pi = assign_treatment(np.zeros((100_000, 1)), RCT, 1)
        assert abs(np.mean(t == 1) - 0.5) < 0.005 and np.all(pi == 0.5)

    def test_observational_values(self):
        _, pi = assign_treatment(np.array([[1.0], [0.0]]), OBSERVATIONAL, 0)
        assert pi[0] == 0.5
        assert pi[1] == pytest.approx(1 / (1 + np.e), abs=1e-15)
        assert pi[1] == pytest.approx(0.2689, abs=1e-4)

    def test_unknown_mode(self):
        with pytest.raises(DataValidationError):
            assign_treatment(np.zeros((2, 1)), "cluster", 0)


class TestScenario:
    cfg = ScenarioConfig(200, 6, 5, 3, 1 / 3, 2 / 3, OBSERVATIONAL, master_seed=4)

    def test_outputs(self):
        ds = generate_scenario(self.cfg, 0)
        assert set(np.unique(ds.data.Y)) <= {0.0, 1.0}
        assert np.linalg.matrix_rank(ds.H_true) <= 3
        assert np.allclose(ds.V_true.T @ ds.V_true, np.eye(3), atol=1e-12)
        assert np.array_equal(ds.data.Y, (ds.latent() > 0).astype(float))
        assert np.allclose(ds.H_true, ds.data.X @ ds.W_true @ ds.V_true.T, atol=0)
        assert np.allclose(ds.data.X, ds.X_raw - ds.X_raw.mean(axis=0), atol=1e-14)
        assert np.array_equal(ds.data.pi, 1 / (1 + np.exp(1 - ds.X_raw[:, 0])))

    def test_reproducible_and_independent(self):
        a, b = generate_scenario(self.cfg, 3), generate_scenario(self.cfg, 3)
        assert np.array_equal(a.data.Y, b.data.Y) and np.array_equal(a.E, b.E)
        c = generate_scenario(self.cfg, 4)
        assert not np.array_equal(a.data.X, c.data.X)
        assert not np.array_equal(a.W_true, c.W_true)
        other = generate_scenario(ScenarioConfig(200, 6, 5, 3, 1 / 3, 2 / 3, OBSERVATIONAL, master_seed=5), 3)
        assert not np.array_equal(a.data.X, other.data.X)

    def test_replication_count_does_not_change_data(self):
        a = generate_scenario(self.cfg, 2)
        b = generate_scenario(with_replications(self.cfg, 7), 2)
        assert np.array_equal(a.data.Y, b.data.Y)

    def test_freeze_truth(self):
        from dataclasses import replace

        frozen = replace(self.cfg, freeze_truth=True)
        a, b = generate_scenario(frozen, 0), generate_scenario(frozen, 5)
        assert np.array_equal(a.W_true, b.W_true) and np.array_equal(a.D, b.D)
        assert not np.array_equal(a.data.X, b.data.X)

    def test_sign_symmetry(self):
        ds = generate_scenario(self.cfg, 1)
        H_neg = ds.data.X @ (-ds.W_true) @ (-ds.V_true).T
        XD = ds.data.X @ ds.D
        Y_neg = (XD * XD + ds.data.t[:, None] * H_neg + ds.E > 0).astype(float)
        assert np.array_equal(H_neg, ds.H_true) and np.array_equal(Y_neg, ds.data.Y)

    def test_null_model_outcomes_are_fair_coins(self):
        rng = np.random.default_rng(8)
        E = sample_equicorrelated(rng, 10_000, 4, 0.0)
        Y = (E > 0).astype(float)
        assert np.abs(Y.mean(axis=0) - 0.5).max() < 0.02

    @pytest.mark.parametrize("kwargs", [
        {"r": 6}, {"rho1": 1.0}, {"rho2": -0.2}, {"assignment": "x"}, {"n": 1}, {"replications": 0},
    ])
    def test_validation(self, kwargs):
        base = dict(n=50, p=5, m=5, r=2)
        base.update(kwargs)
        with pytest.raises(DataValidationError):
            ScenarioConfig(**base)

    def test_scenario_id(self):
        assert ScenarioConfig(500, 10, 10, 3).scenario_id == "n500_p10_m10_r3_rho1-0_rho2-0_rct"


def test_published_grid():
    cells = published_grid()
    assert len(cells) == 3 * 2 * 3 * 3 * 3
    assert all(c.m == 10 for c in cells if c.r == 5)
    assert len({c.scenario_id for c in cells}) == len(cells)
