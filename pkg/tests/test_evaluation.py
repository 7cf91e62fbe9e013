import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from multihte.errors import DimensionError, UndefinedRateError
from multihte.evaluation import classification_rates, mse, roc_and_auc, subject_scores, write_roc_csv

vals = st.floats(-100, 100, allow_nan=False)


def loop_mse(A, B):
    total = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            total += (A[i, j] - B[i, j]) ** 2
    return total / A.size


def pairwise_auc(s_hat, s_true):
    """Mann-Whitney form: P(score_pos > score_neg) + 0.5 P(tie)."""
    pos, neg = s_hat[s_true > 0], s_hat[s_true <= 0]
    diff = pos[:, None] - neg[None, :]
    return (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size


class TestMse:
    def test_zero(self):
        H = np.random.default_rng(0).standard_normal((4, 3))
        assert mse(H, H) == 0.0

    def test_constant_shift(self):
        H = np.random.default_rng(1).standard_normal((4, 3))
        assert mse(H + 0.5, H) == pytest.approx(0.25, abs=1e-15)

    def test_loop(self):
        rng = np.random.default_rng(2)
        A, B = rng.standard_normal((6, 5)), rng.standard_normal((6, 5))
        assert mse(A, B) == pytest.approx(loop_mse(A, B), abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        A, B = rng.standard_normal((7, 4)), rng.standard_normal((7, 4))
        r, c = rng.permutation(7), rng.permutation(4)
        assert mse(A[r][:, c], B[r][:, c]) == pytest.approx(mse(A, B), rel=1e-14)

    def test_shape(self):
        with pytest.raises(DimensionError):
            mse(np.zeros((2, 2)), np.zeros((2, 3)))


class TestScores:
    def test_examples(self):
        assert subject_scores([[1.0, -1.0]])[0] == 0.0
        assert not subject_scores(np.zeros((3, 2))).any()

    def test_loop(self):
        H = np.random.default_rng(4).standard_normal((5, 3))
        assert np.allclose(subject_scores(H), [sum(row) for row in H.tolist()], atol=1e-14)


class TestRates:
    def test_perfect(self):
        s = np.array([-2.0, -1.0, 1.0, 3.0])
        assert classification_rates(s, s, 0.0) == (0.0, 0.0, 1.0)

    def test_inverted(self):
        s = np.array([-2.0, -1.0, 1.0, 3.0])
        fpr, fnr, tpr = classification_rates(-s, s, 0.0)
        assert (fpr, fnr, tpr) == (1.0, 1.0, 0.0)

    def test_hand_example(self):
        # truth: subjects 0,1,2 positive; 3,4,5 non-positive (5 is exactly 0)
        s_true = np.array([2.0, 0.5, 1.0, -1.0, -3.0, 0.0])
        s_hat = np.array([1.0, -0.2, 0.0, 0.4, -1.0, 2.0])
        # called positive (> 0): 0, 3, 5 -> false positives 3, 5 of 3 negatives
        # missed positives: 1, 2 (0.0 is not > 0) of 3 positives
        fpr, fnr, tpr = classification_rates(s_hat, s_true, 0.0)
        assert fpr == pytest.approx(2 / 3) and fnr == pytest.approx(2 / 3) and tpr == pytest.approx(1 / 3)

    def test_empty_classes(self):
        with pytest.raises(UndefinedRateError, match="FPR"):
            classification_rates(np.ones(3), np.ones(3))
        with pytest.raises(UndefinedRateError, match="FNR"):
            classification_rates(np.ones(3), -np.ones(3))


class TestRoc:
    s_true = np.array([3.0, -1.0, 2.0, -4.0, 0.5, -0.2])

    def test_perfect_and_inverted(self):
        assert roc_and_auc(self.s_true, self.s_true).auc == 1.0
        assert roc_and_auc(-self.s_true, self.s_true).auc == 0.0

    def test_endpoints_and_monotone(self):
        curve = roc_and_auc(np.random.default_rng(0).standard_normal(6), self.s_true)
        assert curve.points[0] == (0.0, 0.0) and curve.points[-1] == (1.0, 1.0)
        assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
        assert curve.thresholds[0] == np.inf and curve.thresholds[-1] == -np.inf

    def test_ties_move_together(self):
        curve = roc_and_auc(np.zeros(6), self.s_true)
        assert sorted(set(curve.points)) == [(0.0, 0.0), (1.0, 1.0)]
        assert curve.auc == 0.5

    def test_independent_scores(self):
        rng = np.random.default_rng(12)
        auc = roc_and_auc(rng.standard_normal(10_000), rng.standard_normal(10_000)).auc
        assert abs(auc - 0.5) < 0.02

    @settings(max_examples=150, deadline=None)
    @given(st.integers(4, 40).flatmap(lambda n: st.tuples(
        arrays(float, n, elements=st.integers(-5, 5).map(float)), arrays(float, n, elements=vals))))
    def test_properties(self, pair):
        s_hat, s_true = pair
        if not (np.any(s_true > 0) and np.any(s_true <= 0)):
            with pytest.raises(UndefinedRateError):
                roc_and_auc(s_hat, s_true)
            return
        auc = roc_and_auc(s_hat, s_true).auc
        assert auc == pytest.approx(pairwise_auc(s_hat, s_true), abs=1e-12)
        assert roc_and_auc(-s_hat, s_true).auc == pytest.approx(1 - auc, abs=1e-12)
        assert roc_and_auc(np.exp(s_hat / 5), s_true).auc == pytest.approx(auc, abs=1e-12)
        assert roc_and_auc(3 * s_hat - 7, s_true).auc == pytest.approx(auc, abs=1e-12)

    def test_csv(self, tmp_path):
        curve = roc_and_auc(np.array([0.1, 0.4, 0.35, 0.8]), np.array([-1, -1, 1, 1.0]))
        path = tmp_path / "roc.csv"
        write_roc_csv(path, curve)
        lines = path.read_text().splitlines()
        assert lines[0] == "threshold,fpr,tpr"
        assert len(lines) == len(curve.fpr) + 1
        assert lines[1].startswith("inf,0.0,0.0") and lines[-1] == "-inf,1.0,1.0"
