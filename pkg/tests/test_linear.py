import numpy as np
import pytest
import scipy.sparse as sp

from oracles import central_difference, joint_threshold_search, logistic_objective as ref_objective
from thaiseq.errors import ConfigError, FitError, ShapeError
from thaiseq.linear import (THRESHOLD_GRID, ClassifierConfig, LinearModel, ThresholdSet, fit_binary, grid_search,
                            logistic_objective, macro_f1_multilabel, micro_f1, predict, predict_proba,
                            search_thresholds, train_logistic, train_nbsvm)


def random_problem(seed, n=20, d=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    y = (X @ w + rng.normal(scale=0.5, size=n) > 0).astype(float)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return X, y


class TestConfig:
    def test_bad_penalty(self):
        with pytest.raises(ConfigError):
            ClassifierConfig("l3")

    def test_bad_C(self):
        with pytest.raises(ConfigError):
            ClassifierConfig("l2", 0.0)


class TestObjective:
    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_difference(self, seed):
        X, y = random_problem(seed)
        fn, _ = logistic_objective(sp.csr_matrix(X), y, "l2", 2.0)
        theta = np.random.default_rng(seed).normal(size=X.shape[1] + 1)
        _, g = fn(theta)
        num = central_difference(lambda t: fn(t)[0], theta)
        np.testing.assert_allclose(g, num, rtol=1e-5, atol=1e-8)

    def test_value_matches_reference(self):
        X, y = random_problem(7)
        fn, _ = logistic_objective(sp.csr_matrix(X), y, "l2", 3.0)
        theta = np.arange(6, dtype=float) / 10
        assert fn(theta)[0] == pytest.approx(ref_objective(X, y, theta[:-1], theta[-1], "l2", 3.0), rel=1e-12)


class TestFit:
    def test_separable_two_points(self):
        X = sp.csr_matrix(np.array([[1.0], [-1.0]]))
        w, b, _ = fit_binary(X, np.array([1.0, 0.0]), ClassifierConfig("l2", 1.0))
        assert w[0] + b > 0 and -w[0] + b < 0

    def test_stationary_point(self):
        X, y = random_problem(11)
        w, b, res = fit_binary(sp.csr_matrix(X), y, ClassifierConfig("l2", 1.0))
        g = central_difference(lambda t: ref_objective(X, y, t[:-1], t[-1], "l2", 1.0), np.append(w, b))
        assert res.converged
        assert np.max(np.abs(g)) < 1e-4

    def test_not_worse_than_zero(self):
        for penalty in ("l1", "l2"):
            X, y = random_problem(12)
            w, b, _ = fit_binary(sp.csr_matrix(X), y, ClassifierConfig(penalty, 1.0))
            assert ref_objective(X, y, w, b, penalty, 1.0) <= ref_objective(X, y, np.zeros(5), 0.0, penalty, 1.0)

    def test_l1_sparser_than_l2(self):
        X, y = random_problem(13, n=40, d=10)
        w1, _, _ = fit_binary(sp.csr_matrix(X), y, ClassifierConfig("l1", 0.01))
        w2, _, _ = fit_binary(sp.csr_matrix(X), y, ClassifierConfig("l2", 0.01))
        assert np.sum(w1 == 0) > np.sum(w2 == 0)

    def test_heavy_regularisation_predicts_prior(self):
        X, _ = random_problem(14, n=30)
        y = np.array(["a"] * 20 + ["b"] * 10)
        m = train_logistic(sp.csr_matrix(X), y, ClassifierConfig("l2", 1e-8))
        assert np.max(np.abs(m.weights)) < 1e-5
        assert set(predict(m, sp.csr_matrix(X))) == {"a"}

    def test_single_class(self):
        with pytest.raises(FitError):
            train_logistic(sp.csr_matrix(np.eye(3)), ["a", "a", "a"], ClassifierConfig())


class TestPredict:
    def test_zero_model_half(self):
        m = LinearModel(["a", "b"], np.zeros((2, 3)), np.zeros(2))
        np.testing.assert_array_equal(predict_proba(m, sp.csr_matrix(np.ones((2, 3)))), 0.5)

    def test_saturation(self):
        m = LinearModel(["x"], np.zeros((1, 1)), np.array([30.0]), multilabel=True)
        assert predict_proba(m, sp.csr_matrix(np.ones((1, 1))))[0, 0] > 1 - 1e-9

    def test_scalar_sigmoid(self):
        m = LinearModel(["x"], np.array([[0.7]]), np.array([-0.2]), multilabel=True)
        p = predict_proba(m, sp.csr_matrix(np.array([[2.0]])))[0, 0]
        assert p == pytest.approx(1 / (1 + np.exp(-(0.7 * 2 - 0.2))), rel=1e-14)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        m = LinearModel(["a", "b", "c"], rng.normal(size=(3, 4)), rng.normal(size=3))
        P = predict_proba(m, sp.csr_matrix(rng.normal(size=(5, 4))))
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)

    def test_shape_error(self):
        m = LinearModel(["a", "b"], np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(ShapeError):
            predict_proba(m, sp.csr_matrix(np.ones((1, 4))))

    def test_round_trip(self):
        X, y = random_problem(3)
        m = train_nbsvm(sp.csr_matrix(np.abs(X)), y.astype(int).astype(str), ClassifierConfig())
        again = LinearModel.from_dict(m.to_dict())
        Xs = sp.csr_matrix(np.abs(X))
        assert np.array_equal(predict_proba(m, Xs), predict_proba(again, Xs))


class TestGrid:
    def _data(self):
        X = sp.csr_matrix(np.array([[10.0, 0.2], [10.0, 0.5], [0.0, 0.3], [0.0, 0.7]] * 3))
        y = ["pos", "pos", "neg", "neg"] * 3
        return X, y

    def test_single_cell(self):
        X, y = self._data()
        cells = grid_search((X, y), (X, y), ["l2"], [1.0])
        assert len(cells) == 1 and cells[0].config.C == 1.0

    def test_tie_break(self):
        X, y = self._data()
        cells = grid_search((X, y), (X, y))
        assert [c.score for c in cells] == [1.0] * 8
        assert [(c.config.penalty, c.config.C) for c in cells] == \
            [(p, C) for p in ("l1", "l2") for C in (1.0, 2.0, 3.0, 4.0)]

    def test_failed_cell_kept(self):
        X, y = self._data()
        cells = grid_search((X, ["pos"] * 12), (X, y), ["l2"], [1.0, 2.0])
        assert all(c.failed for c in cells)

    def test_label_permutation_invariant(self):
        X, y = self._data()
        swap = {"pos": "neg", "neg": "pos"}
        a = grid_search((X, y), (X, y))
        b = grid_search((X, [swap[v] for v in y]), (X, [swap[v] for v in y]))
        assert [(c.config, c.score) for c in a] == [(c.config, c.score) for c in b]


class TestThresholds:
    def test_hand_example(self):
        ts = search_thresholds(np.array([[0.2], [0.6], [0.7]]), np.array([[0], [1], [1]]))
        assert ts.values[0] == 0.21

    def test_perfect_proba_lowest(self):
        ts = search_thresholds(np.array([[0.0], [1.0]]), np.array([[0], [1]]))
        assert ts.values[0] == 0.01

    def test_no_positive_flagged(self):
        ts = search_thresholds(np.array([[0.3, 0.2], [0.9, 0.1]]), np.array([[1, 0], [0, 0]]))
        assert ts.values[1] == 0.5 and ts.flagged == [1]

    def test_joint_oracle_and_grid(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            P = rng.random((15, 2))
            Y = (rng.random((15, 2)) < 0.5).astype(int)
            Y[0] = 1
            ts = search_thresholds(P, Y)
            (t1, t2), best = joint_threshold_search(P, Y)
            assert tuple(ts.values) == (t1, t2)
            assert set(ts.values) <= set(THRESHOLD_GRID)
            f_half = macro_f1_multilabel(Y, P >= 0.5)
            assert macro_f1_multilabel(Y, P >= ts.values) >= f_half

    def test_round_trip(self):
        ts = ThresholdSet(np.array([0.1, 0.5]), [1])
        again = ThresholdSet.from_dict(ts.to_dict())
        assert np.array_equal(again.values, ts.values) and again.flagged == [1]


def test_micro_f1_is_accuracy():
    assert micro_f1(["a", "b", "c", "a"], ["a", "c", "c", "b"]) == 0.5


def test_multilabel_nbsvm_with_tuned_thresholds():
    from toydata import multilabel_docs
    from thaiseq.features import fit_vectorizer, transform
    from thaiseq.segment import build_lexicon, tokenize
    from toydata import WORDS
    lex = build_lexicon(WORDS)
    docs = multilabel_docs(60)
    toks = [tokenize(t, lex) for t, _ in docs]
    Y = np.array([[int("food" in ls), int("price" in ls)] for _, ls in docs])
    vec = fit_vectorizer(toks, min_df=2)
    X = transform(vec, toks)
    m = train_nbsvm(X, Y, ClassifierConfig("l2", 4.0), classes=["food", "price"], multilabel=True)
    ts = search_thresholds(predict_proba(m, X), Y)
    assert macro_f1_multilabel(Y, predict(m, X, ts)) == 1.0
