from datetime import date, timedelta

import numpy as np
import pytest

from oracles import finite_difference, mlp_loss
from portfolio_engine.clustering import ClusterAssignment
from portfolio_engine.core_data import MacroSeries, ReturnSeries
from portfolio_engine.errors import MissingMacroCoverage, TooFewSamples, WindowTooLarge
from portfolio_engine.ranker import (
    FeatureVector,
    Mlp,
    TrainConfig,
    _sgd_epoch,
    backprop_gradient,
    build_training_set,
    forward,
    init_mlp,
    latest_features,
    rank_predictions,
    rank_within_clusters,
    samples_to_arrays,
    standardize,
    train,
)

D0 = date(2024, 1, 1)
MACRO = MacroSeries((date(2023, 12, 1), date(2024, 1, 3)), (0.02, 0.03), (0.05, 0.04))


def series(firm, values):
    return ReturnSeries(firm, tuple(D0 + timedelta(days=i) for i in range(len(values))), tuple(values))


def flat_grad(g):
    return np.concatenate([g.W1.ravel(), g.b1, g.W2, [g.b2]])


class TestTrainingSet:
    def test_window_two(self):
        s = build_training_set([series("A", [0.01, 0.03, 0.02, 0.04])], MACRO, {"A": 0.5}, window=2)
        assert [x.target for x in s] == [0.02, 0.04]
        first = s[0].features
        assert first.trailing_mean_return == pytest.approx(0.02)
        assert first.trailing_volatility == pytest.approx(0.01)
        assert first.sentiment_score == 0.5
        # macro: last observation at or before the feature date
        assert (first.gdp_growth, first.interest_rate) == (0.02, 0.05)
        assert (s[1].features.gdp_growth, s[1].features.interest_rate) == (0.03, 0.04)

    def test_exactly_window_returns(self):
        assert build_training_set([series("A", [0.01, 0.02])], MACRO, {}, window=2) == []

    def test_window_too_large(self):
        with pytest.raises(WindowTooLarge):
            build_training_set([series("A", [0.01])], MACRO, {}, window=2)

    def test_constant_returns(self):
        s = build_training_set([series("A", [0.01] * 6)], MACRO, {}, window=3)
        assert all(x.features.trailing_volatility == 0 for x in s)

    def test_ordered_by_firm_then_date(self):
        s = build_training_set({"B": series("B", [0.1] * 4), "A": series("A", [0.2] * 4)}, MACRO, {}, window=1)
        assert [(x.firm_id, x.date.day) for x in s] == [("A", 1), ("A", 2), ("A", 3), ("B", 1), ("B", 2), ("B", 3)]

    def test_macro_coverage(self):
        late = MacroSeries((date(2025, 1, 1),), (0.0,), (0.0,))
        with pytest.raises(MissingMacroCoverage):
            build_training_set([series("A", [0.01] * 4)], late, {}, window=2)

    def test_latest_features(self):
        f = latest_features([series("A", [0.01, 0.03, 0.02, 0.04])], MACRO, {"A": -0.1}, window=2)
        assert f["A"].trailing_mean_return == pytest.approx(0.03)
        assert f["A"].sentiment_score == -0.1


class TestStandardize:
    def test_identical_rows(self):
        Z, stats = standardize(np.tile([1.0, 2, 3, 4, 5], (4, 1)))
        assert np.all(Z == 0) and np.all(stats.scale == 1)

    def test_two_values(self):
        X = np.zeros((2, 5))
        X[:, 0] = [1, 3]
        Z, _ = standardize(X)
        np.testing.assert_allclose(Z[:, 0], [-1, 1])

    def test_stored_stats_reproduce(self):
        X = np.random.default_rng(0).normal(size=(20, 5))
        Z, stats = standardize(X)
        np.testing.assert_array_equal(stats.apply(X), Z)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            standardize(np.zeros((1, 5)))

    def test_accepts_samples(self):
        s = build_training_set([series("A", [0.01, 0.03, 0.02, 0.04, 0.0])], MACRO, {}, window=2)
        Z, _ = standardize(s)
        assert Z.shape == (3, 5)


class TestForward:
    def test_zero_network(self):
        mlp = Mlp(np.zeros((3, 5)), np.zeros(3), np.zeros(3), 0.0)
        assert forward(mlp, np.arange(5.0)) == 0.0

    def test_hand_evaluation(self):
        mlp = Mlp([[1, 0, 0, 0, 0]], [0.0], [2.0], 0.5)
        assert forward(mlp, np.zeros(5)) == 0.5

    def test_zero_column_invariance(self):
        rng = np.random.default_rng(1)
        W1 = rng.normal(size=(4, 5))
        W1[:, 3] = 0
        mlp = Mlp(W1, rng.normal(size=4), rng.normal(size=4), 0.1)
        x = rng.normal(size=5)
        y = x.copy()
        y[3] = 99.0
        assert forward(mlp, x) == forward(mlp, y)

    def test_feature_vector_input(self):
        mlp = init_mlp(4, np.random.default_rng(0))
        fv = FeatureVector(0.1, 0.2, 0.3, 0.4, 0.5)
        assert forward(mlp, fv) == pytest.approx(mlp.predict(fv.as_array()[None])[0], abs=1e-15)


class TestGradient:
    def test_zero_residual(self):
        mlp = init_mlp(3, np.random.default_rng(2))
        x = np.ones(5)
        g = backprop_gradient(mlp, x, forward(mlp, x))
        assert np.all(flat_grad(g) == 0)

    def test_bias_gradient_is_residual(self):
        mlp = init_mlp(3, np.random.default_rng(3))
        x = np.ones(5)
        assert backprop_gradient(mlp, x, 0.7).b2 == pytest.approx(forward(mlp, x) - 0.7, abs=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        h = int(rng.integers(1, 10))
        mlp = Mlp(rng.normal(size=(h, 5)), rng.normal(size=h), rng.normal(size=h), rng.normal())
        x, t = rng.normal(size=5), rng.normal()
        num = finite_difference(lambda th: mlp_loss(th, x, t, h), mlp.flat(), dtype=np.longdouble)
        ana = flat_grad(backprop_gradient(mlp, x, t))
        rel = np.abs(ana - num) / np.maximum(np.maximum(np.abs(ana), np.abs(num)), 1e-8)
        assert rel.max() < 1e-4

    def test_compiled_step_matches_gradient(self):
        rng = np.random.default_rng(4)
        mlp = init_mlp(6, rng)
        x, t, lr = rng.normal(size=5), 0.3, 0.05
        g = backprop_gradient(mlp, x, t)
        W1, b1, W2, b2 = mlp.W1.copy(), mlp.b1.copy(), mlp.W2.copy(), np.array([mlp.b2])
        _sgd_epoch(W1, b1, W2, b2, x[None, :], np.array([t]), np.array([0]), lr)
        np.testing.assert_allclose(W1, mlp.W1 - lr * g.W1, atol=1e-14)
        np.testing.assert_allclose(b1, mlp.b1 - lr * g.b1, atol=1e-14)
        np.testing.assert_allclose(W2, mlp.W2 - lr * g.W2, atol=1e-14)
        assert b2[0] == pytest.approx(mlp.b2 - lr * g.b2, abs=1e-14)


def linear_set(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 5))
    y = 0.3 * X[:, 0] - 0.1 * X[:, 1] + rng.normal(0, 0.001, n)
    return X, y


class TestTrain:
    def test_zero_target_descends(self):
        X = np.random.default_rng(5).normal(size=(40, 5))
        res = train(X, np.zeros(40), TrainConfig(epochs=50, seed=1))
        final = np.mean(res.mlp.predict(X[:32]) ** 2)
        assert final <= res.train_mse[0]

    def test_fits_linear_target(self):
        X, y = linear_set()
        res = train(X, y, TrainConfig(seed=3))
        Xt, yt = X[:160], y[:160]
        mse = np.mean((res.mlp.predict(Xt) - yt) ** 2)
        assert mse <= 0.1 * np.var(yt)

    def test_deterministic(self):
        X, y = linear_set(60, seed=1)
        a = train(X, y, TrainConfig(epochs=30, seed=9))
        b = train(X, y, TrainConfig(epochs=30, seed=9))
        assert np.array_equal(a.mlp.flat(), b.mlp.flat())
        assert a.train_mse == b.train_mse

    def test_snapshot_is_best_validation_epoch(self):
        X, y = linear_set(60, seed=2)
        res = train(X, y, TrainConfig(epochs=40, seed=0))
        assert res.val_mse[res.best_epoch] == min(res.val_mse[1:])
        assert np.mean((res.mlp.predict(X[48:]) - y[48:]) ** 2) == pytest.approx(res.val_mse[res.best_epoch])

    def test_no_validation(self):
        X, y = linear_set(30, seed=2)
        res = train(X, y, TrainConfig(epochs=5, validation_fraction=0.0))
        assert res.train_mse[res.best_epoch] == min(res.train_mse[1:])

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            train(np.zeros((9, 5)), np.zeros(9))

    @pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(epochs=0), dict(hidden_width=257), dict(validation_fraction=1.0)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)


CLUSTERS = ClusterAssignment("kmeans", {"A": 0, "B": 0, "C": 1, "D": 1, "E": 1}, 2)


class TestRanking:
    def test_argmax(self):
        c = ClusterAssignment("kmeans", {"A": 0, "B": 0}, 1)
        ranking, cand = rank_predictions({"A": 0.02, "B": 0.05}, c, 1)
        assert cand == ["B"]
        assert ranking.clusters == ((("B", 0.05), ("A", 0.02)),)

    def test_one_firm_per_cluster(self):
        c = ClusterAssignment("kmeans", {"A": 0, "B": 1, "C": 2}, 3)
        _, cand = rank_predictions({"A": 0.0, "B": 1.0, "C": -1.0}, c, 1)
        assert cand == ["A", "B", "C"]

    def test_ties_by_firm_id(self):
        _, cand = rank_predictions({f: 0.1 for f in "ABCDE"}, CLUSTERS, 1)
        assert cand == ["A", "C"]

    @pytest.mark.parametrize("m", [1, 2, 3, 5])
    def test_candidate_count(self, m):
        _, cand = rank_predictions({f: i for i, f in enumerate("ABCDE")}, CLUSTERS, m)
        assert len(cand) == min(m, 2) + min(m, 3)

    def test_monotone_transform_invariance(self):
        preds = {f: float(v) for f, v in zip("ABCDE", np.random.default_rng(0).normal(size=5))}
        r1, c1 = rank_predictions(preds, CLUSTERS, 2)
        r2, c2 = rank_predictions({f: np.exp(3 * v) + 1 for f, v in preds.items()}, CLUSTERS, 2)
        assert c1 == c2
        assert [[f for f, _ in cl] for cl in r1.clusters] == [[f for f, _ in cl] for cl in r2.clusters]

    def test_rank_within_clusters_uses_standardized_features(self):
        rng = np.random.default_rng(1)
        latest = {f: FeatureVector(*rng.normal(size=5)) for f in "ABCDE"}
        X = np.array([latest[f].as_array() for f in sorted(latest)])
        _, stats = standardize(X)
        mlp = init_mlp(4, rng)
        ranking, cand = rank_within_clusters(mlp, stats, latest, CLUSTERS, 1)
        preds = {f: forward(mlp, stats.apply(latest[f].as_array())) for f in latest}
        assert cand == rank_predictions(preds, CLUSTERS, 1)[1]
        for cl in ranking.clusters:
            for f, p in cl:
                assert p == pytest.approx(preds[f], abs=1e-12)


def test_samples_to_arrays_shapes():
    s = build_training_set([series("A", [0.01, 0.03, 0.02, 0.04])], MACRO, {}, window=2)
    X, y = samples_to_arrays(s)
    assert X.shape == (2, 5) and y.tolist() == [0.02, 0.04]
