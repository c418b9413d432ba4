import os

import numpy as np
import pytest

from bodycomp.baselines import (
    KINDS,
    BaselineError,
    BaselineModel,
    FeatureMatrix,
    feature_matrix,
    fit_baseline,
    fit_gradient_boost,
    fit_random_forest,
    fit_svr,
    fit_tree,
    load_baseline,
    predict,
    save_baseline,
)
from bodycomp.preprocess import NormStats
from tree_oracle import as_nested, oracle_tree, walk_predict


def random_instance(rng, n=10, d=4, integer=False):
    if integer:
        X = rng.integers(0, 4, size=(n, d)).astype(float)
        y = rng.integers(-5, 6, size=n).astype(float)
    else:
        X = rng.normal(size=(n, d))
        y = rng.normal(size=n)
    return X, y


class TestTree:
    def test_constant_target_single_leaf(self, rng):
        X = rng.normal(size=(20, 3))
        tree = fit_tree(X, np.full(20, 4.25), max_depth=5)
        assert tree.n_nodes == 1
        assert tree.predict(X).tolist() == [4.25] * 20

    def test_step_function_recovered_at_depth_one(self, rng):
        X = rng.normal(size=(30, 3))
        y = np.where(X[:, 2] > 0.1, 7.0, -1.0)
        tree = fit_tree(X, y, max_depth=1)
        assert tree.depth() == 1 and tree.feature[0] == 2
        assert np.array_equal(tree.predict(X), y)

    @pytest.mark.parametrize("integer", [False, True])
    def test_depth_two_matches_exhaustive_search(self, integer):
        rng = np.random.default_rng(100 + integer)
        for _ in range(50):
            X, y = random_instance(rng, integer=integer)
            assert as_nested(fit_tree(X, y, max_depth=2)) == oracle_tree(X, y, 2)

    def test_min_leaf_and_depth_respected(self, rng):
        X, y = rng.normal(size=(200, 4)), rng.normal(size=200)
        tree = fit_tree(X, y, max_depth=4, min_leaf=7)
        assert tree.depth() <= 4
        leaves = tree.predict(X)
        _, counts = np.unique(leaves, return_counts=True)
        assert counts.min() >= 7

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_tree(np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValueError):
            fit_tree(np.zeros((3, 2)), np.zeros(2))

    def test_piecewise_constant(self, rng):
        X, y = rng.normal(size=(80, 4)), rng.normal(size=80)
        tree = fit_tree(X, y, max_depth=5)
        thresholds = {f: np.sort(tree.threshold[tree.feature == f]) for f in range(4)}
        for x in rng.normal(size=(50, 4)):
            f = int(rng.integers(4))
            cuts = np.concatenate([[-np.inf], thresholds[f], [np.inf]])
            k = np.searchsorted(cuts, x[f], side="left")
            lo, hi = cuts[k - 1], cuts[k]
            moved = x.copy()
            moved[f] = lo + (hi - lo) * 0.37 if np.isfinite(lo) and np.isfinite(hi) else x[f] + (0.5 if np.isfinite(lo) else -0.5)
            if not (lo < moved[f] <= hi):
                continue
            assert tree.predict(x[None])[0] == tree.predict(moved[None])[0]

    def test_vectorized_predict_matches_walk(self, rng):
        for _ in range(20):
            X, y = rng.normal(size=(60, 4)), rng.normal(size=60)
            tree = fit_tree(X, y, max_depth=int(rng.integers(1, 7)), min_leaf=int(rng.integers(1, 4)))
            nested = as_nested(tree)
            Q = rng.normal(size=(40, 4))
            assert tree.predict(Q).tolist() == [walk_predict(nested, q) for q in Q]


def data(rng, n=300):
    X = rng.normal(size=(n, 4))
    y = 2 * X[:, 0] - X[:, 3] + 0.5 * X[:, 1] * X[:, 2] + rng.normal(0, 0.3, n)
    return FeatureMatrix(X, y)


class TestForest:
    def test_single_plain_tree(self, rng):
        d = data(rng)
        forest = fit_random_forest(d, n_trees=1, max_depth=6, min_leaf=2, bootstrap=False, max_features=None)
        tree = fit_tree(d.X, d.y, 6, 2)
        assert as_nested(forest.trees[0]) == as_nested(tree)
        assert np.array_equal(forest.predict(d.X), tree.predict(d.X))

    def test_same_seed_same_forest(self, rng):
        d = data(rng)
        a = fit_random_forest(d, n_trees=10, seed=3)
        b = fit_random_forest(d, n_trees=10, seed=3)
        c = fit_random_forest(d, n_trees=10, seed=4)
        assert [as_nested(t) for t in a.trees] == [as_nested(t) for t in b.trees]
        assert [as_nested(t) for t in a.trees] != [as_nested(t) for t in c.trees]

    def test_training_mse_not_worse_than_members(self, small_dataset):
        _, records = small_dataset
        d = feature_matrix(records, NormStats.from_records(records), "pbf")
        for seed in range(5):
            forest = fit_random_forest(d, n_trees=15, max_depth=4, min_leaf=2, seed=seed)
            mse = np.mean((forest.predict(d.X) - d.y) ** 2)
            member = [np.mean((t.predict(d.X) - d.y) ** 2) for t in forest.trees]
            assert mse <= np.mean(member) + 1e-12
            assert mse <= max(member)

    def test_identical_trees_average_to_that_tree(self, rng):
        d = data(rng)
        tree = fit_tree(d.X, d.y, 3, 5)
        m = BaselineModel("random_forest", trees=[tree] * 4)
        x = rng.normal(size=4)
        assert predict(m, x) == tree.predict(x[None])[0]


class TestBoosting:
    def test_zero_rounds_predicts_mean(self, rng):
        d = data(rng)
        m = fit_gradient_boost(d, n_rounds=0)
        assert predict(m, rng.normal(size=4)) == d.y.mean()

    def test_one_full_round_interpolates(self, rng):
        d = data(rng, 50)
        m = fit_gradient_boost(d, n_rounds=1, learning_rate=1.0, max_depth=None, min_leaf=1)
        assert np.abs(m.predict(d.X) - d.y).max() <= 1e-12

    def test_training_loss_non_increasing(self, small_dataset):
        _, records = small_dataset
        d = feature_matrix(records, NormStats.from_records(records), "smm")
        hist = []
        fit_gradient_boost(d, n_rounds=60, history=hist)
        assert len(hist) == 61
        assert all(b <= a * (1 + 1e-12) for a, b in zip(hist, hist[1:]))
        assert hist[-1] < hist[0]


class TestSVR:
    def test_wide_tube_keeps_weights_at_zero(self, rng):
        X = rng.normal(size=(100, 4))
        y = rng.uniform(10, 11, 100)
        m = fit_svr(FeatureMatrix(X, y), epsilon=10.0, epochs=20)
        z = (y - y.mean()) / y.std()
        assert np.linalg.norm(m.params["w"]) <= 1e-3
        assert np.abs(m.params["b"] - z).max() <= 10.0

    def test_exact_linear_data(self, rng):
        X = rng.normal(size=(300, 4))
        y = 2 * X[:, 0] - X[:, 1]
        m = fit_svr(FeatureMatrix(X, y), c=1000.0, epsilon=0.01, epochs=50)
        mae_std = np.mean(np.abs(m.predict(X) - y)) / y.std()
        assert mae_std <= 0.05

    def test_same_seed_same_weights(self, rng):
        d = data(rng)
        a, b = fit_svr(d, seed=1), fit_svr(d, seed=1)
        assert np.array_equal(a.params["w"], b.params["w"]) and a.params["b"] == b.params["b"]
        assert not np.array_equal(a.params["w"], fit_svr(d, seed=2).params["w"])

    def test_bad_hyperparameters(self, rng):
        with pytest.raises(BaselineError):
            fit_svr(data(rng), c=0.0)


class TestCommon:
    def test_feature_matrix_validation(self):
        with pytest.raises(BaselineError):
            FeatureMatrix(np.zeros((3, 4)), np.zeros(2))
        with pytest.raises(BaselineError):
            FeatureMatrix(np.full((2, 4), np.nan), np.zeros(2))

    def test_feature_matrix_columns(self, small_dataset):
        _, records = small_dataset
        stats = NormStats.from_records(records)
        fm = feature_matrix(records, stats, "pbf")
        r = records[0]
        assert fm.X[0].tolist() == [
            (r.height - stats.height_mean) / stats.height_sd,
            r.is_male,
            (r.age - stats.age_mean) / stats.age_sd,
            (r.weight - stats.weight_mean) / stats.weight_sd,
        ]
        assert fm.y.tolist() == [x.pbf for x in records]

    def test_unknown_kind_lists_valid(self, rng):
        with pytest.raises(BaselineError, match="svr, random_forest, gradient_boost"):
            fit_baseline("bogus", data(rng))

    @pytest.mark.parametrize("kind", KINDS)
    def test_deterministic_fits(self, kind, rng):
        d = data(rng, 120)
        hyper = {"random_forest": dict(n_trees=5), "gradient_boost": dict(n_rounds=10), "svr": dict(epochs=5)}[kind]
        a, b = fit_baseline(kind, d, **hyper), fit_baseline(kind, d, **hyper)
        assert np.array_equal(a.predict(d.X), b.predict(d.X))

    @pytest.mark.parametrize("kind", KINDS)
    def test_file_round_trip(self, kind, rng, tmp_path):
        d = data(rng, 120)
        hyper = {"random_forest": dict(n_trees=5), "gradient_boost": dict(n_rounds=10), "svr": dict(epochs=5)}[kind]
        m = fit_baseline(kind, d, **hyper)
        m.task = "pbf"
        m.feature_stats = NormStats(165.0, 9.0, 40.0, 13.0, 63.0, 15.0)
        path = os.path.join(tmp_path, "b.bin")
        save_baseline(m, path)
        back = load_baseline(path)
        assert (back.kind, back.task, back.hyper, back.feature_stats) == (m.kind, m.task, m.hyper, m.feature_stats)
        Q = rng.normal(size=(50, 4))
        assert np.array_equal(back.predict(Q), m.predict(Q))
