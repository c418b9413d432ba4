"""Structured-only regressors: random forest, gradient boosting, linear SVR.

Every model is fit to one target; PBF and SMM each get their own model.
Inputs are the standardized 4-vectors (height_z, gender, age_z, weight_z).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..container import read_container, write_container
from ..preprocess import NormStats
from ..rng import make_rng, substream
from .tree import DecisionTree, fit_tree

KINDS = ("svr", "random_forest", "gradient_boost")
FEATURE_NAMES = ("height_z", "gender", "age_z", "weight_z")
TASKS = ("pbf", "smm")


class BaselineError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    X: np.ndarray  # (n, 4)
    y: np.ndarray  # (n,)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise BaselineError(f"{self.X.shape[0]} feature rows but {self.y.shape[0]} targets")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise BaselineError("non-finite entries in feature matrix")

    def __len__(self):
        return len(self.y)


def structured_features(records, stats):
    return np.array(
        [
            [
                (r.height - stats.height_mean) / stats.height_sd,
                r.is_male,
                (r.age - stats.age_mean) / stats.age_sd,
                (r.weight - stats.weight_mean) / stats.weight_sd,
            ]
            for r in records
        ],
        dtype=np.float64,
    ).reshape(-1, len(FEATURE_NAMES))


def feature_matrix(records, stats, task):
    if task not in TASKS:
        raise BaselineError(f"unknown task {task!r}")
    return FeatureMatrix(structured_features(records, stats), [getattr(r, task) for r in records])


@dataclass
class BaselineModel:
    kind: str
    params: dict = field(default_factory=dict)
    trees: list = field(default_factory=list)
    hyper: dict = field(default_factory=dict)
    feature_stats: NormStats = None
    task: str = ""

    def predict(self, X):
        """Predictions for an (n, 4) matrix."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "svr":
            z = X @ self.params["w"] + self.params["b"]
            return z * self.params["y_sd"] + self.params["y_mean"]
        if self.kind == "random_forest":
            return np.mean([t.predict(X) for t in self.trees], axis=0)
        if self.kind == "gradient_boost":
            out = np.full(len(X), self.params["base"])
            for t in self.trees:
                out += self.params["learning_rate"] * t.predict(X)
            return out
        raise BaselineError(f"unknown baseline kind {self.kind!r}")


def predict(model, features):
    """Scalar prediction for one standardized 4-vector."""
    x = np.asarray(features, dtype=np.float64).reshape(1, -1)
    return float(model.predict(x)[0])


def fit_random_forest(data, n_trees=200, max_depth=8, min_leaf=5, seed=0, bootstrap=True, max_features="sqrt"):
    """Bagged trees; tree t draws its bootstrap and feature subsets from substream (seed, t)."""
    n, d = data.X.shape
    if max_features == "sqrt":
        max_features = max(1, int(math.isqrt(d)))
    trees = []
    for t in range(n_trees):
        rng = substream(seed, t)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_tree(data.X[rows], data.y[rows], max_depth, min_leaf, rng, max_features))
    hyper = dict(n_trees=n_trees, max_depth=max_depth, min_leaf=min_leaf, seed=seed, bootstrap=bootstrap, max_features=max_features)
    return BaselineModel("random_forest", trees=trees, hyper=hyper)


def fit_gradient_boost(data, n_rounds=300, learning_rate=0.05, max_depth=3, min_leaf=5, history=None):
    """Least-squares boosting: start at the target mean, add shrunken residual trees.

    If ``history`` is a list, the training MSE after each round (including
    round 0) is appended to it.
    """
    base = float(data.y.mean())
    pred = np.full(len(data), base)
    trees = []
    if history is not None:
        history.append(float(np.mean((data.y - pred) ** 2)))
    for _ in range(n_rounds):
        tree = fit_tree(data.X, data.y - pred, max_depth, min_leaf)
        pred = pred + learning_rate * tree.predict(data.X)
        trees.append(tree)
        if history is not None:
            history.append(float(np.mean((data.y - pred) ** 2)))
    hyper = dict(n_rounds=n_rounds, learning_rate=learning_rate, max_depth=max_depth, min_leaf=min_leaf)
    return BaselineModel("gradient_boost", params={"base": base, "learning_rate": learning_rate}, trees=trees, hyper=hyper)


def fit_svr(data, c=1.0, epsilon=0.1, epochs=50, lr=0.01, seed=0):
    """Linear epsilon-insensitive regression by stochastic subgradient descent.

    Minimizes 0.5*|w|^2 + c * sum(max(0, |w.x + b - y| - epsilon)) on
    standardized targets.  The objective is divided by c*n per sample, and
    the step size decays as lr / (1 + t/n) over the t-th update.
    """
    if c <= 0 or epsilon < 0:
        raise BaselineError("svr needs c > 0 and epsilon >= 0")
    X, y = data.X, data.y
    n, d = X.shape
    y_mean = float(y.mean())
    y_sd = float(y.std())
    if not y_sd > 0:
        y_sd = 1.0
    z = (y - y_mean) / y_sd
    w = np.zeros(d)
    b = 0.0
    rng = make_rng(seed)
    reg = 1.0 / (c * n)
    t = 0
    for epoch in range(epochs):
        for i in rng.permutation(n):
            eta = lr / (1.0 + t / n)
            r = X[i] @ w + b - z[i]
            g_w = reg * w
            if r > epsilon:
                g_w = g_w + X[i]
                b -= eta
            elif r < -epsilon:
                g_w = g_w - X[i]
                b += eta
            w = w - eta * g_w
            t += 1
        if not (np.isfinite(w).all() and math.isfinite(b)):
            raise BaselineError(f"svr diverged in epoch {epoch + 1}")
    params = {"w": w, "b": b, "y_mean": y_mean, "y_sd": y_sd}
    hyper = dict(c=c, epsilon=epsilon, epochs=epochs, lr=lr, seed=seed)
    return BaselineModel("svr", params=params, hyper=hyper)


def fit_baseline(kind, data, **hyper):
    if kind == "svr":
        return fit_svr(data, **hyper)
    if kind == "random_forest":
        return fit_random_forest(data, **hyper)
    if kind == "gradient_boost":
        return fit_gradient_boost(data, **hyper)
    raise BaselineError(f"unknown baseline kind {kind!r}; valid kinds: {', '.join(KINDS)}")


def save_baseline(model, path):
    arrays = []
    scalars = {}
    for k, v in model.params.items():
        if np.ndim(v) == 0:
            scalars[k] = float(v)
        else:
            arrays.append((f"param.{k}", np.asarray(v)))
    for i, tree in enumerate(model.trees):
        arrays.extend((f"tree{i}.{k}", v) for k, v in tree.to_arrays().items())
    meta = {
        "kind": model.kind,
        "task": model.task,
        "hyper": model.hyper,
        "scalars": scalars,
        "n_trees": len(model.trees),
        "feature_stats": model.feature_stats.to_dict() if model.feature_stats else None,
    }
    write_container(path, "baseline", meta, arrays)


def load_baseline(path):
    meta, arrays = read_container(path, "baseline")
    params = dict(meta["scalars"])
    for name, arr in arrays.items():
        if name.startswith("param."):
            params[name[len("param."):]] = arr
    trees = []
    for i in range(meta["n_trees"]):
        prefix = f"tree{i}."
        trees.append(DecisionTree.from_arrays({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}))
    stats = NormStats(**meta["feature_stats"]) if meta["feature_stats"] else None
    return BaselineModel(meta["kind"], params, trees, meta["hyper"], stats, meta["task"])
