"""Greedy variance-reduction regression trees."""

from dataclasses import dataclass

import numpy as np

from .. import kernels

LEAF = -1
TIE_RTOL = 1e-12


@dataclass
class DecisionTree:
    """Flat array tree; node 0 is the root, nodes are stored depth-first.

    ``feature[i] == LEAF`` marks a leaf.  Rows with ``x[feature] <= threshold``
    go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    def depth(self, node=0):
        if self.feature[node] == LEAF:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return self.value[node]

    def to_arrays(self):
        return {
            "feature": self.feature.astype(np.float64),
            "threshold": self.threshold,
            "left": self.left.astype(np.float64),
            "right": self.right.astype(np.float64),
            "value": self.value,
        }

    @classmethod
    def from_arrays(cls, arrays):
        return cls(
            arrays["feature"].astype(np.int64),
            np.asarray(arrays["threshold"], dtype=np.float64),
            arrays["left"].astype(np.int64),
            arrays["right"].astype(np.int64),
            np.asarray(arrays["value"], dtype=np.float64),
        )


def best_split(X, y, idx, features, min_leaf):
    """Best (feature, threshold, score) over ``features`` for rows ``idx``.

    Score is sum_l**2/n_l + sum_r**2/n_r, which is maximal exactly where the
    children's summed squared error is minimal.  Scores within TIE_RTOL of the
    best are ties, resolved to the lowest feature index and then the lowest
    threshold, so rounding noise in the sums cannot decide between identical
    partitions.  Returns None when no split is allowed.
    """
    found = []
    yi = y[idx]
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        score, k, thr = kernels.split_scan(
            np.ascontiguousarray(xs[order]), np.ascontiguousarray(yi[order]), min_leaf, TIE_RTOL
        )
        if k >= 0:
            found.append((int(f), thr, score))
    if not found:
        return None
    top = max(s for _, _, s in found)
    return min((f, thr, s) for f, thr, s in found if s >= top - TIE_RTOL * top)


def fit_tree(X, y, max_depth=None, min_leaf=1, rng=None, max_features=None):
    """Fit a regression tree.

    ``max_features`` (int) draws that many candidate features per split from
    ``rng``; None considers every feature.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("fit_tree needs a non-empty 2-D feature matrix")
    if len(X) != len(y):
        raise ValueError(f"feature rows ({len(X)}) and targets ({len(y)}) differ")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    n_features = X.shape[1]
    if max_features is not None and not 1 <= max_features <= n_features:
        raise ValueError(f"max_features must be in 1..{n_features}")
    max_depth = np.inf if max_depth is None else max_depth

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(feature) - 1

    def grow(idx, depth):
        node = new_node()
        yi = y[idx]
        mean = yi.mean()
        value[node] = mean
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return node
        dev = yi - mean
        sse = float(dev @ dev)
        if sse <= 1e-12 * (1.0 + float(yi @ yi)):
            return node
        if max_features is None:
            feats = range(n_features)
        else:
            feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
        split = best_split(X, y, idx, feats, min_leaf)
        if split is None:
            return node
        f, thr, score = split
        total = yi.sum()
        if score - total * total / len(idx) <= 1e-12 * sse:
            return node
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        if len(li) < min_leaf or len(ri) < min_leaf:
            return node
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(li, depth + 1)
        right[node] = grow(ri, depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )
