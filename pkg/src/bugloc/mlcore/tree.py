"""CART regression trees and the two tree ensembles built on them."""

import enum

import numpy as np

from ..errors import CorruptModel, DegenerateData


class RegressionTree:
    """Binary regression tree stored as parallel node arrays.

    A node with ``feature == -1`` is a leaf; internal nodes send ``x[feature]
    <= threshold`` to ``left``.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def node_count(self):
        return int(self.feature.size)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["feature"], data["threshold"], data["left"], data["right"], data["value"])
        except KeyError as exc:
            raise CorruptModel(f"bad tree payload: missing {exc}") from exc


def _best_split(X, y, features, min_leaf):
    """Highest variance-reduction split over ``features``.

    Candidates are scanned in ascending feature index and ascending
    threshold; only a strictly larger gain replaces the incumbent.
    """
    n = y.size
    total = y.sum()
    parent = total * total / n
    best = None
    for f in sorted(features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        csum = np.cumsum(ys)[:-1]
        nl = np.arange(1, n)
        nr = n - nl
        valid = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        gain = csum ** 2 / nl + (total - csum) ** 2 / nr - parent
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        g = gain[i]
        if g <= 0:
            continue
        if best is None or g > best[0]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not thr < xs[i + 1]:
                thr = xs[i]
            best = (g, f, thr)
    return best


def fit_tree(X, y, max_features=None, min_leaf=1, max_depth=None, rng=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise DegenerateData("cannot fit a tree on zero rows")
    n_features = X.shape[1]
    k = n_features if max_features is None else max(1, min(int(max_features), n_features))
    if rng is None:
        rng = np.random.default_rng(0)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if idx.size < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            continue
        ys = y[idx]
        if np.all(ys == ys[0]):
            continue
        if k < n_features:
            candidates = rng.choice(n_features, size=k, replace=False)
        else:
            candidates = range(n_features)
        split = _best_split(X[idx], ys, candidates, min_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node] = int(f)
        threshold[node] = float(thr)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return RegressionTree(feature, threshold, left, right, value)


class EnsembleKind(str, enum.Enum):
    RANDOM_FOREST = "RandomForest"
    GRADIENT_BOOST = "GradientBoost"


class TreeEnsemble:
    def __init__(self, kind, trees, learning_rate=None, base_prediction=None, seed=0, params=None):
        self.kind = EnsembleKind(kind)
        self.trees = list(trees)
        self.learning_rate = learning_rate
        self.base_prediction = base_prediction
        self.seed = seed
        self.params = dict(params or {})

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if self.kind is EnsembleKind.RANDOM_FOREST:
            total = np.zeros(X.shape[0])
            for tree in self.trees:
                total += tree.predict(X)
            return total / len(self.trees)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return self.base_prediction + self.learning_rate * total

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "learning_rate": self.learning_rate,
            "base_prediction": self.base_prediction,
            "seed": self.seed,
            "params": self.params,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["kind"], [RegressionTree.from_dict(t) for t in data["trees"]],
                       data.get("learning_rate"), data.get("base_prediction"),
                       data.get("seed", 0), data.get("params"))
        except (KeyError, ValueError) as exc:
            raise CorruptModel(f"bad ensemble payload: {exc}") from exc


def _check_rows(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DegenerateData("need a non-empty 2-D feature matrix")
    if y.shape != (X.shape[0],):
        raise DegenerateData(f"targets of shape {y.shape} for {X.shape[0]} rows")
    if not np.isfinite(y).all() or not np.isfinite(X).all():
        raise DegenerateData("features and targets must be finite")
    return X, y


def fit_forest(X, y, n_trees=100, max_features=2, min_leaf=1, seed=0):
    """Bagged CART regressors; tree ``i`` draws from ``default_rng(seed + i)``."""
    X, y = _check_rows(X, y)
    n = X.shape[0]
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seed + i)
        sample = rng.integers(0, n, size=n)
        trees.append(fit_tree(X[sample], y[sample], max_features=max_features,
                              min_leaf=min_leaf, rng=rng))
    params = {"n_trees": n_trees, "max_features": max_features, "min_leaf": min_leaf}
    return TreeEnsemble(EnsembleKind.RANDOM_FOREST, trees, seed=seed, params=params)


def fit_gboost(X, y, n_trees=100, depth=3, learning_rate=0.1, seed=0, min_leaf=1):
    """Stagewise squared-loss boosting from the target mean."""
    X, y = _check_rows(X, y)
    base = float(y.mean())
    pred = np.full(y.shape, base)
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seed + i)
        tree = fit_tree(X, y - pred, max_features=None, min_leaf=min_leaf,
                        max_depth=depth, rng=rng)
        trees.append(tree)
        pred = pred + learning_rate * tree.predict(X)
    params = {"n_trees": n_trees, "depth": depth, "min_leaf": min_leaf}
    return TreeEnsemble(EnsembleKind.GRADIENT_BOOST, trees, learning_rate=learning_rate,
                        base_prediction=base, seed=seed, params=params)
