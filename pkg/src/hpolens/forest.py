"""From-scratch CART regression trees and bootstrap forest surrogate.

Splits minimise weighted child variance; all tie-breaking is deterministic
(lowest feature index, then lowest threshold) so identical seeds give
bit-identical forests on any platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int | None = None  # None = unlimited
    min_samples_leaf: int = 2
    max_features: int | None = None  # None = ceil(p / 3)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def resolved_max_features(self, p: int) -> int:
        if self.max_features is None:
            return max(1, math.ceil(p / 3))
        return min(self.max_features, p)


class TreeNode:
    """Binary regression tree node; internal nodes route x[feature] <= threshold left."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "n")

    def __init__(self, feature=-1, threshold=0.0, left=None, right=None, value=0.0, n=0):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.n = n

    @property
    def is_leaf(self):
        return self.left is None

    def predict_one(self, x):
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value


@dataclass
class FlatTree:
    """Array view of a tree for fast prediction and explanation.

    Leaves have feature == -1; ``n_samples`` is the training-sample count
    that flowed through each node (cover), which path-dependent SHAP uses.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.shape[0]


def flatten_tree(root: TreeNode) -> FlatTree:
    feat, thr, left, right, value, nsamp = [], [], [], [], [], []

    def visit(node):
        idx = len(feat)
        feat.append(node.feature if not node.is_leaf else -1)
        thr.append(node.threshold)
        left.append(-1)
        right.append(-1)
        value.append(node.value)
        nsamp.append(node.n)
        if not node.is_leaf:
            left[idx] = visit(node.left)
            right[idx] = visit(node.right)
        return idx

    visit(root)
    return FlatTree(
        np.array(feat, dtype=np.int64),
        np.array(thr, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(nsamp, dtype=np.int64),
    )


def _best_split(X, y, feature_idx, min_samples_leaf):
    """Exhaustive variance-minimising split over the given features.

    Thresholds are midpoints between consecutive sorted unique values.
    Returns (feature, threshold, score) or None when no legal split exists.
    """
    n = y.shape[0]
    best = None
    best_score = np.inf
    for f in feature_idx:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        # candidate split positions: between distinct consecutive values
        diff = np.nonzero(xs[1:] > xs[:-1])[0] + 1  # left side sizes
        if diff.size == 0:
            continue
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total_sum, total_sq = csum[-1], csq[-1]
        nl = diff
        nr = n - nl
        ok = (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
        if not np.any(ok):
            continue
        nl, nr = nl[ok], nr[ok]
        pos = diff[ok]
        sl = csum[pos - 1]
        sql = csq[pos - 1]
        # weighted child SSE = total squared error after the split
        score = (sql - sl * sl / nl) + ((total_sq - sql) - (total_sum - sl) ** 2 / nr)
        k = int(np.argmin(score))
        if score[k] < best_score:
            thr = 0.5 * (xs[pos[k] - 1] + xs[pos[k]])
            best = (f, float(thr), float(score[k]))
            best_score = score[k]
    # feature_idx is iterated in ascending order, so ties already prefer the
    # lowest feature; within a feature argmin takes the lowest threshold.
    return best


def fit_tree(X, y, params: ForestParams, rng: np.random.Generator) -> TreeNode:
    """Grow one CART regression tree.

    At each node a random subset of ``max_features`` columns (sorted, so
    tie-breaking stays index-ordered) is searched exhaustively.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.size == 0:
        raise ValueError("empty training matrix")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training values")
    p = X.shape[1]
    k = params.resolved_max_features(p)

    def grow(idx, depth):
        node = TreeNode(value=float(np.mean(y[idx])), n=int(idx.shape[0]))
        if params.max_depth is not None and depth >= params.max_depth:
            return node
        if idx.shape[0] < 2 * params.min_samples_leaf:
            return node
        yi = y[idx]
        if np.all(yi == yi[0]):
            return node
        if k < p:
            feats = np.sort(rng.choice(p, size=k, replace=False))
        else:
            feats = np.arange(p)
        found = _best_split(X[idx], yi, feats, params.min_samples_leaf)
        if found is None:
            return node
        f, thr, _ = found
        mask = X[idx, f] <= thr
        node.feature = f
        node.threshold = thr
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    return grow(np.arange(X.shape[0]), 0)


@dataclass
class RegressionForest:
    trees: list  # FlatTree per member
    params: ForestParams
    columns: tuple
    base_value: float

    @property
    def p(self):
        return len(self.columns)

    def predict_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise ValueError(f"expected {self.p} columns, got shape {X.shape}")
        out = np.zeros(X.shape[0])
        for t in self.trees:
            node = np.zeros(X.shape[0], dtype=np.int64)
            active = t.feature[node] >= 0
            while np.any(active):
                idx = np.nonzero(active)[0]
                cur = node[idx]
                goes_left = X[idx, t.feature[cur]] <= t.threshold[cur]
                node[idx] = np.where(goes_left, t.left[cur], t.right[cur])
                active[idx] = t.feature[node[idx]] >= 0
            out += t.value[node]
        return out / len(self.trees)


def predict(forest: RegressionForest, x) -> float:
    """Mean of member-tree leaf values for one row."""
    x = np.asarray(x, dtype=float)
    if x.shape != (forest.p,):
        raise ValueError(f"expected row of length {forest.p}, got {x.shape}")
    return float(forest.predict_matrix(x[None, :])[0])


def fit_forest(X, y, params: ForestParams, columns=None) -> RegressionForest:
    """Fit ``n_trees`` trees on independent bootstrap resamples.

    Per-tree seeds derive deterministically from ``params.seed`` so that
    the result is independent of evaluation order or thread count.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if columns is None:
        columns = tuple(f"x{i}" for i in range(X.shape[1]))
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for s in seeds:
        rng = np.random.default_rng(s)
        if params.bootstrap:
            idx = rng.integers(0, X.shape[0], size=X.shape[0])
            Xi, yi = X[idx], y[idx]
        else:
            Xi, yi = X, y
        trees.append(flatten_tree(fit_tree(Xi, yi, params, rng)))
    return RegressionForest(trees, params, tuple(columns), float(np.mean(y)))


def mse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape or predictions.size == 0:
        raise ValueError("prediction/target length mismatch")
    return float(np.mean((predictions - targets) ** 2))


def r_squared(predictions, targets) -> float:
    targets = np.asarray(targets, dtype=float)
    denom = float(np.mean((targets - targets.mean()) ** 2))
    if denom == 0:
        return 0.0
    return 1.0 - mse(predictions, targets) / denom


def train_test_split(matrix, test_fraction: float, rng: np.random.Generator):
    """Uniform random 2-way partition of an EncodedMatrix without replacement."""
    from .study import EncodedMatrix

    n = matrix.n
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie in (0, 1)")
    n_test = int(round(test_fraction * n))
    n_test = min(max(n_test, 1), n - 1)
    perm = rng.permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])

    def take(idx):
        ids = tuple(matrix.trial_ids[i] for i in idx) if matrix.trial_ids else ()
        return EncodedMatrix(matrix.columns, matrix.X[idx], matrix.y[idx], ids)

    return take(train_idx), take(test_idx)


FOREST_FORMAT_VERSION = 1


def forest_to_dict(forest: RegressionForest) -> dict:
    return {
        "version": FOREST_FORMAT_VERSION,
        "columns": list(forest.columns),
        "base_value": forest.base_value,
        "params": {
            "n_trees": forest.params.n_trees,
            "max_depth": forest.params.max_depth,
            "min_samples_leaf": forest.params.min_samples_leaf,
            "max_features": forest.params.max_features,
            "bootstrap": forest.params.bootstrap,
            "seed": forest.params.seed,
        },
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
                "n_samples": t.n_samples.tolist(),
            }
            for t in forest.trees
        ],
    }


def forest_from_dict(doc: dict) -> RegressionForest:
    if doc.get("version") != FOREST_FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version {doc.get('version')!r}")
    params = ForestParams(**doc["params"])
    trees = [
        FlatTree(
            np.array(t["feature"], dtype=np.int64),
            np.array(t["threshold"], dtype=np.float64),
            np.array(t["left"], dtype=np.int64),
            np.array(t["right"], dtype=np.int64),
            np.array(t["value"], dtype=np.float64),
            np.array(t["n_samples"], dtype=np.int64),
        )
        for t in doc["trees"]
    ]
    return RegressionForest(trees, params, tuple(doc["columns"]), float(doc["base_value"]))


def save_forest(forest: RegressionForest, path) -> None:
    with open(path, "w") as fh:
        json.dump(forest_to_dict(forest), fh)
        fh.write("\n")


def load_forest(path) -> RegressionForest:
    with open(path) as fh:
        return forest_from_dict(json.load(fh))
