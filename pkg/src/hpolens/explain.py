"""Exact Shapley attribution for tree ensembles.

Two routes are kept deliberately separate: a brute-force coalition oracle
(used by the test suite, exponential in the feature count) and a
polynomial-time per-leaf traversal for production. The production route
uses path-dependent semantics: features absent from a coalition are
marginalised by the fraction of training samples flowing down each branch.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .forest import FlatTree, RegressionForest

BRUTEFORCE_MAX_FEATURES = 20

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@dataclass(frozen=True)
class ShapRow:
    """Per-feature attributions for one prediction; base + sum = prediction."""

    attributions: np.ndarray
    base: float
    prediction: float


@dataclass(frozen=True)
class ShapMatrix:
    rows: tuple  # of ShapRow
    columns: tuple
    feature_values: np.ndarray  # raw encoded values, kept for plotting

    @property
    def n(self):
        return len(self.rows)

    def phi_matrix(self) -> np.ndarray:
        return np.array([r.attributions for r in self.rows])


@dataclass(frozen=True)
class DependenceSeries:
    """(feature value, SHAP value, interaction value) triples, one per row."""

    feature: str
    interaction: str
    points: tuple  # of (feature_value, shap_value, interaction_value)


def shapley_weights(m: int) -> np.ndarray:
    """w[k] = k! (m-1-k)! / m! for coalitions of size k out of m players."""
    fact = [math.factorial(i) for i in range(m + 1)]
    return np.array(
        [fact[k] * fact[m - 1 - k] / fact[m] for k in range(m)], dtype=float
    )


def _phi_from_subset_values(values: np.ndarray, p: int) -> tuple[np.ndarray, float]:
    """Combine v(S) over all bitmask subsets into Shapley attributions."""
    masks = np.arange(1 << p)
    popcount = np.zeros(1 << p, dtype=np.int64)
    for f in range(p):
        popcount += (masks >> f) & 1
    w = shapley_weights(p)
    phi = np.zeros(p)
    for i in range(p):
        without = np.nonzero(((masks >> i) & 1) == 0)[0]
        phi[i] = np.sum(
            w[popcount[without]] * (values[without | (1 << i)] - values[without])
        )
    return phi, float(values[0])


def shapley_from_value_fn(value_fn, p: int) -> tuple[np.ndarray, float]:
    """Brute-force Shapley values for an arbitrary coalition value function.

    ``value_fn`` receives a frozenset of feature indices. Exponential cost;
    refuses p > BRUTEFORCE_MAX_FEATURES.
    """
    if p > BRUTEFORCE_MAX_FEATURES:
        raise ValueError(f"brute force limited to {BRUTEFORCE_MAX_FEATURES} features")
    values = np.empty(1 << p)
    for mask in range(1 << p):
        subset = frozenset(i for i in range(p) if (mask >> i) & 1)
        values[mask] = value_fn(subset)
    return _phi_from_subset_values(values, p)


def shapley_bruteforce(model, background, x) -> ShapRow:
    """Interventional brute-force Shapley values for a black-box model.

    v(S) averages the model over background rows with the features in S
    replaced by the explained point's values.
    """
    background = np.asarray(background, dtype=float)
    x = np.asarray(x, dtype=float)
    if background.ndim != 2 or background.shape[0] == 0:
        raise ValueError("background must be a non-empty matrix")
    p = x.shape[0]

    def value(subset):
        z = background.copy()
        for i in subset:
            z[:, i] = x[i]
        return float(np.mean([model(row) for row in z]))

    phi, base = shapley_from_value_fn(value, p)
    return ShapRow(phi, base, float(base + phi.sum()))


def tree_conditional_expectation(tree: FlatTree, x, subset) -> float:
    """Path-dependent v(S) for one tree: follow x on features in S, split by
    training-sample fractions elsewhere."""
    x = np.asarray(x, dtype=float)

    def walk(node):
        f = tree.feature[node]
        if f < 0:
            return tree.value[node]
        if f in subset:
            nxt = tree.left[node] if x[f] <= tree.threshold[node] else tree.right[node]
            return walk(nxt)
        nl, nr = tree.n_samples[tree.left[node]], tree.n_samples[tree.right[node]]
        nn = tree.n_samples[node]
        return (nl * walk(tree.left[node]) + nr * walk(tree.right[node])) / nn

    return float(walk(0))


def _tree_subset_values(tree: FlatTree, x, p: int) -> np.ndarray:
    """Path-dependent v(S) for every bitmask subset at once (oracle helper)."""
    x = np.asarray(x, dtype=float)
    size = 1 << p
    masks = np.arange(size)
    has = [((masks >> f) & 1).astype(bool) for f in range(p)]
    acc = np.zeros(size)

    def walk(node, probs):
        f = tree.feature[node]
        if f < 0:
            acc_local = tree.value[node] * probs
            np.add(acc, acc_local, out=acc)
            return
        left, right = tree.left[node], tree.right[node]
        hot, cold = (left, right) if x[f] <= tree.threshold[node] else (right, left)
        nn = tree.n_samples[node]
        r_hot = tree.n_samples[hot] / nn
        r_cold = tree.n_samples[cold] / nn
        walk(hot, probs * np.where(has[f], 1.0, r_hot))
        walk(cold, probs * np.where(has[f], 0.0, r_cold))

    walk(0, np.ones(size))
    return acc


def forest_shapley_bruteforce(forest: RegressionForest, x) -> ShapRow:
    """Exact path-dependent Shapley values via full coalition enumeration.

    Each tree's coalition value uses its own training-sample flow; the
    forest attribution is the mean over trees (linearity). Test oracle only.
    """
    p = forest.p
    if p > BRUTEFORCE_MAX_FEATURES:
        raise ValueError(f"brute force limited to {BRUTEFORCE_MAX_FEATURES} features")
    values = np.zeros(1 << p)
    for t in forest.trees:
        values += _tree_subset_values(t, x, p)
    values /= len(forest.trees)
    phi, base = _phi_from_subset_values(values, p)
    return ShapRow(phi, base, float(base + phi.sum()))


# ---------------------------------------------------------------------------
# Production route: per-leaf dynamic programme, O(leaves * depth^2) per row.
#
# For a leaf with unique path features U, the coalition value factorises as
# value * prod_u (x passes all u-splits if u in S else its cover fraction),
# so Shapley sums reduce to U with |U|-player weights; the DP below builds
# the subset-size polynomial once per leaf and divides each feature out.
# ---------------------------------------------------------------------------


def _leaf_tables(tree: FlatTree):
    """Flatten a tree into per-leaf unique-feature/condition CSR arrays."""
    leaf_value = []
    leaf_uf_start = [0]
    uf_feat = []
    uf_z = []
    uf_cond_start = [0]
    cond_thr = []
    cond_dir = []  # 1: require x <= thr, 0: require x > thr

    path = []  # (feature, threshold, went_left, cover_ratio)

    def walk(node):
        f = tree.feature[node]
        if f < 0:
            leaf_value.append(tree.value[node])
            seen = {}
            for feat, thr, went_left, ratio in path:
                seen.setdefault(feat, []).append((thr, went_left, ratio))
            for feat in seen:  # insertion order = first occurrence on path
                z = 1.0
                for thr, went_left, ratio in seen[feat]:
                    z *= ratio
                    cond_thr.append(thr)
                    cond_dir.append(1 if went_left else 0)
                uf_feat.append(feat)
                uf_z.append(z)
                uf_cond_start.append(len(cond_thr))
            leaf_uf_start.append(len(uf_feat))
            return
        nn = tree.n_samples[node]
        for child, went_left in ((tree.left[node], True), (tree.right[node], False)):
            path.append((f, tree.threshold[node], went_left, tree.n_samples[child] / nn))
            walk(child)
            path.pop()

    walk(0)
    return (
        np.array(leaf_value, dtype=np.float64),
        np.array(leaf_uf_start, dtype=np.int64),
        np.array(uf_feat, dtype=np.int64),
        np.array(uf_z, dtype=np.float64),
        np.array(uf_cond_start, dtype=np.int64),
        np.array(cond_thr, dtype=np.float64),
        np.array(cond_dir, dtype=np.int64),
    )


@njit(cache=True)
def _explain_rows_kernel(
    X,
    leaf_value,
    leaf_uf_start,
    uf_feat,
    uf_z,
    uf_cond_start,
    cond_thr,
    cond_dir,
    fact,
    phi,
):
    n_rows = X.shape[0]
    n_leaves = leaf_value.shape[0]
    max_m = 0
    for L in range(n_leaves):
        m = leaf_uf_start[L + 1] - leaf_uf_start[L]
        if m > max_m:
            max_m = m
    o = np.empty(max_m + 1)
    c = np.empty(max_m + 1)
    b = np.empty(max_m + 1)
    for r in range(n_rows):
        for L in range(n_leaves):
            s0 = leaf_uf_start[L]
            m = leaf_uf_start[L + 1] - s0
            if m == 0:
                continue
            val = leaf_value[L]
            # o[j]: does row r satisfy every split on this leaf's j-th feature
            for j in range(m):
                u = s0 + j
                ok = 1.0
                for q in range(uf_cond_start[u], uf_cond_start[u + 1]):
                    xv = X[r, uf_feat[u]]
                    if cond_dir[q] == 1:
                        if not (xv <= cond_thr[q]):
                            ok = 0.0
                            break
                    else:
                        if not (xv > cond_thr[q]):
                            ok = 0.0
                            break
                o[j] = ok
            # subset-size polynomial over all m features
            c[0] = 1.0
            for k in range(1, m + 1):
                c[k] = 0.0
            for j in range(m):
                zj = uf_z[s0 + j]
                oj = o[j]
                for k in range(j + 1, 0, -1):
                    c[k] = c[k] * zj + c[k - 1] * oj
                c[0] = c[0] * zj
            for j in range(m):
                zj = uf_z[s0 + j]
                oj = o[j]
                if oj == 0.0:
                    for k in range(m):
                        b[k] = c[k] / zj
                else:
                    b[m - 1] = c[m]
                    for k in range(m - 1, 0, -1):
                        b[k - 1] = c[k] - b[k] * zj
                total = 0.0
                for k in range(m):
                    # k! (m-1-k)! / m!
                    total += fact[k] * fact[m - 1 - k] / fact[m] * b[k]
                phi[r, uf_feat[s0 + j]] += val * (oj - zj) * total


class TreeShapExplainer:
    """Holds per-tree leaf tables; immutable after construction."""

    def __init__(self, forest: RegressionForest):
        self.forest = forest
        self._tables = [_leaf_tables(t) for t in forest.trees]
        self._tree_base = [
            float(np.sum(t.value[t.feature < 0] * t.n_samples[t.feature < 0]) / t.n_samples[0])
            for t in forest.trees
        ]
        max_depth = 0
        for tbl in self._tables:
            starts = tbl[1]
            if starts.shape[0] > 1:
                max_depth = max(max_depth, int(np.max(np.diff(starts))))
        self._fact = np.array(
            [math.factorial(i) for i in range(max_depth + 2)], dtype=np.float64
        )

    @property
    def base_value(self) -> float:
        return float(np.mean(self._tree_base))

    def explain_matrix(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.forest.p:
            raise ValueError(f"expected {self.forest.p} columns, got {X.shape}")
        phi = np.zeros((X.shape[0], self.forest.p))
        for tbl in self._tables:
            _explain_rows_kernel(X, *tbl, self._fact, phi)
        return phi / len(self.forest.trees)


def tree_shap(forest: RegressionForest, x) -> ShapRow:
    """Polynomial-time path-dependent attributions for one row."""
    x = np.asarray(x, dtype=float)
    if x.shape != (forest.p,):
        raise ValueError(f"expected row of length {forest.p}, got {x.shape}")
    explainer = TreeShapExplainer(forest)
    phi = explainer.explain_matrix(x[None, :])[0]
    base = explainer.base_value
    return ShapRow(phi, base, float(base + phi.sum()))


def explain_all(forest: RegressionForest, X) -> ShapMatrix:
    """Explain every row of X; row order preserved."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return ShapMatrix((), forest.columns, X.reshape(0, forest.p))
    explainer = TreeShapExplainer(forest)
    phi = explainer.explain_matrix(X)
    base = explainer.base_value
    rows = tuple(
        ShapRow(phi[i].copy(), base, float(base + phi[i].sum()))
        for i in range(X.shape[0])
    )
    return ShapMatrix(rows, forest.columns, X.copy())


def rank_features(m: ShapMatrix):
    """(column, mean |SHAP|) pairs, descending; ties keep column order."""
    if m.n < 1:
        raise ValueError("cannot rank an empty explanation matrix")
    mean_abs = np.mean(np.abs(m.phi_matrix()), axis=0)
    order = sorted(range(len(m.columns)), key=lambda i: (-mean_abs[i], i))
    return [(m.columns[i], float(mean_abs[i])) for i in order]


@dataclass(frozen=True)
class InteractionChoice:
    column: str
    abs_r: float
    low_confidence: bool

LOW_CONFIDENCE_R = 0.1


def select_interaction(X, columns, feature: str) -> InteractionChoice:
    """Partner column with the largest |Pearson r| to ``feature``.

    Constant columns are excluded (their correlation is undefined); the
    choice is flagged low-confidence when even the best |r| is below 0.1.
    """
    X = np.asarray(X, dtype=float)
    columns = list(columns)
    if len(columns) < 2:
        raise ValueError("need at least two columns")
    j = columns.index(feature)
    xj = X[:, j]
    if np.std(xj) == 0:
        raise ValueError(f"feature {feature!r} is constant")
    best = None
    for i, name in enumerate(columns):
        if i == j or np.std(X[:, i]) == 0:
            continue
        r = abs(float(np.corrcoef(xj, X[:, i])[0, 1]))
        if best is None or r > best[1]:
            best = (name, r)
    if best is None:
        raise ValueError("no non-constant partner column available")
    return InteractionChoice(best[0], best[1], best[1] < LOW_CONFIDENCE_R)


def dependence_series(m: ShapMatrix, feature: str, interaction: str) -> DependenceSeries:
    """Per-row (feature value, SHAP value, interaction value) triples."""
    cols = list(m.columns)
    if feature not in cols or interaction not in cols:
        missing = feature if feature not in cols else interaction
        raise KeyError(missing)
    fi, ii = cols.index(feature), cols.index(interaction)
    points = tuple(
        (
            float(m.feature_values[k, fi]),
            float(m.rows[k].attributions[fi]),
            float(m.feature_values[k, ii]),
        )
        for k in range(m.n)
    )
    return DependenceSeries(feature, interaction, points)


def shap_matrix_to_csv(m: ShapMatrix, path, trial_ids=None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["trial_id", "base", "prediction"]
        header += [f"phi:{c}" for c in m.columns]
        header += [f"value:{c}" for c in m.columns]
        writer.writerow(header)
        for i, row in enumerate(m.rows):
            tid = trial_ids[i] if trial_ids else str(i)
            writer.writerow(
                [tid, repr(row.base), repr(row.prediction)]
                + [repr(float(v)) for v in row.attributions]
                + [repr(float(v)) for v in m.feature_values[i]]
            )


def dependence_to_csv(series: DependenceSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_value", "shap_value", "interaction_value"])
        for fv, sv, iv in series.points:
            writer.writerow([repr(fv), repr(sv), repr(iv)])
