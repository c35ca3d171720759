"""Diagnostic statistics over trial corpora: histograms with skew/uniformity
tests, Pearson matrices, objective correlations and 2D surface grids."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .space import ParamDef
from .study import Study, encode


@dataclass(frozen=True)
class HistogramStats:
    """Equal-width histogram over a parameter's declared bounds (encoded space)."""

    param: str
    edges: np.ndarray
    counts: np.ndarray
    n: int
    skew: float
    uniform_p: float


@dataclass(frozen=True)
class CorrelationMatrix:
    columns: tuple
    r: np.ndarray  # NaN where undefined (zero-variance column)
    defined: np.ndarray  # boolean mask, False where r is undefined

    @property
    def p(self):
        return len(self.columns)


@dataclass(frozen=True)
class SurfaceGrid:
    """Binned mean objective over a pair of encoded columns."""

    x_param: str
    y_param: str
    x_edges: np.ndarray
    y_edges: np.ndarray
    cell_mean: np.ndarray  # NaN marks an empty cell, never silently 0
    cell_count: np.ndarray


def fisher_pearson_skew(values) -> float:
    """g1 = m3 / m2^(3/2) with biased sample moments."""
    v = np.asarray(values, dtype=float)
    m = v.mean()
    m2 = np.mean((v - m) ** 2)
    if m2 == 0:
        return 0.0
    m3 = np.mean((v - m) ** 3)
    return float(m3 / m2**1.5)


def histogram(values, pdef: ParamDef, n_bins: int = 20) -> HistogramStats:
    """Histogram, skewness and KS-uniformity test over the declared bounds.

    ``values`` must already be in encoded space (log10 for log-scale params).
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot build a histogram from no values")
    if pdef.kind == "categorical":
        raise ValueError("histograms are for numeric parameters")
    lo, hi = pdef.encoded_bounds()
    if np.any(v < lo) or np.any(v > hi):
        raise ValueError("values outside declared bounds")
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(v, bins=edges)
    ks = sps.kstest(v, sps.uniform(loc=lo, scale=hi - lo).cdf)
    return HistogramStats(
        param=pdef.name,
        edges=edges,
        counts=counts,
        n=int(v.size),
        skew=fisher_pearson_skew(v),
        uniform_p=float(ks.pvalue),
    )


def pearson_matrix(X, columns=None) -> CorrelationMatrix:
    """Sample Pearson correlation for every column pair.

    Zero-variance columns yield flagged-undefined (NaN) entries rather
    than a silent 0; the diagonal of a defined column is exactly 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    p = X.shape[1]
    if columns is None:
        columns = tuple(f"x{i}" for i in range(p))
    sd = X.std(axis=0)
    ok = sd > 0
    r = np.full((p, p), np.nan)
    defined = np.zeros((p, p), dtype=bool)
    centered = X - X.mean(axis=0)
    for i in range(p):
        if not ok[i]:
            continue
        r[i, i] = 1.0
        defined[i, i] = True
        for j in range(i + 1, p):
            if not ok[j]:
                continue
            num = float(np.dot(centered[:, i], centered[:, j]))
            val = num / (X.shape[0] * sd[i] * sd[j])
            val = min(max(val, -1.0), 1.0)
            r[i, j] = r[j, i] = val
            defined[i, j] = defined[j, i] = True
    return CorrelationMatrix(tuple(columns), r, defined)


def objective_correlation(X, y, columns=None) -> dict:
    """Pearson r of each column against the objective; NaN for constants."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    if columns is None:
        columns = tuple(f"x{i}" for i in range(X.shape[1]))
    out = {}
    sy = y.std()
    cy = y - y.mean()
    for i, name in enumerate(columns):
        sx = X[:, i].std()
        if sx == 0 or sy == 0:
            out[name] = float("nan")
            continue
        num = float(np.dot(X[:, i] - X[:, i].mean(), cy))
        out[name] = min(max(num / (X.shape[0] * sx * sy), -1.0), 1.0)
    return out


def extreme_pairs(c: CorrelationMatrix, k: int = 2):
    """Top-k most positive and most negative off-diagonal pairs.

    Each unordered pair appears once; undefined entries are skipped. A pair
    lands on the positive side only if r > 0 and the negative side only if
    r < 0, so with few pairs either list may run short.
    """
    if c.p < 2:
        raise ValueError("need at least two columns")
    pairs = []
    for i in range(c.p):
        for j in range(i + 1, c.p):
            if c.defined[i, j]:
                pairs.append((c.columns[i], c.columns[j], float(c.r[i, j])))
    positive = sorted(
        [q for q in pairs if q[2] > 0], key=lambda q: (-q[2], q[0], q[1])
    )[:k]
    negative = sorted(
        [q for q in pairs if q[2] < 0], key=lambda q: (q[2], q[0], q[1])
    )[:k]
    return positive, negative


def surface_grid(study: Study, x_param: str, y_param: str, resolution: int = 25) -> SurfaceGrid:
    """Mean objective over a resolution x resolution grid of two encoded columns.

    Cells with no trials are NaN/count-0; the count-weighted mean over
    non-empty cells equals the global mean objective of the plotted trials.
    """
    if x_param == y_param:
        raise ValueError("surface needs two distinct columns")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    for name in (x_param, y_param):
        if study.space.column_param(name).kind == "categorical":
            raise ValueError(f"{name}: surfaces need numeric parameters")
    m = encode(study)
    xi, yi = m.column_index(x_param), m.column_index(y_param)
    xlo, xhi = study.space.column_bounds(x_param)
    ylo, yhi = study.space.column_bounds(y_param)
    x_edges = np.linspace(xlo, xhi, resolution + 1)
    y_edges = np.linspace(ylo, yhi, resolution + 1)
    ix = np.clip(np.searchsorted(x_edges, m.X[:, xi], side="right") - 1, 0, resolution - 1)
    iy = np.clip(np.searchsorted(y_edges, m.X[:, yi], side="right") - 1, 0, resolution - 1)
    cell_sum = np.zeros((resolution, resolution))
    cell_count = np.zeros((resolution, resolution), dtype=np.int64)
    for a, b, obj in zip(ix, iy, m.y):
        cell_sum[a, b] += obj
        cell_count[a, b] += 1
    with np.errstate(invalid="ignore"):
        cell_mean = np.where(cell_count > 0, cell_sum / np.maximum(cell_count, 1), np.nan)
    return SurfaceGrid(x_param, y_param, x_edges, y_edges, cell_mean, cell_count)


def correlation_matrix_to_csv(c: CorrelationMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(c.columns))
        for i, name in enumerate(c.columns):
            row = [name]
            for j in range(c.p):
                row.append(repr(float(c.r[i, j])) if c.defined[i, j] else "undefined")
            writer.writerow(row)


def histogram_to_csv(h: HistogramStats, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lower", "bin_upper", "count"])
        for i in range(len(h.counts)):
            writer.writerow([repr(float(h.edges[i])), repr(float(h.edges[i + 1])), int(h.counts[i])])
        writer.writerow(["skew", repr(h.skew), ""])
        writer.writerow(["uniform_p", repr(h.uniform_p), ""])
