"""End-to-end analysis: surrogate fitting, SHAP products, diagnostic
statistics, bound advice and a hashed, reproducible report bundle."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .advisor import (
    AdvisorThresholds,
    advise_from_shap,
    advise_from_skew,
    recommendations_to_json,
    render_recommendations,
)
from .explain import (
    dependence_series,
    dependence_to_csv,
    explain_all,
    rank_features,
    select_interaction,
    shap_matrix_to_csv,
)
from .forest import ForestParams, fit_forest, mse, r_squared, save_forest, train_test_split
from .stats import (
    correlation_matrix_to_csv,
    extreme_pairs,
    histogram,
    histogram_to_csv,
    objective_correlation,
    pearson_matrix,
    surface_grid,
)
from .study import Study, aggregate_duplicates, encode, filter_by_objective
from .svg import (
    render_correlation_matrix,
    render_dependence,
    render_histogram,
    render_shap_summary,
    render_surface,
)

# Filter defaults mirror the two thresholds the diagnostics are reported at:
# histograms/advice at 0.7, correlation structure at the stricter 0.8.
DEFAULT_HISTOGRAM_THRESHOLD = 0.7
DEFAULT_CORRELATION_THRESHOLD = 0.8


class InsufficientDataError(RuntimeError):
    """Too few trials survive the objective filter to analyse."""


@dataclass(frozen=True)
class AnalyzeOptions:
    filter_threshold: float = DEFAULT_HISTOGRAM_THRESHOLD
    corr_threshold: float = DEFAULT_CORRELATION_THRESHOLD
    min_trials: int = 50
    test_fraction: float = 0.2
    seed: int = 0
    forest: ForestParams | None = None
    thresholds: AdvisorThresholds = field(default_factory=AdvisorThresholds)
    top_features: int = 4
    top_pairs: int = 2
    n_bins: int = 20
    resolution: int = 25

    def resolved_forest(self) -> ForestParams:
        if self.forest is not None:
            return self.forest
        return ForestParams(seed=self.seed)


@dataclass(frozen=True)
class ReportBundle:
    directory: Path
    manifest: dict

    @property
    def files(self):
        return sorted(self.manifest["files"])

    def hash_of(self, name: str) -> str:
        return self.manifest["files"][name]


def _safe_name(column: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "_", column).strip("_")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_analyze(study: Study, options: AnalyzeOptions, out_dir) -> ReportBundle:
    """Run the whole diagnostic pipeline and write a report bundle.

    The surrogate and SHAP products use all aggregated trials; the
    objective filters apply to the histogram and correlation diagnostics
    (success-region statistics are meaningless on the full corpus).
    Reruns with identical inputs reproduce identical content hashes.
    """
    if len(study) == 0:
        raise InsufficientDataError("study contains no trials")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit_text(name: str, text: str) -> Path:
        path = out / name
        path.write_text(text)
        written.append(path)
        return path

    def track(name: str) -> Path:
        path = out / name
        written.append(path)
        return path

    aggregated = aggregate_duplicates(study)
    filtered = filter_by_objective(aggregated, options.filter_threshold)
    if len(filtered) < options.min_trials:
        raise InsufficientDataError(
            f"{len(filtered)} trials above objective {options.filter_threshold} "
            f"(need {options.min_trials}); lower --filter-threshold"
        )

    matrix = encode(aggregated)
    rng = np.random.default_rng(options.seed)
    train, test = train_test_split(matrix, options.test_fraction, rng)
    forest = fit_forest(
        train.X, train.y, options.resolved_forest(), columns=matrix.columns
    )
    test_pred = forest.predict_matrix(test.X)
    emit_text(
        "mse_report.json",
        json.dumps(
            {
                "n_train": train.n,
                "n_test": test.n,
                "test_mse": mse(test_pred, test.y),
                "test_r2": r_squared(test_pred, test.y),
                "base_value": forest.base_value,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    save_forest(forest, track("forest.json"))

    shap = explain_all(forest, matrix.X)
    shap_matrix_to_csv(shap, track("shap_matrix.csv"), trial_ids=matrix.trial_ids)
    emit_text("shap_summary.svg", render_shap_summary(shap))
    ranking = rank_features(shap)
    emit_text(
        "feature_ranking.json",
        json.dumps([{"column": c, "mean_abs_shap": v} for c, v in ranking], indent=2)
        + "\n",
    )

    recommendations = []
    numeric_cols = [
        name
        for name, p, _role in study.space.column_defs()
        if p.kind != "categorical"
    ]

    # SHAP dependence for the most important features, partner by correlation
    dependence = {}
    for colname, _imp in ranking[: options.top_features]:
        if colname not in numeric_cols:
            continue
        try:
            partner = select_interaction(matrix.X, matrix.columns, colname)
        except ValueError:
            continue
        series = dependence_series(shap, colname, partner.column)
        dependence[colname] = series
        stem = _safe_name(colname)
        dependence_to_csv(series, track(f"dependence_{stem}.csv"))
        emit_text(f"dependence_{stem}.svg", render_dependence(series))
        pdef = study.space.column_param(colname)
        if pdef.arity == 1:
            recommendations.append(
                advise_from_shap(series, pdef, options.thresholds)
            )

    # histograms + skew advice over the success region
    fmatrix = encode(filtered)
    for colname in numeric_cols:
        idx = fmatrix.column_index(colname)
        pdef = study.space.column_param(colname)
        if pdef.arity != 1:
            continue
        h = histogram(fmatrix.X[:, idx], pdef, options.n_bins)
        stem = _safe_name(colname)
        histogram_to_csv(h, track(f"histogram_{stem}.csv"))
        emit_text(f"histogram_{stem}.svg", render_histogram(h))
        recommendations.append(advise_from_skew(h, pdef, options.thresholds))

    # correlation structure, filtered (strict threshold) and unfiltered
    unfiltered_corr = pearson_matrix(matrix.X, matrix.columns)
    correlation_matrix_to_csv(unfiltered_corr, track("correlation_unfiltered.csv"))
    emit_text("correlation_unfiltered.svg", render_correlation_matrix(unfiltered_corr))
    obj_corr = objective_correlation(matrix.X, matrix.y, matrix.columns)
    emit_text(
        "objective_correlation.json",
        json.dumps(obj_corr, indent=2, sort_keys=True, default=str) + "\n",
    )

    corr_filtered_study = filter_by_objective(aggregated, options.corr_threshold)
    surface_pairs = []
    if len(corr_filtered_study) >= 2:
        cmatrix = encode(corr_filtered_study)
        filtered_corr = pearson_matrix(cmatrix.X, cmatrix.columns)
        correlation_matrix_to_csv(filtered_corr, track("correlation_filtered.csv"))
        top_pos, top_neg = extreme_pairs(filtered_corr, options.top_pairs)
        marked = [(a, b, "black") for a, b, _r in top_pos]
        marked += [(a, b, "white") for a, b, _r in top_neg]
        emit_text(
            "correlation_filtered.svg",
            render_correlation_matrix(filtered_corr, marked_pairs=marked),
        )
        emit_text(
            "extreme_pairs.json",
            json.dumps(
                {
                    "top_positive": [list(q) for q in top_pos],
                    "top_negative": [list(q) for q in top_neg],
                },
                indent=2,
            )
            + "\n",
        )
        surface_pairs = [(a, b) for a, b, _r in top_pos + top_neg]

    for a, b in surface_pairs:
        if study.space.column_param(a).kind == "categorical":
            continue
        if study.space.column_param(b).kind == "categorical":
            continue
        g = surface_grid(corr_filtered_study, a, b, options.resolution)
        emit_text(f"surface_{_safe_name(a)}__{_safe_name(b)}.svg", render_surface(g))

    emit_text("recommendations.json", recommendations_to_json(recommendations) + "\n")
    emit_text("recommendations.txt", render_recommendations(recommendations))

    metadata = {
        "tool": "hpolens",
        "version": __version__,
        "options": {
            "filter_threshold": options.filter_threshold,
            "corr_threshold": options.corr_threshold,
            "min_trials": options.min_trials,
            "test_fraction": options.test_fraction,
            "seed": options.seed,
            "forest": asdict(options.resolved_forest()),
            "thresholds": asdict(options.thresholds),
            "top_features": options.top_features,
            "top_pairs": options.top_pairs,
            "n_bins": options.n_bins,
            "resolution": options.resolution,
        },
        "n_trials_input": len(study),
        "n_trials_aggregated": len(aggregated),
        "n_trials_filtered": len(filtered),
    }
    emit_text("run_metadata.json", json.dumps(metadata, indent=2, sort_keys=True) + "\n")

    manifest = {
        "tool": "hpolens",
        "version": __version__,
        "options": metadata["options"],
        "files": {p.name: _sha256(p) for p in sorted(written)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ReportBundle(out, manifest)
