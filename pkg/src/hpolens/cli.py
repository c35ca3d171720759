"""Command-line surface.

Exit codes: 0 success, 2 validation error (bad file, bad trial, bad
arguments), 3 insufficient data after objective filtering.
"""

from __future__ import annotations

import json
import statistics
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .advisor import AdvisorThresholds, advise_from_skew, recommendations_to_json, render_recommendations
from .explain import explain_all, rank_features, select_interaction, shap_matrix_to_csv
from .forest import ForestParams, fit_forest, save_forest
from .pipeline import (
    DEFAULT_CORRELATION_THRESHOLD,
    DEFAULT_HISTOGRAM_THRESHOLD,
    AnalyzeOptions,
    InsufficientDataError,
    run_analyze,
)
from .space import SpaceError, load_space
from .stats import histogram, pearson_matrix, surface_grid
from .study import (
    StudyParseError,
    TrialValidationError,
    aggregate_duplicates,
    dump_study,
    encode,
    filter_by_objective,
    parse_study,
)
from .svg import (
    render_correlation_matrix,
    render_dependence,
    render_histogram,
    render_shap_summary,
    render_surface,
)
from .synthetic import BUILTIN_SPECS, simulate_study, spec_from_dict
from .tables import bundled_space_path

EXIT_VALIDATION = 2
EXIT_INSUFFICIENT = 3


def _fail_validation(exc) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_VALIDATION)


def _load_space_arg(space_arg: str):
    try:
        path = bundled_space_path(space_arg) or Path(space_arg)
        return load_space(path)
    except (OSError, SpaceError, json.JSONDecodeError, KeyError) as exc:
        _fail_validation(exc)


def _load_study(study_file: str, space_arg: str, negate: bool = False):
    space = _load_space_arg(space_arg)
    try:
        with open(study_file) as fh:
            return parse_study(fh, space, negate_objective=negate)
    except (OSError, StudyParseError, TrialValidationError) as exc:
        _fail_validation(exc)


def _load_spec(name_or_path: str):
    if name_or_path in BUILTIN_SPECS:
        return BUILTIN_SPECS[name_or_path]()
    try:
        with open(name_or_path) as fh:
            return spec_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, ValueError, SpaceError) as exc:
        _fail_validation(exc)


@click.group()
@click.version_option(__version__)
@click.option("--seed", type=int, default=0, show_default=True, help="Master random seed.")
@click.option(
    "--filter-threshold",
    type=float,
    default=None,
    help=f"Objective filter (default {DEFAULT_HISTOGRAM_THRESHOLD} for histograms, "
    f"{DEFAULT_CORRELATION_THRESHOLD} for correlations).",
)
@click.option("--out", type=click.Path(), default=None, help="Output file or directory.")
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv", "json", "svg"]),
    default="json",
    show_default=True,
)
@click.pass_context
def main(ctx, seed, filter_threshold, out, fmt):
    """Hyperparameter-study diagnostics and search-bound refinement."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, filter_threshold=filter_threshold, out=out, fmt=fmt)


@main.command()
@click.argument("study_file", type=click.Path(exists=True))
@click.option("--space", "space_arg", required=True, help="Search-space JSON (path or bundled name).")
@click.option("--negate-objective", is_flag=True, help="Map y -> 1-y for minimisation studies.")
@click.pass_context
def ingest(ctx, study_file, space_arg, negate_objective):
    """Validate a JSON-lines trial file against a search space."""
    study = _load_study(study_file, space_arg, negate_objective)
    out = ctx.obj["out"]
    if out:
        with open(out, "w") as fh:
            dump_study(study, fh)
    objs = [t.objective for t in study.trials]
    click.echo(
        json.dumps(
            {
                "n_trials": len(study),
                "n_params": len(study.space),
                "objective_mean": statistics.fmean(objs) if objs else None,
                "objective_max": max(objs) if objs else None,
            }
        )
    )


@main.command()
@click.option("--spec", "spec_arg", required=True, help="Synthetic spec JSON or builtin name.")
@click.option("--sampler", type=click.Choice(["random", "tpe"]), default="random", show_default=True)
@click.option("--n-trials", type=int, default=100, show_default=True)
@click.pass_context
def simulate(ctx, spec_arg, sampler, n_trials):
    """Generate a study by sampling a synthetic objective."""
    spec = _load_spec(spec_arg)
    study = simulate_study(spec, sampler=sampler, n_trials=n_trials, seed=ctx.obj["seed"])
    out = ctx.obj["out"]
    if out:
        with open(out, "w") as fh:
            dump_study(study, fh)
    else:
        dump_study(study, sys.stdout)


@main.command("tpe-demo")
@click.option("--n-trials", type=int, default=100, show_default=True)
@click.pass_context
def tpe_demo(ctx, n_trials):
    """Race TPE against uniform random on the 1-D quadratic landscape."""
    spec = BUILTIN_SPECS["quadratic-1d"]()
    seed = ctx.obj["seed"]
    tpe = simulate_study(spec, "tpe", n_trials, seed)
    rnd = simulate_study(spec, "random", n_trials, seed)
    click.echo(
        json.dumps(
            {
                "n_trials": n_trials,
                "tpe_best": max(t.objective for t in tpe.trials),
                "random_best": max(t.objective for t in rnd.trials),
                "optimum": 1.0,
            }
        )
    )


def _analyze_options(ctx, **overrides):
    threshold = ctx.obj["filter_threshold"]
    kwargs = dict(seed=ctx.obj["seed"])
    if threshold is not None:
        kwargs["filter_threshold"] = threshold
        kwargs["corr_threshold"] = threshold
    kwargs.update(overrides)
    return AnalyzeOptions(**kwargs)


@main.command()
@click.argument("study_file", type=click.Path(exists=True))
@click.option("--space", "space_arg", required=True)
@click.option("--min-trials", type=int, default=50, show_default=True)
@click.option("--n-trees", type=int, default=None, help="Override surrogate forest size.")
@click.pass_context
def analyze(ctx, study_file, space_arg, min_trials, n_trees):
    """Run the full diagnostic pipeline into a report bundle directory."""
    study = _load_study(study_file, space_arg)
    out = ctx.obj["out"] or "hpolens-report"
    forest_params = ForestParams(seed=ctx.obj["seed"], n_trees=n_trees) if n_trees else None
    options = _analyze_options(ctx, min_trials=min_trials, forest=forest_params)
    try:
        bundle = run_analyze(study, options, out)
    except InsufficientDataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INSUFFICIENT)
    click.echo(json.dumps({"out": str(bundle.directory), "n_files": len(bundle.files)}))


@main.command()
@click.argument("study_file", type=click.Path(exists=True))
@click.option("--space", "space_arg", required=True)
@click.pass_context
def advise(ctx, study_file, space_arg):
    """Histogram-based bound advice over the success region."""
    study = _load_study(study_file, space_arg)
    threshold = ctx.obj["filter_threshold"]
    if threshold is None:
        threshold = DEFAULT_HISTOGRAM_THRESHOLD
    filtered = filter_by_objective(aggregate_duplicates(study), threshold)
    if len(filtered) == 0:
        click.echo("error: no trials above the objective filter", err=True)
        sys.exit(EXIT_INSUFFICIENT)
    matrix = encode(filtered)
    recs = []
    for name, pdef, role in study.space.column_defs():
        if pdef.kind == "categorical" or role != "value":
            continue
        h = histogram(matrix.X[:, matrix.column_index(name)], pdef)
        recs.append(advise_from_skew(h, pdef, AdvisorThresholds()))
    text = recommendations_to_json(recs) if ctx.obj["fmt"] == "json" else render_recommendations(recs)
    out = ctx.obj["out"]
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        click.echo(text)


@main.command()
@click.argument("study_file", type=click.Path(exists=True))
@click.option("--space", "space_arg", required=True)
@click.option("--n-trees", type=int, default=200, show_default=True)
@click.pass_context
def explain(ctx, study_file, space_arg, n_trees):
    """Fit the surrogate and export per-trial SHAP attributions as CSV."""
    study = _load_study(study_file, space_arg)
    matrix = encode(aggregate_duplicates(study))
    forest = fit_forest(
        matrix.X,
        matrix.y,
        ForestParams(n_trees=n_trees, seed=ctx.obj["seed"]),
        columns=matrix.columns,
    )
    shap = explain_all(forest, matrix.X)
    out = ctx.obj["out"] or "shap_matrix.csv"
    shap_matrix_to_csv(shap, out, trial_ids=matrix.trial_ids)
    save_forest(forest, str(Path(out).with_suffix("")) + "_forest.json")
    ranking = rank_features(shap)
    click.echo(json.dumps({"out": out, "top_feature": ranking[0][0]}))


@main.command()
@click.argument(
    "artifact",
    type=click.Choice(["histogram", "matrix", "surface", "shap-summary", "dependence"]),
)
@click.argument("study_file", type=click.Path(exists=True))
@click.option("--space", "space_arg", required=True)
@click.option("--param", default=None, help="Column for histogram/dependence.")
@click.option("--x-param", default=None)
@click.option("--y-param", default=None)
@click.option("--n-trees", type=int, default=100, show_default=True)
@click.pass_context
def render(ctx, artifact, study_file, space_arg, param, x_param, y_param, n_trees):
    """Render one diagnostic figure as a standalone SVG."""
    study = _load_study(study_file, space_arg)
    aggregated = aggregate_duplicates(study)
    threshold = ctx.obj["filter_threshold"]
    out = ctx.obj["out"] or f"{artifact}.svg"
    try:
        if artifact == "histogram":
            if not param:
                raise click.UsageError("--param is required for histograms")
            filtered = (
                filter_by_objective(aggregated, threshold) if threshold is not None else aggregated
            )
            matrix = encode(filtered)
            doc = render_histogram(
                histogram(
                    matrix.X[:, matrix.column_index(param)],
                    study.space.column_param(param),
                )
            )
        elif artifact == "matrix":
            filtered = (
                filter_by_objective(aggregated, threshold) if threshold is not None else aggregated
            )
            matrix = encode(filtered)
            doc = render_correlation_matrix(pearson_matrix(matrix.X, matrix.columns))
        elif artifact == "surface":
            if not (x_param and y_param):
                raise click.UsageError("--x-param and --y-param are required for surfaces")
            filtered = (
                filter_by_objective(aggregated, threshold) if threshold is not None else aggregated
            )
            doc = render_surface(surface_grid(filtered, x_param, y_param))
        else:
            matrix = encode(aggregated)
            forest = fit_forest(
                matrix.X,
                matrix.y,
                ForestParams(n_trees=n_trees, seed=ctx.obj["seed"]),
                columns=matrix.columns,
            )
            shap = explain_all(forest, matrix.X)
            if artifact == "shap-summary":
                doc = render_shap_summary(shap)
            else:
                if not param:
                    raise click.UsageError("--param is required for dependence plots")
                partner = select_interaction(matrix.X, matrix.columns, param)
                from .explain import dependence_series

                doc = render_dependence(dependence_series(shap, param, partner.column))
    except (KeyError, ValueError) as exc:
        _fail_validation(exc)
    Path(out).write_text(doc)
    click.echo(json.dumps({"out": str(out)}))


if __name__ == "__main__":
    main()
