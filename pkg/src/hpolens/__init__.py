"""hpolens: diagnostics and search-bound refinement for HPO studies.

Ingests trial corpora, fits a from-scratch random-forest surrogate of the
objective, computes exact Shapley attributions per hyperparameter, runs
histogram/correlation/surface diagnostics and emits bound-refinement
recommendations. A built-in TPE sampler plus synthetic objectives let the
toolkit generate and then analyse its own studies end to end.
"""

__version__ = "0.1.0"

from .space import ParamDef, SearchSpace, SpaceError, load_space, save_space
from .study import (
    EncodedMatrix,
    Study,
    StudyParseError,
    TrialRecord,
    TrialValidationError,
    aggregate_duplicates,
    coverage,
    decode_row,
    encode,
    filter_by_objective,
    parse_study,
)
from .tpe import (
    ParzenEstimator,
    ParzenPair,
    TpeConfig,
    density,
    expected_improvement,
    fit_parzen,
    split_trials,
    suggest,
    suggest_config,
)
from .forest import (
    ForestParams,
    RegressionForest,
    fit_forest,
    fit_tree,
    load_forest,
    mse,
    predict,
    save_forest,
    train_test_split,
)
from .explain import (
    DependenceSeries,
    ShapMatrix,
    ShapRow,
    dependence_series,
    explain_all,
    forest_shapley_bruteforce,
    rank_features,
    select_interaction,
    shapley_bruteforce,
    tree_shap,
)
from .stats import (
    CorrelationMatrix,
    HistogramStats,
    SurfaceGrid,
    extreme_pairs,
    fisher_pearson_skew,
    histogram,
    objective_correlation,
    pearson_matrix,
    surface_grid,
)
from .advisor import (
    AdvisorThresholds,
    BoundRecommendation,
    advise_from_shap,
    advise_from_skew,
)
from .synthetic import (
    SyntheticSpec,
    eval_synthetic,
    planted_importance_spec,
    planted_interaction_spec,
    quadratic_1d_spec,
    simulate_study,
)
from .pipeline import AnalyzeOptions, InsufficientDataError, ReportBundle, run_analyze
