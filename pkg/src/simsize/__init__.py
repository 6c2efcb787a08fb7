"""simsize: simulation-based minimum sample size estimation for prediction models.

Find the smallest training sample size at which a prediction model meets a
performance target, either on average or with 80% assurance.  The package
wires together tunable data generators, the three default model families,
rank- and calibration-based metrics, and three budgeted search engines
(Gaussian-process surrogate, bisection, and a hybrid of the two).
"""

from .datagen import (
    Dataset,
    GeneratorParams,
    GeneratorTargets,
    generate,
    tune_binary,
    tune_continuous,
    tune_survival,
)
from .engines import (
    SearchProblem,
    SearchResult,
    evaluate_candidate,
    find_bounds,
    heuristic_start,
    run_search,
    search_bisection,
    search_gp,
    search_gp_bs,
)
from .errors import (
    EvaluationError,
    FitError,
    InvalidConfigError,
    MetricError,
    SimsizeError,
    SurrogateError,
    TuningError,
)
from .harness import (
    Scenario,
    ScenarioSummary,
    cv,
    load_scenario_grid,
    run_scenario,
    validate_recommendation,
)
from .metrics import (
    AggregateEstimate,
    Criterion,
    aggregate,
    auc,
    bootstrap_se,
    c_index,
    calibration_slope,
    r2_oos,
    score_model,
)
from .models import FittedModel, fit_cox, fit_linear, fit_logistic, linear_predictor
from .seeding import SeedStream
from .surrogate import GPModel, GPObservation, acquire_next, crossing_estimate, fit_gp, posterior

__version__ = "0.1.0"

__all__ = [
    "AggregateEstimate",
    "Criterion",
    "Dataset",
    "EvaluationError",
    "FitError",
    "FittedModel",
    "GPModel",
    "GPObservation",
    "GeneratorParams",
    "GeneratorTargets",
    "InvalidConfigError",
    "MetricError",
    "Scenario",
    "ScenarioSummary",
    "SearchProblem",
    "SearchResult",
    "SeedStream",
    "SimsizeError",
    "SurrogateError",
    "TuningError",
    "acquire_next",
    "aggregate",
    "auc",
    "bootstrap_se",
    "c_index",
    "calibration_slope",
    "crossing_estimate",
    "cv",
    "evaluate_candidate",
    "find_bounds",
    "fit_cox",
    "fit_gp",
    "fit_linear",
    "fit_logistic",
    "generate",
    "heuristic_start",
    "linear_predictor",
    "load_scenario_grid",
    "posterior",
    "r2_oos",
    "run_scenario",
    "run_search",
    "score_model",
    "search_bisection",
    "search_gp",
    "search_gp_bs",
    "tune_binary",
    "tune_continuous",
    "tune_survival",
    "validate_recommendation",
]
