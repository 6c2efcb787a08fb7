"""Scenario grids: repeated searches, dispersion estimands, and validation.

A scenario bundles a search problem with an engine and a repetition count S.
Each repetition runs on its own seed path derived from (master seed, scenario
label, run index), so grids can be executed in any order or in parallel and
still reproduce bit-for-bit.  Summaries report the mean and SD of the
estimated minimum sample size, the coefficient of variation, and the achieved
performance of a model trained at the recommended size on a large fresh
validation sample.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datagen import generate, tune_binary, tune_continuous, tune_survival
from .engines import (
    MAX_FIT_ATTEMPTS,
    SearchProblem,
    SearchResult,
    run_search,
)
from .errors import EvaluationError, FitError, InvalidConfigError, MetricError, SimsizeError
from .metrics import Criterion, score_model
from .models import fit_cox, fit_linear, fit_logistic
from .seeding import SeedStream

DEFAULT_N_VALIDATION = 30_000

_FITTERS = {"binary": fit_logistic, "continuous": fit_linear, "survival": fit_cox}


@dataclass(frozen=True)
class Scenario:
    label: str
    problem: SearchProblem
    engine: str = "gp"
    S: int = 20
    n_validation: int = DEFAULT_N_VALIDATION
    validate: bool = True

    def __post_init__(self):
        if self.S < 1:
            raise InvalidConfigError("S must be at least 1")
        if self.n_validation < 1000:
            raise InvalidConfigError("n_validation must be at least 1000")


@dataclass(frozen=True)
class RunOutcome:
    run: int
    n_star: Optional[int]
    achieved: Optional[float]
    deviation_percent: Optional[float]
    evaluations_used: int
    wall_time: float
    fallback_flags: tuple[str, ...]
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class ScenarioSummary:
    scenario: Scenario
    mean_n_star: float
    sd_n_star: float
    cv_percent: float
    mean_deviation_percent: float
    runtimes: tuple[float, ...]
    per_run: tuple[RunOutcome, ...]
    failures: int

    def to_dict(self, include_timing: bool = False) -> dict:
        return {
            "label": self.scenario.label,
            "engine": self.scenario.engine,
            "S": self.scenario.S,
            "failures": self.failures,
            "mean_n_star": self.mean_n_star,
            "sd_n_star": self.sd_n_star,
            "cv_percent": self.cv_percent,
            "mean_deviation_percent": self.mean_deviation_percent,
            "mean_wall_time_s": (
                float(np.mean(self.runtimes)) if include_timing and self.runtimes else 0.0
            ),
        }


def cv(values) -> float:
    """Coefficient of variation in percent, with an S-1 denominator for the SD."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise InvalidConfigError("cv needs at least 2 values")
    mean = float(values.mean())
    if mean <= 0.0:
        raise InvalidConfigError("cv needs a positive mean")
    return float(values.std(ddof=1) / mean * 100.0)


def validate_recommendation(
    problem: SearchProblem,
    n_star: int,
    n_validation: int,
    stream: SeedStream,
) -> tuple[float, float]:
    """Train once at the recommended size, score on a fresh validation sample.

    Returns (achieved performance, percent deviation from the target), with
    the deviation negative when performance falls short.
    """
    fitter = _FITTERS[problem.family]
    model = None
    for attempt in range(MAX_FIT_ATTEMPTS):
        data = generate(
            problem.generator, n_star, stream.child("train").child("attempt", attempt)
        )
        try:
            model = fitter(data)
            break
        except FitError:
            continue
    if model is None:
        raise EvaluationError(
            f"validation training at n={n_star} exhausted {MAX_FIT_ATTEMPTS} attempts"
        )
    validation_set = generate(problem.generator, n_validation, stream.child("validation"))
    achieved = score_model(problem.metric, model, validation_set)
    deviation = (achieved - problem.tau) / problem.tau * 100.0
    return float(achieved), float(deviation)


def run_scenario(
    scenario: Scenario,
    threads: int = 1,
    evaluator_factory=None,
) -> ScenarioSummary:
    """Run S independent searches and summarise the dispersion estimands.

    ``evaluator_factory(problem, run_stream)`` swaps in a custom candidate
    evaluator for every run, the hook for user-defined simulation processes.
    """
    problem = scenario.problem
    root = SeedStream(problem.master_seed).child(scenario.label)
    outcomes: list[RunOutcome] = []
    for run_index in range(1, scenario.S + 1):
        run_stream = root.child("run", run_index)
        t0 = time.perf_counter()
        try:
            evaluator = (
                evaluator_factory(problem, run_stream) if evaluator_factory else None
            )
            result: SearchResult = run_search(
                problem,
                scenario.engine,
                threads=threads,
                stream=run_stream,
                evaluator=evaluator,
            )
            achieved = deviation = None
            if scenario.validate:
                achieved, deviation = validate_recommendation(
                    problem, result.n_star, scenario.n_validation, run_stream.child("validate")
                )
            outcomes.append(
                RunOutcome(
                    run=run_index,
                    n_star=result.n_star,
                    achieved=achieved,
                    deviation_percent=deviation,
                    evaluations_used=result.evaluations_used,
                    wall_time=time.perf_counter() - t0,
                    fallback_flags=result.fallback_flags,
                )
            )
        except (SimsizeError, MetricError) as exc:
            outcomes.append(
                RunOutcome(
                    run=run_index,
                    n_star=None,
                    achieved=None,
                    deviation_percent=None,
                    evaluations_used=0,
                    wall_time=time.perf_counter() - t0,
                    fallback_flags=(),
                    error=str(exc),
                )
            )

    good = [o for o in outcomes if not o.failed]
    n_stars = np.array([o.n_star for o in good], dtype=np.float64)
    if n_stars.size:
        mean_n = float(n_stars.mean())
        sd_n = float(n_stars.std(ddof=1)) if n_stars.size > 1 else math.nan
        cv_pct = sd_n / mean_n * 100.0 if n_stars.size > 1 and mean_n > 0 else math.nan
    else:
        mean_n = sd_n = cv_pct = math.nan
    deviations = [o.deviation_percent for o in good if o.deviation_percent is not None]
    mean_dev = float(np.mean(deviations)) if deviations else math.nan
    return ScenarioSummary(
        scenario=scenario,
        mean_n_star=mean_n,
        sd_n_star=sd_n,
        cv_percent=cv_pct,
        mean_deviation_percent=mean_dev,
        runtimes=tuple(o.wall_time for o in outcomes),
        per_run=tuple(outcomes),
        failures=len(outcomes) - len(good),
    )


# --- scenario grid configuration -----------------------------------------------


def build_scenario(spec: dict, master_seed: int = 0) -> Scenario:
    """Construct one scenario from a plain configuration mapping.

    Required keys: label, outcome, p, metric, target plus the outcome's
    strength parameters (prevalence + c_statistic, r2, or event_rate +
    c_statistic).  Optional keys fall back to package defaults.
    """
    outcome = spec["outcome"]
    p = int(spec["p"])
    p_noise = int(spec.get("p_noise", 0))
    if outcome == "binary":
        gen = tune_binary(float(spec["prevalence"]), float(spec["c_statistic"]), p, p_noise)
    elif outcome == "continuous":
        gen = tune_continuous(float(spec["r2"]), p, p_noise)
    elif outcome == "survival":
        gen = tune_survival(
            float(spec["event_rate"]),
            float(spec["c_statistic"]),
            p,
            p_noise,
            t_c=float(spec.get("censor_time", 1.0)),
        )
    else:
        raise InvalidConfigError(f"unknown outcome {outcome!r}")

    problem_kwargs = dict(
        generator=gen,
        metric=spec["metric"],
        tau=float(spec["target"]),
        criterion=Criterion(spec.get("criterion", "mean")),
        budget_B=int(spec.get("budget", 1000)),
        kappa=int(spec.get("reps", 20)),
        master_seed=int(spec.get("seed", master_seed)),
    )
    for key, field_name in (
        ("pilot_budget", "pilot_budget_B0"),
        ("pilot_iters", "pilot_max_iters_K"),
        ("n_test", "n_test"),
        ("bound_tolerance", "bound_tolerance_delta"),
    ):
        if key in spec:
            problem_kwargs[field_name] = spec[key]
    problem = SearchProblem(**problem_kwargs)
    return Scenario(
        label=str(spec["label"]),
        problem=problem,
        engine=str(spec.get("engine", "gp")).replace("-", "_"),
        S=int(spec.get("S", 20)),
        n_validation=int(spec.get("n_validation", DEFAULT_N_VALIDATION)),
        validate=bool(spec.get("validate", True)),
    )


def load_scenario_grid(path: str) -> list[Scenario]:
    """Read a scenario grid from a JSON config file (schema in the README)."""
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    master_seed = int(config.get("master_seed", 0))
    defaults = config.get("defaults", {})
    scenarios = []
    for entry in config["scenarios"]:
        merged = {**defaults, **entry}
        scenarios.append(build_scenario(merged, master_seed))
    return scenarios


# --- CSV output ------------------------------------------------------------------


def _fmt(value, spec: str) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(value, spec)


RUNS_CSV_COLUMNS = (
    "scenario_label",
    "run",
    "engine",
    "n_star",
    "achieved",
    "deviation_percent",
    "evaluations_used",
    "wall_time_s",
)

SUMMARY_CSV_COLUMNS = (
    "scenario_label",
    "engine",
    "S",
    "failures",
    "mean_n_star",
    "sd_n_star",
    "cv_percent",
    "mean_deviation_percent",
    "mean_wall_time_s",
)


def write_runs_csv(summaries: Sequence[ScenarioSummary], path, include_timing=False):
    """One row per (scenario, run); failed runs keep their row with blank stats."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUNS_CSV_COLUMNS)
        for summary in summaries:
            for run in summary.per_run:
                writer.writerow(
                    [
                        summary.scenario.label,
                        run.run,
                        summary.scenario.engine,
                        "" if run.n_star is None else run.n_star,
                        _fmt(run.achieved, ".6f"),
                        _fmt(run.deviation_percent, ".4f"),
                        run.evaluations_used,
                        _fmt(run.wall_time if include_timing else 0.0, ".6f"),
                    ]
                )


def write_summary_csv(summaries: Sequence[ScenarioSummary], path, include_timing=False):
    """One row per scenario with the across-run estimands."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_COLUMNS)
        for summary in summaries:
            d = summary.to_dict(include_timing=include_timing)
            writer.writerow(
                [
                    d["label"],
                    d["engine"],
                    d["S"],
                    d["failures"],
                    _fmt(d["mean_n_star"], ".4f"),
                    _fmt(d["sd_n_star"], ".4f"),
                    _fmt(d["cv_percent"], ".4f"),
                    _fmt(d["mean_deviation_percent"], ".4f"),
                    _fmt(d["mean_wall_time_s"], ".6f"),
                ]
            )
