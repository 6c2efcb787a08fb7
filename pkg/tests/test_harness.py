import json
import math

import numpy as np
import pytest

from simsize import (
    Criterion,
    InvalidConfigError,
    Scenario,
    SearchProblem,
    SeedStream,
    cv,
    load_scenario_grid,
    run_scenario,
    tune_continuous,
    validate_recommendation,
)
from simsize.harness import build_scenario, write_runs_csv, write_summary_csv
from conftest import OracleEvaluator


def small_problem(seed=3):
    return SearchProblem(
        generator=tune_continuous(0.5, p=3),
        metric="r2",
        tau=0.45,
        criterion=Criterion("mean"),
        budget_B=200,
        kappa=10,
        n_test=2000,
        master_seed=seed,
    )


# --- cv ---------------------------------------------------------------------


def test_cv_constant_vector():
    assert cv([5.0, 5.0, 5.0]) == 0.0


def test_cv_hand_formula():
    assert cv([90.0, 110.0]) == pytest.approx(14.142135623730951, abs=1e-9)


def test_cv_scale_invariance():
    values = [80.0, 95.0, 130.0]
    assert cv(np.multiply(values, 3.7)) == pytest.approx(cv(values), rel=1e-12)


def test_cv_domain_errors():
    with pytest.raises(InvalidConfigError):
        cv([1.0])
    with pytest.raises(InvalidConfigError):
        cv([-1.0, 1.0])


# --- validation ----------------------------------------------------------------


def test_validation_deviation_sign(stream):
    problem = small_problem()
    achieved, deviation = validate_recommendation(problem, 400, 20_000, stream.child("v"))
    assert deviation == pytest.approx((achieved - problem.tau) / problem.tau * 100.0)


def test_validation_formula():
    # achieved 0.95 against target 1.0 is a -5% deviation
    assert (0.95 - 1.0) / 1.0 * 100.0 == pytest.approx(-5.0)


def test_validation_deterministic(stream):
    problem = small_problem()
    a = validate_recommendation(problem, 300, 10_000, stream.child("v2"))
    b = validate_recommendation(problem, 300, 10_000, stream.child("v2"))
    assert a == b


# --- scenarios ---------------------------------------------------------------------


def test_scenario_deterministic_oracle_zero_cv(saturating_curve):
    scenario = Scenario(
        label="oracle",
        problem=small_problem(seed=1),
        engine="bisection",
        S=3,
        validate=False,
    )
    summary = run_scenario(
        scenario, evaluator_factory=lambda problem, stream: OracleEvaluator(saturating_curve)
    )
    assert summary.sd_n_star == 0.0
    assert summary.cv_percent == 0.0
    assert summary.failures == 0
    assert len(summary.per_run) == 3


def test_scenario_summary_reproducible():
    scenario = Scenario(
        label="repro", problem=small_problem(seed=21), engine="bisection", S=2,
        n_validation=5000,
    )
    a = run_scenario(scenario)
    b = run_scenario(scenario)
    assert a.mean_n_star == b.mean_n_star
    assert [r.n_star for r in a.per_run] == [r.n_star for r in b.per_run]
    assert [r.achieved for r in a.per_run] == [r.achieved for r in b.per_run]


def test_scenario_mean_sd_formulas(saturating_curve):
    scenario = Scenario(
        label="stats", problem=small_problem(seed=22), engine="bisection", S=2,
        n_validation=5000, validate=False,
    )
    summary = run_scenario(scenario)
    values = np.array([r.n_star for r in summary.per_run], dtype=float)
    assert summary.mean_n_star == pytest.approx(values.mean())
    if values.size > 1 and values.std() > 0:
        assert summary.cv_percent == pytest.approx(cv(values), rel=1e-12)


# --- config grids -------------------------------------------------------------------


def test_build_scenario_and_grid(tmp_path):
    config = {
        "master_seed": 99,
        "defaults": {"budget": 120, "reps": 10, "S": 2, "n_test": 1500, "validate": False},
        "scenarios": [
            {
                "label": "cont",
                "outcome": "continuous",
                "r2": 0.5,
                "p": 3,
                "metric": "r2",
                "target": 0.4,
                "engine": "bisection",
            }
        ],
    }
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(config))
    scenarios = load_scenario_grid(str(path))
    assert len(scenarios) == 1
    sc = scenarios[0]
    assert sc.problem.master_seed == 99
    assert sc.problem.budget_B == 120
    assert sc.engine == "bisection"
    summary = run_scenario(sc)
    assert summary.failures == 0


def test_build_scenario_rejects_unknown_outcome():
    with pytest.raises(InvalidConfigError):
        build_scenario({"label": "x", "outcome": "ordinal", "p": 2, "metric": "r2", "target": 0.5})


# --- CSV output -----------------------------------------------------------------------


def test_csv_outputs_are_deterministic(tmp_path, saturating_curve):
    scenario = Scenario(
        label="csv", problem=small_problem(seed=23), engine="bisection", S=2,
        validate=False,
    )
    factory = lambda problem, stream: OracleEvaluator(saturating_curve)
    paths = []
    for tag in ("a", "b"):
        summary = run_scenario(scenario, evaluator_factory=factory)
        runs = tmp_path / f"runs_{tag}.csv"
        agg = tmp_path / f"summary_{tag}.csv"
        write_runs_csv([summary], runs)
        write_summary_csv([summary], agg)
        paths.append((runs.read_bytes(), agg.read_bytes()))
    assert paths[0] == paths[1]
    header = paths[0][0].decode().splitlines()[0]
    assert header == (
        "scenario_label,run,engine,n_star,achieved,deviation_percent,"
        "evaluations_used,wall_time_s"
    )
    # timings zeroed by default for byte-level reproducibility
    for line in paths[0][0].decode().splitlines()[1:]:
        assert line.endswith(",0.000000")
