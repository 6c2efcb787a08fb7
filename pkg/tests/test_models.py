import math

import numpy as np
import pytest

from simsize import (
    Dataset,
    FitError,
    GeneratorParams,
    GeneratorTargets,
    InvalidConfigError,
    SeedStream,
    fit_cox,
    fit_linear,
    fit_logistic,
    generate,
    linear_predictor,
    tune_continuous,
)


# --- linear ----------------------------------------------------------------


def test_linear_exact_interpolation():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 2))
    y = 2.0 * X[:, 0] - X[:, 1] + 3.0
    model = fit_linear(Dataset("continuous", X, y=y))
    assert model.coefficients == pytest.approx([2.0, -1.0], abs=1e-10)
    assert model.intercept == pytest.approx(3.0, abs=1e-10)


def test_linear_matches_normal_equations():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((50, 3))
    y = rng.standard_normal(50)
    model = fit_linear(Dataset("continuous", X, y=y))
    Z = np.column_stack([np.ones(50), X])
    oracle = np.linalg.solve(Z.T @ Z, Z.T @ y)
    assert model.intercept == pytest.approx(oracle[0], abs=1e-8)
    assert model.coefficients == pytest.approx(oracle[1:], abs=1e-8)
    # residual orthogonality to the design columns
    resid = y - linear_predictor(model, X)
    assert np.abs(Z.T @ resid).max() < 1e-8 * max(1.0, np.abs(y).max())


def test_linear_degenerate_sizes():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3, 3))
    with pytest.raises(FitError):
        fit_linear(Dataset("continuous", X, y=np.ones(3)))
    # rank-deficient design: duplicated column
    Xd = np.column_stack([X[:, 0], X[:, 0]])
    with pytest.raises(FitError):
        fit_linear(Dataset("continuous", np.vstack([Xd] * 4), y=np.ones(12)))


# --- logistic ----------------------------------------------------------------


def test_logistic_two_by_two_closed_form():
    # event counts 10/100 at x=0 and 30/100 at x=1
    x = np.concatenate([np.zeros(100), np.ones(100)])[:, None]
    y = np.concatenate(
        [np.r_[np.ones(10), np.zeros(90)], np.r_[np.ones(30), np.zeros(70)]]
    )
    model = fit_logistic(Dataset("binary", x, y=y))
    assert model.intercept == pytest.approx(math.log(10 / 90), abs=1e-8)
    assert model.coefficients[0] == pytest.approx(
        math.log((30 / 70) / (10 / 90)), abs=1e-8
    )
    assert model.converged and not model.diagnostics


def test_logistic_symmetric_independence():
    # balanced fully crossed design: y independent of x by construction
    x = np.array([0.0, 0.0, 1.0, 1.0])[:, None]
    y = np.array([0.0, 1.0, 0.0, 1.0])
    model = fit_logistic(Dataset("binary", np.vstack([x] * 5), y=np.tile(y, 5)))
    assert model.coefficients[0] == pytest.approx(0.0, abs=1e-8)
    assert model.intercept == pytest.approx(0.0, abs=1e-8)


def test_logistic_perfect_separation_flagged():
    x = np.linspace(-2, 2, 40)[:, None]
    y = (x[:, 0] > 0).astype(float)
    model = fit_logistic(Dataset("binary", x, y=y))
    assert model.diagnostics.get("separation") is True
    assert not model.converged


def test_logistic_degenerate_counts():
    x = np.linspace(0, 1, 10)[:, None]
    with pytest.raises(FitError):
        fit_logistic(Dataset("binary", x, y=np.r_[np.ones(1), np.zeros(9)]))
    with pytest.raises(FitError):
        fit_logistic(Dataset("binary", x, y=np.ones(10)))


def test_logistic_loglik_ascent():
    # step-halving guarantees the log-likelihood never decreases
    rng = np.random.default_rng(4)
    X = rng.standard_normal((200, 3))
    eta = X @ np.array([1.0, -0.5, 0.25])
    y = (rng.random(200) < 1 / (1 + np.exp(-eta))).astype(float)
    model = fit_logistic(Dataset("binary", X, y=y))
    assert model.converged


# --- cox ------------------------------------------------------------------------


def test_cox_matches_grid_search_oracle():
    # 4 subjects, all events: maximise the explicit 4-term log partial likelihood
    X = np.array([[1.0], [0.0], [1.0], [0.0]])
    times = np.array([1.0, 2.0, 3.0, 4.0])
    events = np.array([1, 1, 1, 1])
    model = fit_cox(Dataset("survival", X, times=times, events=events))

    def log_pl(beta):
        eta = X[:, 0] * beta
        total = 0.0
        for i in range(4):
            risk = eta[i:]  # sorted by time already
            total += eta[i] - math.log(np.exp(risk).sum())
        return total

    grid = np.linspace(-5, 5, 100001)
    oracle = grid[np.argmax([log_pl(b) for b in grid])]
    assert model.coefficients[0] == pytest.approx(oracle, abs=1e-4)


def test_cox_no_covariate_variance():
    X = np.ones((10, 1))
    times = np.linspace(1, 10, 10)
    events = np.ones(10, dtype=int)
    with pytest.raises(FitError):
        fit_cox(Dataset("survival", X, times=times, events=events))


def test_cox_null_signal_recovers_zero(stream):
    params = GeneratorParams(
        family="survival",
        p=3,
        p_noise=0,
        beta_signal=0.0,
        sigma=0.0,
        lambda0=1.6,
        t_c=1.0,
        achieved=GeneratorTargets(0.8, 0.5),
    )
    data = generate(params, 100_000, stream.child("coxnull"))
    model = fit_cox(data)
    assert np.abs(model.coefficients).max() < 0.02


def test_cox_requires_events():
    X = np.random.default_rng(5).standard_normal((10, 2))
    times = np.full(10, 1.0)
    events = np.zeros(10, dtype=int)
    with pytest.raises(FitError):
        fit_cox(Dataset("survival", X, times=times, events=events))


def test_cox_monotone_likelihood_raises():
    # perfectly ordered risk: partial likelihood has no finite maximiser
    X = np.linspace(-1, 1, 12)[::-1][:, None]
    times = np.linspace(1, 12, 12)
    events = np.ones(12, dtype=int)
    with pytest.raises(FitError):
        fit_cox(Dataset("survival", X, times=times, events=events))


def test_cox_handles_ties_deterministically(stream):
    rng = stream.child("ties").generator()
    X = rng.standard_normal((60, 2))
    times = rng.integers(1, 6, 60).astype(float)
    events = rng.integers(0, 2, 60)
    events[:4] = 1
    data = Dataset("survival", X, times=times, events=events)
    a = fit_cox(data)
    b = fit_cox(data)
    assert np.array_equal(a.coefficients, b.coefficients)


# --- linear predictor --------------------------------------------------------------


def test_linear_predictor_constant_and_identity():
    model_dict = dict(
        family="continuous",
        coefficients=np.zeros(3),
        intercept=2.5,
        converged=True,
        iterations=0,
    )
    from simsize.models import FittedModel

    model = FittedModel(**model_dict)
    X = np.random.default_rng(6).standard_normal((7, 3))
    assert linear_predictor(model, X) == pytest.approx(np.full(7, 2.5))

    data = Dataset("continuous", X, y=X.sum(axis=1))
    fitted = fit_linear(data)
    assert linear_predictor(fitted, X) == pytest.approx(data.y, abs=1e-10)


def test_linear_predictor_hand_computation():
    from simsize.models import FittedModel

    model = FittedModel(
        family="survival",
        coefficients=np.array([2.0, -1.0]),
        intercept=None,
        converged=True,
        iterations=1,
    )
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert linear_predictor(model, X) == pytest.approx([0.0, 2.0])


def test_linear_predictor_dimension_mismatch():
    model = fit_linear(
        Dataset(
            "continuous",
            np.random.default_rng(7).standard_normal((10, 2)),
            y=np.arange(10.0),
        )
    )
    with pytest.raises(InvalidConfigError):
        linear_predictor(model, np.zeros((4, 3)))


def test_fitters_are_deterministic(stream):
    params = tune_continuous(0.5, p=4)
    data = generate(params, 200, stream.child("det"))
    a, b = fit_linear(data), fit_linear(data)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert a.to_json() == b.to_json()
