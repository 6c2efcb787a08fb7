import math

import numpy as np
import pytest

from simsize import (
    GeneratorParams,
    GeneratorTargets,
    InvalidConfigError,
    SeedStream,
    generate,
    tune_binary,
    tune_continuous,
    tune_survival,
)
from simsize.datagen import _expected_cstat, _expected_prevalence


# --- continuous tuning: closed form -----------------------------------------


def test_continuous_unit_coefficient():
    params = tune_continuous(0.5, p=1, p_noise=0)
    assert params.beta_signal == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "r2,p,expected",
    [(0.2, 10, math.sqrt(0.2 / (10 * 0.8))), (0.7, 100, math.sqrt(0.7 / (100 * 0.3)))],
)
def test_continuous_closed_form(r2, p, expected):
    params = tune_continuous(r2, p=p, p_noise=0)
    assert params.beta_signal == pytest.approx(expected, rel=1e-12)
    assert params.achieved.performance_target == r2
    assert params.residual_sd == 1.0


def test_continuous_rejects_bad_domain():
    with pytest.raises(InvalidConfigError):
        tune_continuous(0.0, p=5)
    with pytest.raises(InvalidConfigError):
        tune_continuous(1.0, p=5)
    with pytest.raises(InvalidConfigError):
        tune_continuous(0.5, p=5, p_noise=5)


def test_noise_predictors_have_zero_coefficients():
    params = tune_continuous(0.3, p=6, p_noise=2)
    beta = params.coefficients()
    assert np.all(beta[:4] == params.beta_signal)
    assert np.all(beta[4:] == 0.0)
    assert params.p_signal == 4


# --- binary tuning ------------------------------------------------------------


def test_binary_rejects_boundary_c():
    with pytest.raises(InvalidConfigError):
        tune_binary(0.5, 0.5, p=10)
    with pytest.raises(InvalidConfigError):
        tune_binary(0.0, 0.8, p=10)


def test_binary_quadrature_targets_hit():
    params = tune_binary(0.2, 0.8, p=10)
    assert params.achieved.prevalence_or_event_rate == pytest.approx(0.2, abs=1e-6)
    assert params.achieved.performance_target == pytest.approx(0.8, abs=1e-6)
    assert params.beta_signal == pytest.approx(params.sigma / math.sqrt(10), rel=1e-12)
    assert params.beta0 == params.mu


def test_binary_monte_carlo_oracle():
    # 10^6-draw check of prevalence and of the AUC of the true linear predictor
    params = tune_binary(0.2, 0.8, p=10)
    rng = np.random.default_rng(911)
    eta = rng.normal(params.mu, params.sigma, 1_000_000)
    prob = 1.0 / (1.0 + np.exp(-eta))
    y = rng.random(1_000_000) < prob
    assert y.mean() == pytest.approx(0.2, abs=0.005)
    from simsize import auc

    assert auc(eta, y) == pytest.approx(0.8, abs=0.005)


def test_quadrature_matches_simple_cases():
    # sigma -> 0 collapses to expit(mu); C degenerates to 1/2
    assert _expected_prevalence(0.0, 1e-12) == pytest.approx(0.5, abs=1e-9)
    assert _expected_cstat(0.0, 0.0) == 0.5
    # symmetric prevalence at mu=0 for any sigma
    assert _expected_prevalence(0.0, 2.0) == pytest.approx(0.5, abs=1e-9)


# --- survival tuning ------------------------------------------------------------


def test_survival_null_signal_closed_form():
    # c target at the 1/2 boundary forces sigma ~ 0; the event rate then
    # inverts in closed form: rate = 1 - exp(-lambda0 * t_c)
    params = tune_survival(0.8, 0.5, p=10, t_c=1.0)
    assert params.sigma < 0.05
    assert params.lambda0 == pytest.approx(-math.log(0.2), abs=0.02)
    assert params.achieved.prevalence_or_event_rate == pytest.approx(0.8, abs=0.005)


def test_survival_monte_carlo_oracle():
    params = tune_survival(0.4, 0.8, p=10, t_c=1.0)
    rng = np.random.default_rng(912)
    n = 1_000_000
    eta = params.sigma * rng.standard_normal(n)
    latent = rng.exponential(1.0, n) / (params.lambda0 * np.exp(eta))
    events = (latent <= 1.0).astype(np.int64)
    times = np.minimum(latent, 1.0)
    assert events.mean() == pytest.approx(0.4, abs=0.01)
    from simsize import c_index

    assert c_index(eta, times, events) == pytest.approx(0.8, abs=0.01)


def test_survival_rejects_bad_domain():
    with pytest.raises(InvalidConfigError):
        tune_survival(0.5, 0.4, p=5)
    with pytest.raises(InvalidConfigError):
        tune_survival(0.5, 0.8, p=5, t_c=0.0)


# --- generate -------------------------------------------------------------------


def test_generate_is_deterministic(stream):
    params = tune_continuous(0.4, p=3)
    a = generate(params, 50, stream.child("d"))
    b = generate(params, 50, stream.child("d"))
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)
    c = generate(params, 50, stream.child("other"))
    assert not np.array_equal(a.y, c.y)


def test_generate_rejects_zero_n(stream):
    params = tune_continuous(0.4, p=3)
    with pytest.raises(InvalidConfigError):
        generate(params, 0, stream)


def test_generate_binary_null_model_prevalence(stream):
    # beta_signal = 0 with intercept logit(0.2): prevalence check at 10^6
    params = GeneratorParams(
        family="binary",
        p=2,
        p_noise=0,
        beta_signal=0.0,
        beta0=math.log(0.2 / 0.8),
        mu=math.log(0.2 / 0.8),
        sigma=0.0,
        achieved=GeneratorTargets(0.2, 0.5),
    )
    data = generate(params, 1_000_000, stream.child("bin"))
    assert data.y.mean() == pytest.approx(0.2, abs=0.002)


def test_generate_survival_event_rate_and_censoring(stream):
    params = tune_survival(0.8, 0.5, p=10, t_c=1.0)
    data = generate(params, 1_000_000, stream.child("surv"))
    assert data.events.mean() == pytest.approx(0.8, abs=0.002)
    assert data.times.max() <= params.t_c
    # censored exactly when the latent event time exceeded t_c
    assert np.all(data.times[data.events == 0] == params.t_c)


def test_generate_continuous_population_r2(stream):
    params = tune_continuous(0.7, p=10)
    data = generate(params, 200_000, stream.child("cont"))
    eta = data.X @ params.coefficients()
    resid = data.y - eta
    r2 = eta.var() / (eta.var() + resid.var())
    assert r2 == pytest.approx(0.7, abs=0.005)


def test_json_round_trip():
    params = tune_survival(0.4, 0.8, p=5, t_c=2.0)
    clone = GeneratorParams.from_json(params.to_json())
    assert clone == params
