"""Tunable data-generating processes for binary, continuous, and survival outcomes.

Predictors are always independent standard normals.  The linear predictor is
``eta = X @ beta + beta0`` where the first ``p_signal`` coefficients share a
common value and the remaining ``p_noise`` are zero.  Tuners pick the free
parameters so that the large-sample prevalence / event rate and the
large-sample performance of a correctly specified model hit user targets:

* continuous  -- closed form for the common coefficient from the target R^2;
* binary      -- numerical optimisation of (mu, sigma) of the linear predictor
                 against target prevalence and target C-statistic, both
                 computed by deterministic quadrature;
* survival    -- numerical optimisation of (lambda0, sigma) against target
                 event rate and target C-index, evaluated on a fixed-seed
                 simulated cohort (common random numbers keep the objective
                 smooth and deterministic).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from ._concordance import concordance_index
from .errors import InvalidConfigError, TuningError
from .seeding import SeedStream

FAMILIES = ("binary", "continuous", "survival")

# Internal simulation used by the survival tuning objective: size and seed are
# fixed so tuning is a deterministic function of its arguments.
SURVIVAL_TUNING_N = 200_000
SURVIVAL_TUNING_SEED = 1803

# Convergence ceilings for the tuning objectives.  The binary objective is
# quadrature-exact, the survival one carries Monte Carlo noise of order
# (1/sqrt(N))^2 per squared term, hence the looser ceiling.
BINARY_TUNING_TOL = 1e-6
SURVIVAL_TUNING_TOL = 1e-4
TUNING_MAX_ITER = 500


@dataclass(frozen=True)
class GeneratorTargets:
    """Targets realised by a tuned generator."""

    prevalence_or_event_rate: Optional[float]
    performance_target: float


@dataclass(frozen=True)
class GeneratorParams:
    """Fully tuned description of one data-generating process."""

    family: str
    p: int
    p_noise: int
    beta_signal: float
    achieved: GeneratorTargets        # what the tuner actually realised
    targets: Optional[GeneratorTargets] = None  # what the user asked for
    beta0: float = 0.0            # intercept (binary only)
    mu: float = 0.0               # mean of linear predictor (binary only)
    sigma: float = 0.0            # SD of linear predictor
    residual_sd: float = 1.0      # continuous only, fixed at 1
    lambda0: Optional[float] = None   # baseline hazard rate (survival only)
    t_c: Optional[float] = None       # administrative censoring time (survival only)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfigError(f"unknown outcome family {self.family!r}")
        if self.p_signal < 1:
            raise InvalidConfigError("need at least one signal predictor")
        if self.family == "survival":
            if self.lambda0 is None or self.lambda0 <= 0:
                raise InvalidConfigError("survival generator needs lambda0 > 0")
            if self.t_c is None or self.t_c <= 0:
                raise InvalidConfigError("survival generator needs t_c > 0")

    @property
    def p_signal(self) -> int:
        return self.p - self.p_noise

    @property
    def requested(self) -> GeneratorTargets:
        """User-requested targets, falling back to the realised ones."""
        return self.targets if self.targets is not None else self.achieved

    def coefficients(self) -> np.ndarray:
        """Full coefficient vector: signal coefficients then zeros."""
        beta = np.zeros(self.p)
        beta[: self.p_signal] = self.beta_signal
        return beta

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "p": self.p,
            "p_noise": self.p_noise,
            "p_signal": self.p_signal,
            "beta_signal": self.beta_signal,
            "beta0": self.beta0,
            "mu": self.mu,
            "sigma": self.sigma,
            "residual_sd": self.residual_sd,
            "lambda0": self.lambda0,
            "t_c": self.t_c,
            "achieved": {
                "prevalence_or_event_rate": self.achieved.prevalence_or_event_rate,
                "performance_target": self.achieved.performance_target,
            },
            "targets": None
            if self.targets is None
            else {
                "prevalence_or_event_rate": self.targets.prevalence_or_event_rate,
                "performance_target": self.targets.performance_target,
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorParams":
        ach = d.get("achieved") or {}
        tgt = d.get("targets")
        return cls(
            family=d["family"],
            p=int(d["p"]),
            p_noise=int(d.get("p_noise", 0)),
            beta_signal=float(d["beta_signal"]),
            beta0=float(d.get("beta0") or 0.0),
            mu=float(d.get("mu") or 0.0),
            sigma=float(d.get("sigma") or 0.0),
            residual_sd=float(d.get("residual_sd") or 1.0),
            lambda0=None if d.get("lambda0") is None else float(d["lambda0"]),
            t_c=None if d.get("t_c") is None else float(d["t_c"]),
            achieved=GeneratorTargets(
                prevalence_or_event_rate=ach.get("prevalence_or_event_rate"),
                performance_target=float(ach.get("performance_target", math.nan)),
            ),
            targets=None
            if tgt is None
            else GeneratorTargets(
                prevalence_or_event_rate=tgt.get("prevalence_or_event_rate"),
                performance_target=float(tgt.get("performance_target", math.nan)),
            ),
        )

    @classmethod
    def from_json(cls, s: str) -> "GeneratorParams":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class Dataset:
    """Predictor matrix plus the outcome block for one simulated cohort."""

    family: str
    X: np.ndarray
    y: Optional[np.ndarray] = None       # binary labels or continuous responses
    times: Optional[np.ndarray] = None   # survival only
    events: Optional[np.ndarray] = None  # survival only

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _validate_counts(p: int, p_noise: int):
    if p < 1:
        raise InvalidConfigError("p must be at least 1")
    if p_noise < 0 or p_noise >= p:
        raise InvalidConfigError("p_noise must satisfy 0 <= p_noise < p")


def tune_continuous(r2_target: float, p: int, p_noise: int = 0) -> GeneratorParams:
    """Closed-form tuning of the common coefficient for a target large-sample R^2.

    With unit residual variance and independent standard-normal predictors,
    Var(eta) = p_signal * beta^2 and R^2 = Var(eta) / (Var(eta) + 1), which
    inverts to beta = sqrt(R^2 / (p_signal * (1 - R^2))).
    """
    _validate_counts(p, p_noise)
    if not 0.0 < r2_target < 1.0:
        raise InvalidConfigError("r2_target must lie strictly inside (0, 1)")
    p_signal = p - p_noise
    beta = math.sqrt(r2_target / (p_signal * (1.0 - r2_target)))
    sigma = beta * math.sqrt(p_signal)
    return GeneratorParams(
        family="continuous",
        p=p,
        p_noise=p_noise,
        beta_signal=beta,
        sigma=sigma,
        residual_sd=1.0,
        achieved=GeneratorTargets(None, r2_target),
        targets=GeneratorTargets(None, r2_target),
    )


# --- binary tuning -----------------------------------------------------------

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)
_GH_WEIGHTS = _GH_WEIGHTS / math.sqrt(math.pi)


def _expected_prevalence(mu: float, sigma: float) -> float:
    """E[logit^-1(eta)] for eta ~ N(mu, sigma^2), by 64-node Gauss-Hermite."""
    eta = mu + sigma * math.sqrt(2.0) * _GH_NODES
    return float(np.dot(_GH_WEIGHTS, expit(eta)))


def _expected_cstat(mu: float, sigma: float, n_grid: int = 4001) -> float:
    """Concordance of the true linear predictor between cases and controls.

    Evaluates C = P(eta_case > eta_control) where the case/control densities
    are the prevalence-weighted tilts of N(mu, sigma^2).  The pair probability
    is written as a nested one-dimensional integral and computed on a dense
    trapezoid grid, which keeps the discontinuous pair ordering exact.
    """
    if sigma <= 0.0:
        return 0.5
    x = np.linspace(mu - 12.0 * sigma, mu + 12.0 * sigma, n_grid)
    phi = np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    p = expit(x)
    f_case = phi * p
    f_ctrl = phi * (1.0 - p)
    dx = x[1] - x[0]
    seg = 0.5 * (f_case[1:] + f_case[:-1]) * dx
    # mass of the case density strictly above each grid point
    upper = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    pi = float(np.trapezoid(f_case, x))
    num = float(np.trapezoid(f_ctrl * upper, x))
    return num / (pi * (1.0 - pi))


def tune_binary(
    prevalence_target: float,
    c_target: float,
    p: int,
    p_noise: int = 0,
) -> GeneratorParams:
    """Tune (mu, sigma) of the linear predictor to hit prevalence and C-statistic.

    Minimises the summed squared error of the two quadrature-computed targets
    with Nelder-Mead on (mu, log sigma).  Raises :class:`TuningError` if the
    objective does not reach ``BINARY_TUNING_TOL``.
    """
    _validate_counts(p, p_noise)
    if not 0.0 < prevalence_target < 1.0:
        raise InvalidConfigError("prevalence_target must lie in (0, 1)")
    if not 0.5 < c_target < 1.0:
        raise InvalidConfigError("c_target must lie strictly inside (0.5, 1)")

    def objective(t):
        mu, log_sigma = t
        sigma = math.exp(log_sigma)
        return (
            (_expected_cstat(mu, sigma) - c_target) ** 2
            + (_expected_prevalence(mu, sigma) - prevalence_target) ** 2
        )

    x0 = np.array([logit(prevalence_target), 0.0])
    simplex = np.array([x0, x0 + [0.5, 0.0], x0 + [0.0, 0.5]])
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options=dict(
            initial_simplex=simplex,
            maxiter=TUNING_MAX_ITER,
            xatol=1e-10,
            fatol=1e-16,
        ),
    )
    mu, sigma = float(res.x[0]), float(math.exp(res.x[1]))
    p_signal = p - p_noise
    params = GeneratorParams(
        family="binary",
        p=p,
        p_noise=p_noise,
        beta_signal=sigma / math.sqrt(p_signal),
        beta0=mu,
        mu=mu,
        sigma=sigma,
        achieved=GeneratorTargets(
            _expected_prevalence(mu, sigma), _expected_cstat(mu, sigma)
        ),
        targets=GeneratorTargets(prevalence_target, c_target),
    )
    if res.fun > BINARY_TUNING_TOL:
        raise TuningError(
            f"binary tuning stalled at objective {res.fun:.3e} "
            f"(target <= {BINARY_TUNING_TOL:.0e})",
            best_params=params,
            objective=float(res.fun),
        )
    return params


# --- survival tuning ---------------------------------------------------------


def tune_survival(
    event_rate_target: float,
    c_target: float,
    p: int,
    p_noise: int = 0,
    t_c: float = 1.0,
) -> GeneratorParams:
    """Tune (lambda0, sigma) against target event rate and Harrell C-index.

    Event times are exponential with rate ``lambda0 * exp(eta)`` and censored
    administratively at ``t_c``.  The objective simulates a fixed-seed cohort
    of ``SURVIVAL_TUNING_N`` subjects, reusing the same normal and uniform
    draws at every evaluation so Nelder-Mead sees a smooth deterministic
    surface.
    """
    _validate_counts(p, p_noise)
    if not 0.0 < event_rate_target < 1.0:
        raise InvalidConfigError("event_rate_target must lie in (0, 1)")
    if not 0.5 <= c_target < 1.0:
        raise InvalidConfigError("c_target must lie in [0.5, 1)")
    if t_c <= 0:
        raise InvalidConfigError("t_c must be positive")

    rng = np.random.default_rng(SURVIVAL_TUNING_SEED)
    z = rng.standard_normal(SURVIVAL_TUNING_N)
    neg_log_u = -np.log(rng.random(SURVIVAL_TUNING_N))

    def simulate(lambda0, sigma):
        eta = sigma * z
        latent = neg_log_u / (lambda0 * np.exp(eta))
        times = np.minimum(latent, t_c)
        events = (latent <= t_c).astype(np.int64)
        return eta, times, events

    def objective(t):
        lambda0, sigma = math.exp(t[0]), math.exp(t[1])
        eta, times, events = simulate(lambda0, sigma)
        rate = events.mean()
        if events.sum() < 2:
            return 4.0
        c = concordance_index(eta, times, events)
        return (rate - event_rate_target) ** 2 + (c - c_target) ** 2

    lambda0_guess = -math.log1p(-event_rate_target) / t_c
    x0 = np.array([math.log(lambda0_guess), 0.0])
    simplex = np.array([x0, x0 + [0.5, 0.0], x0 + [0.0, 0.5]])
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options=dict(
            initial_simplex=simplex,
            maxiter=TUNING_MAX_ITER,
            xatol=1e-6,
            fatol=1e-12,
        ),
    )
    lambda0, sigma = float(math.exp(res.x[0])), float(math.exp(res.x[1]))
    eta, times, events = simulate(lambda0, sigma)
    achieved_rate = float(events.mean())
    achieved_c = float(concordance_index(eta, times, events)) if sigma > 0 else 0.5
    p_signal = p - p_noise
    params = GeneratorParams(
        family="survival",
        p=p,
        p_noise=p_noise,
        beta_signal=sigma / math.sqrt(p_signal),
        sigma=sigma,
        lambda0=lambda0,
        t_c=t_c,
        achieved=GeneratorTargets(achieved_rate, achieved_c),
        targets=GeneratorTargets(event_rate_target, c_target),
    )
    if res.fun > SURVIVAL_TUNING_TOL:
        raise TuningError(
            f"survival tuning stalled at objective {res.fun:.3e} "
            f"(target <= {SURVIVAL_TUNING_TOL:.0e})",
            best_params=params,
            objective=float(res.fun),
        )
    return params


def generate(params: GeneratorParams, n: int, stream: SeedStream) -> Dataset:
    """Sample one dataset of size ``n`` from a tuned generator.

    Pure function of ``(params, n, stream)``: identical inputs yield
    bit-identical datasets.  Draw order is fixed (predictors first, then the
    outcome noise).
    """
    if n < 1:
        raise InvalidConfigError("n must be at least 1")
    rng = stream.generator()
    X = rng.standard_normal((n, params.p))
    eta = X[:, : params.p_signal].sum(axis=1) * params.beta_signal

    if params.family == "binary":
        eta = eta + params.beta0
        y = (rng.random(n) < expit(eta)).astype(np.float64)
        return Dataset(family="binary", X=X, y=y)

    if params.family == "continuous":
        y = eta + params.residual_sd * rng.standard_normal(n)
        return Dataset(family="continuous", X=X, y=y)

    latent = rng.exponential(1.0, n) / (params.lambda0 * np.exp(eta))
    times = np.minimum(latent, params.t_c)
    events = (latent <= params.t_c).astype(np.int64)
    return Dataset(family="survival", X=X, times=times, events=events)
