"""Gaussian-process surrogate over (sample size, aggregated performance).

A squared-exponential kernel on log(n) with per-observation noise taken from
the bootstrap variance of each aggregate.  Performance curves flatten as n
grows, so the log transform keeps the process roughly stationary.  The
surrogate supplies three things to the search engines: posterior prediction,
the smallest sample size whose posterior mean reaches the target, and the
next candidate to evaluate (highest posterior uncertainty near the target
crossing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

from .errors import SurrogateError
from .seeding import SeedStream

JITTER = 1e-8
GRID_SIZE = 512
HYPER_GRID = 5  # initialisation grid is HYPER_GRID x HYPER_GRID


@dataclass(frozen=True)
class GPObservation:
    n: int
    g_hat: float
    noise_var: float = 0.0


@dataclass(frozen=True)
class GPModel:
    observations: tuple[GPObservation, ...]
    signal_variance: float
    length_scale: float
    mean_const: float
    # cached solver state (inputs on the log-n scale)
    z: np.ndarray
    alpha: np.ndarray
    chol: tuple
    log_marginal_likelihood: float

    def evaluated_sizes(self) -> set[int]:
        return {obs.n for obs in self.observations}


class CrossingEstimate(NamedTuple):
    n: int
    crossed: bool


def _kernel(z1: np.ndarray, z2: np.ndarray, s2: float, ell: float) -> np.ndarray:
    d2 = (z1[:, None] - z2[None, :]) ** 2
    return s2 * np.exp(-0.5 * d2 / ell**2)


def _nll_and_grad(theta, z, yc, noise):
    """Negative log marginal likelihood and its gradient in (log s2, log ell)."""
    s2, ell = math.exp(theta[0]), math.exp(theta[1])
    d2 = (z[:, None] - z[None, :]) ** 2
    corr = np.exp(-0.5 * d2 / ell**2)
    K = s2 * corr + np.diag(noise)
    try:
        chol = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e12, np.zeros(2)
    alpha = cho_solve(chol, yc)
    n = len(yc)
    nll = (
        0.5 * float(yc @ alpha)
        + float(np.sum(np.log(np.diag(chol[0]))))
        + 0.5 * n * math.log(2.0 * math.pi)
    )
    Kinv = cho_solve(chol, np.eye(n))
    inner = Kinv - np.outer(alpha, alpha)
    dK_ds2 = s2 * corr
    dK_dell = s2 * corr * (d2 / ell**2)
    grad = np.array(
        [0.5 * np.sum(inner * dK_ds2), 0.5 * np.sum(inner * dK_dell)]
    )
    return nll, grad


def fit_gp(observations: Sequence[GPObservation]) -> GPModel:
    """Fit kernel hyperparameters by maximising the log marginal likelihood.

    The negative likelihood is evaluated on a 5x5 grid over (signal variance,
    length scale); gradient ascent starts from the best grid point, so the
    returned likelihood can never fall below any grid value.
    """
    obs = tuple(observations)
    if len(obs) < 2:
        raise SurrogateError("need at least 2 observations to fit the surrogate")
    ns = np.array([o.n for o in obs], dtype=np.float64)
    if np.unique(ns).size < 2:
        raise SurrogateError("observations must cover at least 2 distinct sizes")
    z = np.log(ns)
    y = np.array([o.g_hat for o in obs], dtype=np.float64)
    noise = np.array([max(o.noise_var, 0.0) for o in obs], dtype=np.float64) + JITTER
    mean_const = float(y.mean())
    yc = y - mean_const

    span = max(float(z.max() - z.min()), 1e-3)
    vy = max(float(yc.var()), 1e-10)
    bounds = [
        (math.log(1e-12), math.log(max(1e4 * vy, 1e-6))),
        (math.log(0.02 * span), math.log(3.0 * span)),
    ]
    best_theta, best_val = None, math.inf
    for s2 in np.geomspace(0.1 * vy, 10.0 * vy, HYPER_GRID):
        for ell in np.geomspace(0.05 * span, 2.0 * span, HYPER_GRID):
            theta = np.array([math.log(s2), math.log(ell)])
            val, _ = _nll_and_grad(theta, z, yc, noise)
            if val < best_val:
                best_theta, best_val = theta, val
    res = minimize(
        _nll_and_grad,
        best_theta,
        args=(z, yc, noise),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
    )
    theta = res.x if res.fun <= best_val else best_theta
    nll_final, _ = _nll_and_grad(theta, z, yc, noise)
    s2, ell = math.exp(theta[0]), math.exp(theta[1])

    K = _kernel(z, z, s2, ell) + np.diag(noise)
    chol = cho_factor(K, lower=True)
    alpha = cho_solve(chol, yc)
    return GPModel(
        observations=obs,
        signal_variance=s2,
        length_scale=ell,
        mean_const=mean_const,
        z=z,
        alpha=alpha,
        chol=chol,
        log_marginal_likelihood=-nll_final,
    )


def posterior_grid(gp: GPModel, n_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and sd at an array of sample sizes."""
    zq = np.log(np.asarray(n_query, dtype=np.float64))
    ks = _kernel(zq, gp.z, gp.signal_variance, gp.length_scale)
    mean = gp.mean_const + ks @ gp.alpha
    v = cho_solve(gp.chol, ks.T)
    var = gp.signal_variance - np.einsum("ij,ji->i", ks, v)
    return mean, np.sqrt(np.clip(var, 0.0, None))


def posterior(gp: GPModel, n_query) -> tuple[float, float]:
    """Posterior mean and sd of aggregated performance at one sample size."""
    mean, sd = posterior_grid(gp, np.array([float(n_query)]))
    return float(mean[0]), float(sd[0])


def _log_grid(n_min: int, n_max: int) -> np.ndarray:
    grid = np.unique(np.round(np.geomspace(n_min, n_max, GRID_SIZE)).astype(np.int64))
    return np.clip(grid, n_min, n_max)


def crossing_estimate(gp: GPModel, bounds: tuple[int, int], tau: float) -> CrossingEstimate:
    """Smallest integer in bounds whose posterior mean reaches the target.

    Scans a log-spaced grid for the first crossing, then refines down to the
    exact integer by bisection on the posterior mean.  Falls back to the upper
    bound (flagged) when no grid point crosses.
    """
    n_min, n_max = int(bounds[0]), int(bounds[1])
    grid = _log_grid(n_min, n_max)
    mean, _ = posterior_grid(gp, grid)
    hits = np.nonzero(mean >= tau)[0]
    if hits.size == 0:
        return CrossingEstimate(n_max, False)
    k = int(hits[0])
    if k == 0:
        return CrossingEstimate(int(grid[0]), True)
    lo, hi = int(grid[k - 1]), int(grid[k])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        m, _ = posterior(gp, mid)
        if m >= tau:
            hi = mid
        else:
            lo = mid
    return CrossingEstimate(hi, True)


def acquire_next(
    gp: GPModel,
    bounds: tuple[int, int],
    tau: float,
    stream: Optional[SeedStream] = None,
) -> int:
    """Pick the next sample size to evaluate.

    Maximises posterior sd weighted by closeness of the posterior mean to the
    target, over a window of a factor of two around the current crossing
    estimate.  Already-evaluated sizes are replaced by the nearest unevaluated
    grid point while any remain; once the whole grid has been visited, the
    argmax point is returned again (extra replications sharpen the noisiest
    estimate).  Deterministic; the stream argument is reserved for randomised
    acquisition variants.
    """
    n_min, n_max = int(bounds[0]), int(bounds[1])
    n_hat = crossing_estimate(gp, bounds, tau).n
    w_lo = max(n_min, n_hat // 2)
    w_hi = min(n_max, 2 * n_hat)
    if w_lo > w_hi:
        w_lo, w_hi = n_min, n_max
    grid = _log_grid(w_lo, max(w_hi, w_lo))
    mean, sd = posterior_grid(gp, grid)
    score = sd * np.exp(-((mean - tau) ** 2) / (2.0 * (sd**2 + 1e-12)))
    candidate = int(grid[int(np.argmax(score))])
    evaluated = gp.evaluated_sizes()
    if candidate in evaluated:
        full = _log_grid(n_min, n_max)
        open_sizes = np.array([n for n in full if int(n) not in evaluated])
        if open_sizes.size:
            dist = np.abs(open_sizes - candidate)
            candidate = int(open_sizes[int(np.argmin(dist))])
    return candidate
