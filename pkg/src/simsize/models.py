"""Model fitting for the three default prediction model families.

All fitters are deterministic and pure: the same dataset always produces a
bit-identical :class:`FittedModel`.  Each one raises :class:`FitError` on
degenerate samples so the caller can redraw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .datagen import Dataset
from .errors import FitError, InvalidConfigError

SCORE_TOL = 1e-8
MAX_ITER = 25
MAX_HALVINGS = 20
SEPARATION_BOUND = 20.0


@dataclass(frozen=True)
class FittedModel:
    family: str
    coefficients: np.ndarray
    intercept: Optional[float]      # None for survival models
    converged: bool
    iterations: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "coefficients": [float(b) for b in self.coefficients],
            "intercept": self.intercept,
            "converged": self.converged,
            "iterations": self.iterations,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def linear_predictor(model: FittedModel, X: np.ndarray) -> np.ndarray:
    """Return X @ beta + intercept (intercept omitted for survival models)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.coefficients):
        raise InvalidConfigError(
            f"predictor matrix has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"model expects {len(model.coefficients)}"
        )
    eta = X @ model.coefficients
    if model.intercept is not None:
        eta = eta + model.intercept
    return eta


def fit_linear(data: Dataset) -> FittedModel:
    """Ordinary least squares of the response on (1, X)."""
    if data.family != "continuous":
        raise InvalidConfigError("fit_linear expects a continuous-outcome dataset")
    n, p = data.X.shape
    if n <= p + 1:
        raise FitError(f"degenerate sample: n={n} with p={p} predictors")
    Z = np.column_stack([np.ones(n), data.X])
    coef, _, rank, _ = np.linalg.lstsq(Z, data.y, rcond=None)
    if rank < p + 1:
        raise FitError(f"rank-deficient design (rank {rank} < {p + 1})")
    return FittedModel(
        family="continuous",
        coefficients=coef[1:],
        intercept=float(coef[0]),
        converged=True,
        iterations=0,
    )


def _logistic_loglik(eta: np.ndarray, y: np.ndarray) -> float:
    # -log(1 + exp(-eta)) for events, -log(1 + exp(eta)) otherwise
    return float(-np.sum(np.logaddexp(0.0, np.where(y > 0.5, -eta, eta))))


def fit_logistic(data: Dataset) -> FittedModel:
    """Logistic regression by iteratively reweighted least squares.

    Newton steps with step-halving; stops when the score norm drops below
    ``SCORE_TOL``.  Fits that hit the iteration cap with any coefficient
    beyond ``SEPARATION_BOUND`` are kept and flagged as separated.
    """
    if data.family != "binary":
        raise InvalidConfigError("fit_logistic expects a binary-outcome dataset")
    y = data.y
    n_events = int(np.sum(y > 0.5))
    if n_events < 2 or len(y) - n_events < 2:
        raise FitError(
            f"degenerate sample: {n_events} events / {len(y) - n_events} non-events"
        )
    Z = np.column_stack([np.ones(len(y)), data.X])
    beta = np.zeros(Z.shape[1])
    eta = Z @ beta
    ll = _logistic_loglik(eta, y)
    converged = False
    iterations = 0
    while iterations < MAX_ITER:
        prob = expit(eta)
        score = Z.T @ (y - prob)
        if np.linalg.norm(score) < SCORE_TOL:
            converged = True
            break
        w = np.clip(prob * (1.0 - prob), 1e-10, None)
        hess = Z.T @ (w[:, None] * Z)
        try:
            step = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, score, rcond=None)[0]
        scale = 1.0
        slack = 1e-12 * max(1.0, abs(ll))
        for _ in range(MAX_HALVINGS):
            cand = beta + scale * step
            cand_eta = Z @ cand
            cand_ll = _logistic_loglik(cand_eta, y)
            if cand_ll >= ll - slack:
                break
            scale *= 0.5
        beta, eta, ll = cand, cand_eta, cand_ll
        iterations += 1
    if not converged:
        converged = bool(np.linalg.norm(Z.T @ (y - expit(eta))) < SCORE_TOL)

    separated = bool(np.max(np.abs(beta)) > SEPARATION_BOUND)
    diagnostics = {"separation": True} if separated else {}
    if not converged and not separated:
        raise FitError("logistic fit did not converge")
    return FittedModel(
        family="binary",
        coefficients=beta[1:],
        intercept=float(beta[0]),
        converged=converged,
        iterations=iterations,
        diagnostics=diagnostics,
    )


def _cox_quantities(beta, Xs, ts, ds, group_starts, group_ends):
    """Breslow log partial likelihood with gradient and Hessian.

    Inputs must be sorted by decreasing observed time so every risk set is a
    prefix; ``group_starts``/``group_ends`` delimit tied-time groups.  The
    Hessian's risk-set averages are contracted into one per-subject weight so
    everything reduces to cumulative sums and two matrix products.
    """
    n, p = Xs.shape
    eta = Xs @ beta
    shift = float(eta.max())
    w = np.exp(eta - shift)
    cum0 = np.cumsum(w)
    cum1 = np.cumsum(w[:, None] * Xs, axis=0)

    d_group = np.add.reduceat(ds, group_starts).astype(np.float64)
    has_events = d_group > 0
    d_ev = d_group[has_events]
    ends = group_ends[has_events]
    s0 = cum0[ends]
    means = cum1[ends] / s0[:, None]

    event_mask = ds == 1
    ll = float(eta[event_mask].sum()) - float(d_ev @ (np.log(s0) + shift))
    grad = Xs[event_mask].sum(axis=0) - d_ev @ means

    # sum_t d_t * S2(t)/S0(t) == X' diag(w * c) X where c_i accumulates
    # d_t/S0(t) over the event times whose risk set contains subject i
    a = np.zeros(n)
    a[ends] = d_ev / s0
    c = np.cumsum(a[::-1])[::-1]
    term1 = (Xs * (w * c)[:, None]).T @ Xs
    term2 = (means * d_ev[:, None]).T @ means
    hess = term2 - term1
    return ll, grad, hess


def _tie_groups(ts):
    """Start and end indices of tied-time groups in a descending-sorted array."""
    n = len(ts)
    change = np.nonzero(ts[1:] != ts[:-1])[0]
    group_starts = np.concatenate([[0], change + 1])
    group_ends = np.concatenate([change, [n - 1]])
    return group_starts, group_ends


def fit_cox(data: Dataset) -> FittedModel:
    """Cox proportional hazards by Newton-Raphson on the Breslow partial likelihood."""
    if data.family != "survival":
        raise InvalidConfigError("fit_cox expects a survival-outcome dataset")
    events = data.events
    n_events = int(events.sum())
    if n_events < 2:
        raise FitError(f"degenerate sample: {n_events} events")
    event_rows = data.X[events == 1]
    if np.all(event_rows.max(axis=0) - event_rows.min(axis=0) == 0.0):
        raise FitError("no covariate varies among event rows")

    order = np.argsort(-data.times, kind="stable")
    Xs = np.ascontiguousarray(data.X[order])
    ts = data.times[order]
    ds = events[order]
    group_starts, group_ends = _tie_groups(ts)

    p = Xs.shape[1]
    beta = np.zeros(p)
    ll, grad, hess = _cox_quantities(beta, Xs, ts, ds, group_starts, group_ends)
    converged = False
    iterations = 0
    while iterations < MAX_ITER:
        if np.linalg.norm(grad) < SCORE_TOL:
            converged = True
            break
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-hess, grad, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            raise FitError("singular information matrix in Cox fit")
        scale = 1.0
        slack = 1e-12 * max(1.0, abs(ll))
        for _ in range(MAX_HALVINGS):
            cand = beta + scale * step
            cand_ll, cand_grad, cand_hess = _cox_quantities(
                cand, Xs, ts, ds, group_starts, group_ends
            )
            if cand_ll >= ll - slack:
                break
            scale *= 0.5
        beta, ll, grad, hess = cand, cand_ll, cand_grad, cand_hess
        iterations += 1
        if np.linalg.norm(beta) > SEPARATION_BOUND:
            raise FitError(
                "monotone partial likelihood (coefficient norm exceeds "
                f"{SEPARATION_BOUND:g})"
            )
    converged = converged or bool(np.linalg.norm(grad) < SCORE_TOL)

    if not converged:
        raise FitError("Cox fit did not converge")
    return FittedModel(
        family="survival",
        coefficients=beta,
        intercept=None,
        converged=True,
        iterations=iterations,
    )
