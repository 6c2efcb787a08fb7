"""Compiled single-predictor fits for hot metric paths.

Calibration-slope scoring fits one small regression per candidate replicate
against a large fixed test set; these kernels mirror the reference fitters in
``models`` (same Newton iteration, step-halving, tolerances, and divergence
bounds) with zero allocations per iteration.  Status codes: 0 = converged,
1 = kept-but-separated (logistic only), 2 = failed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SCORE_TOL = 1e-8
MAX_ITER = 25
MAX_HALVINGS = 20
SEPARATION_BOUND = 20.0


@njit(cache=True)
def _logistic_ll(a, b, x, y):
    # Kahan-compensated sum: step acceptance compares likelihoods at 1e-12
    # relative resolution, below the plain sequential-sum noise floor
    total = 0.0
    comp = 0.0
    for i in range(x.shape[0]):
        eta = a + b * x[i]
        if y[i] > 0.5:
            eta = -eta
        # -log(1 + exp(eta)) computed stably
        if eta > 35.0:
            term = -eta
        elif eta > -35.0:
            term = -np.log1p(np.exp(eta))
        else:
            term = 0.0
        delta = term - comp
        fresh = total + delta
        comp = (fresh - total) - delta
        total = fresh
    return total


@njit(cache=True)
def logistic_slope_1d(x, y):
    """Newton logistic fit of y on (1, x); returns (intercept, slope, status)."""
    n = x.shape[0]
    events = 0.0
    for i in range(n):
        events += y[i]
    if events < 2.0 or n - events < 2.0:
        return 0.0, 0.0, 2
    a = 0.0
    b = 0.0
    ll = _logistic_ll(a, b, x, y)
    converged = False
    for _ in range(MAX_ITER):
        g0 = 0.0
        g1 = 0.0
        h00 = 0.0
        h01 = 0.0
        h11 = 0.0
        for i in range(n):
            eta = a + b * x[i]
            if eta > 35.0:
                p = 1.0
            elif eta < -35.0:
                p = 0.0
            else:
                p = 1.0 / (1.0 + np.exp(-eta))
            r = y[i] - p
            w = p * (1.0 - p)
            if w < 1e-10:
                w = 1e-10
            g0 += r
            g1 += r * x[i]
            h00 += w
            h01 += w * x[i]
            h11 += w * x[i] * x[i]
        if np.sqrt(g0 * g0 + g1 * g1) < SCORE_TOL:
            converged = True
            break
        det = h00 * h11 - h01 * h01
        if det <= 0.0 or not np.isfinite(det):
            return a, b, 2
        da = (h11 * g0 - h01 * g1) / det
        db = (h00 * g1 - h01 * g0) / det
        slack = 1e-12 * max(1.0, abs(ll))
        scale = 1.0
        cand_a = a + da
        cand_b = b + db
        cand_ll = _logistic_ll(cand_a, cand_b, x, y)
        for _ in range(MAX_HALVINGS):
            if cand_ll >= ll - slack:
                break
            scale *= 0.5
            cand_a = a + scale * da
            cand_b = b + scale * db
            cand_ll = _logistic_ll(cand_a, cand_b, x, y)
        a = cand_a
        b = cand_b
        ll = cand_ll
    separated = abs(a) > SEPARATION_BOUND or abs(b) > SEPARATION_BOUND
    if converged:
        return a, b, 0
    if separated:
        return a, b, 1
    return a, b, 2


@njit(cache=True)
def _cox_ll_grad_hess_1d(beta, x, ds, group_ends, n_groups):
    """Breslow quantities for a single covariate, inputs sorted by falling time."""
    n = x.shape[0]
    shift = beta * x[0]
    for i in range(1, n):
        v = beta * x[i]
        if v > shift:
            shift = v
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    ll = 0.0
    grad = 0.0
    hess = 0.0
    i = 0
    for g in range(n_groups):
        end = group_ends[g]
        d = 0.0
        ev_eta = 0.0
        ev_x = 0.0
        while i <= end:
            w = np.exp(beta * x[i] - shift)
            s0 += w
            s1 += w * x[i]
            s2 += w * x[i] * x[i]
            if ds[i] == 1:
                d += 1.0
                ev_eta += beta * x[i]
                ev_x += x[i]
            i += 1
        if d > 0.0:
            m = s1 / s0
            ll += ev_eta - d * (np.log(s0) + shift)
            grad += ev_x - d * m
            hess -= d * (s2 / s0 - m * m)
    return ll, grad, hess


@njit(cache=True)
def cox_slope_1d(x, ds, group_ends, n_groups):
    """Newton Cox fit for one covariate; returns (coefficient, status)."""
    beta = 0.0
    ll, grad, hess = _cox_ll_grad_hess_1d(beta, x, ds, group_ends, n_groups)
    converged = False
    for _ in range(MAX_ITER):
        if abs(grad) < SCORE_TOL:
            converged = True
            break
        if hess >= 0.0 or not np.isfinite(hess):
            return beta, 2
        step = -grad / hess
        slack = 1e-12 * max(1.0, abs(ll))
        scale = 1.0
        cand = beta + step
        cand_ll, cand_grad, cand_hess = _cox_ll_grad_hess_1d(
            cand, x, ds, group_ends, n_groups
        )
        for _ in range(MAX_HALVINGS):
            if cand_ll >= ll - slack:
                break
            scale *= 0.5
            cand = beta + scale * step
            cand_ll, cand_grad, cand_hess = _cox_ll_grad_hess_1d(
                cand, x, ds, group_ends, n_groups
            )
        beta = cand
        ll = cand_ll
        grad = cand_grad
        hess = cand_hess
        if abs(beta) > SEPARATION_BOUND:
            return beta, 2
    if converged or abs(grad) < SCORE_TOL:
        return beta, 0
    return beta, 2
