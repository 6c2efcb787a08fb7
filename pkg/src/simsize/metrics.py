"""Performance metrics on a fixed test set, plus replicate aggregation.

Discrimination metrics (AUC, Harrell's C) are rank-based and therefore
invariant under strictly increasing score transforms.  Aggregation across
replicates supports the mean criterion and an 80%-assurance criterion (the
empirical 20th percentile), with a bootstrap standard error used by the
surrogate model as per-observation noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from . import _fastfit
from ._concordance import concordance_counts
from .datagen import Dataset
from .errors import InvalidConfigError, MetricError
from .models import fit_cox, fit_linear, fit_logistic, linear_predictor
from .seeding import SeedStream

METRICS = ("auc", "c_index", "r2", "calibration_slope")

# Which discrimination-style metric belongs to which outcome family; the
# calibration slope applies to every family.
_FAMILY_METRICS = {
    "binary": ("auc", "calibration_slope"),
    "continuous": ("r2", "calibration_slope"),
    "survival": ("c_index", "calibration_slope"),
}

ASSURANCE_QUANTILE = 0.20
DEFAULT_N_BOOT = 200


def check_metric_family(metric: str, family: str):
    if metric not in METRICS:
        raise InvalidConfigError(f"unknown metric {metric!r}")
    if metric not in _FAMILY_METRICS.get(family, ()):
        raise InvalidConfigError(f"metric {metric!r} is not defined for {family} outcomes")


@dataclass(frozen=True)
class Criterion:
    """Aggregation rule: 'mean' or 'assurance' (20th percentile)."""

    tag: str = "mean"
    assurance_quantile: float = ASSURANCE_QUANTILE

    def __post_init__(self):
        if self.tag not in ("mean", "assurance"):
            raise InvalidConfigError(f"unknown criterion {self.tag!r}")
        if self.assurance_quantile != ASSURANCE_QUANTILE:
            raise InvalidConfigError("the assurance quantile is fixed at 0.20")


@dataclass(frozen=True)
class AggregateEstimate:
    value: float
    se: float
    kappa: int
    raw: np.ndarray


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels > 0.5
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs at least one case and one control")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def c_index(scores, times, events) -> float:
    """Harrell's C over comparable pairs under right censoring."""
    concordant, comparable = concordance_counts(scores, times, events)
    if comparable == 0:
        raise MetricError("no comparable pairs for the C-index")
    return float(concordant / comparable)


def r2_oos(predictions, y) -> float:
    """Out-of-sample R^2 = 1 - MSE / Var(Y), with Var taken over the test set."""
    predictions = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    var = float(np.mean((y - y.mean()) ** 2))
    if var == 0.0:
        raise MetricError("test responses are constant; R^2 undefined")
    mse = float(np.mean((y - predictions) ** 2))
    return 1.0 - mse / var


def calibration_slope(eta_hat, data: Dataset) -> float:
    """Slope from regressing the observed outcome on the linear predictor.

    Binary outcomes use a logistic fit, continuous outcomes ordinary least
    squares, survival outcomes a Cox fit.  A slope of 1 is perfect
    calibration; fit errors from degenerate inputs propagate.
    """
    eta_hat = np.asarray(eta_hat, dtype=np.float64)
    if float(eta_hat.max() - eta_hat.min()) == 0.0:
        raise MetricError("linear predictor is constant; slope undefined")
    Xs = eta_hat[:, None]
    single = Dataset(
        family=data.family, X=Xs, y=data.y, times=data.times, events=data.events
    )
    if data.family == "binary":
        return float(fit_logistic(single).coefficients[0])
    if data.family == "continuous":
        return float(fit_linear(single).coefficients[0])
    return float(fit_cox(single).coefficients[0])


def score_model(metric: str, model, test_set: Dataset) -> float:
    """Evaluate one fitted model on the fixed test set under the chosen metric."""
    eta = linear_predictor(model, test_set.X)
    if metric == "auc":
        return auc(eta, test_set.y)
    if metric == "c_index":
        return c_index(eta, test_set.times, test_set.events)
    if metric == "r2":
        return r2_oos(eta, test_set.y)
    if metric == "calibration_slope":
        return calibration_slope(eta, test_set)
    raise InvalidConfigError(f"unknown metric {metric!r}")


def make_scorer(metric: str, test_set: Dataset):
    """Build a score(eta) callable with the test-set structure precomputed.

    Search engines score thousands of linear predictors against one fixed test
    set; caching label counts, time orderings, and tie groups (and using the
    compiled single-predictor fits for calibration slopes) makes each call
    cheap.  Values agree with :func:`score_model` on the same inputs.
    """
    check_metric_family(metric, test_set.family)
    if metric == "auc":
        pos = test_set.y > 0.5
        n_pos = int(pos.sum())
        n_neg = len(test_set.y) - n_pos
        if n_pos == 0 or n_neg == 0:
            raise MetricError("AUC needs at least one case and one control")

        def score_auc(eta):
            ranks = rankdata(eta)
            return float(
                (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
            )

        return score_auc

    if metric == "c_index":
        order = np.ascontiguousarray(
            np.argsort(-test_set.times, kind="stable"), dtype=np.int64
        )
        times = np.ascontiguousarray(test_set.times, dtype=np.float64)
        events = np.ascontiguousarray(test_set.events, dtype=np.int64)

        def score_c(eta):
            concordant, comparable = concordance_counts(eta, times, events, order=order)
            if comparable == 0:
                raise MetricError("no comparable pairs for the C-index")
            return float(concordant / comparable)

        return score_c

    if metric == "r2":
        y = np.ascontiguousarray(test_set.y, dtype=np.float64)
        var = float(np.mean((y - y.mean()) ** 2))
        if var == 0.0:
            raise MetricError("test responses are constant; R^2 undefined")

        def score_r2(eta):
            return 1.0 - float(np.mean((y - eta) ** 2)) / var

        return score_r2

    if test_set.family == "continuous":
        y = np.ascontiguousarray(test_set.y, dtype=np.float64)

        def score_slope_ols(eta):
            centered = eta - eta.mean()
            denom = float(centered @ centered)
            if denom == 0.0:
                raise MetricError("linear predictor is constant; slope undefined")
            return float(centered @ y) / denom

        return score_slope_ols

    if test_set.family == "binary":
        y = np.ascontiguousarray(test_set.y, dtype=np.float64)

        def score_slope_logistic(eta):
            if float(eta.max() - eta.min()) == 0.0:
                raise MetricError("linear predictor is constant; slope undefined")
            _, slope, status = _fastfit.logistic_slope_1d(
                np.ascontiguousarray(eta, dtype=np.float64), y
            )
            if status == 2:
                raise MetricError("logistic calibration fit failed")
            return float(slope)

        return score_slope_logistic

    order = np.argsort(-test_set.times, kind="stable")
    ds_sorted = np.ascontiguousarray(test_set.events[order], dtype=np.int64)
    ts_sorted = test_set.times[order]
    change = np.nonzero(ts_sorted[1:] != ts_sorted[:-1])[0]
    group_ends = np.ascontiguousarray(
        np.concatenate([change, [len(ts_sorted) - 1]]), dtype=np.int64
    )

    def score_slope_cox(eta):
        if float(eta.max() - eta.min()) == 0.0:
            raise MetricError("linear predictor is constant; slope undefined")
        x = np.ascontiguousarray(eta[order], dtype=np.float64)
        slope, status = _fastfit.cox_slope_1d(x, ds_sorted, group_ends, len(group_ends))
        if status != 0:
            raise MetricError("proportional-hazards calibration fit failed")
        return float(slope)

    return score_slope_cox


def aggregate(
    raw,
    criterion: Criterion,
    stream: SeedStream | None = None,
    n_boot: int = DEFAULT_N_BOOT,
) -> AggregateEstimate:
    """Aggregate replicate metric values under the mean or assurance criterion.

    Values are sorted before aggregation so the result is independent of
    replicate execution order.  When a stream is supplied (and at least two
    values are present) a bootstrap standard error is attached.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise InvalidConfigError("cannot aggregate an empty set of values")
    if criterion.tag == "assurance" and raw.size < 2:
        raise InvalidConfigError("assurance aggregation needs at least 2 replicates")
    ordered = np.sort(raw)
    if criterion.tag == "mean":
        value = float(ordered.mean())
    else:
        value = float(np.quantile(ordered, criterion.assurance_quantile))
    se = 0.0
    if stream is not None and raw.size >= 2:
        se = bootstrap_se(raw, criterion, n_boot, stream)
    return AggregateEstimate(value=value, se=se, kappa=int(raw.size), raw=raw)


def bootstrap_se(
    raw,
    criterion: Criterion,
    n_boot: int,
    stream: SeedStream,
) -> float:
    """Standard deviation of the aggregate across bootstrap resamples."""
    raw = np.sort(np.asarray(raw, dtype=np.float64))  # order-independent resampling
    if raw.size < 2:
        raise InvalidConfigError("bootstrap needs at least 2 values")
    rng = stream.generator()
    idx = rng.integers(0, raw.size, size=(n_boot, raw.size))
    samples = raw[idx]
    if criterion.tag == "mean":
        stats = samples.mean(axis=1)
    else:
        stats = np.quantile(samples, criterion.assurance_quantile, axis=1)
    return float(np.std(stats, ddof=1))
