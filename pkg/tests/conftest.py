"""Shared fixtures and independent oracles used across the test suite."""

import numpy as np
import pytest

from simsize import SeedStream
from simsize.engines import EvalRecord


def brute_force_auc(scores, labels):
    """O(n^2) pair enumeration AUC with half-credit ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    cases = scores[labels > 0.5]
    controls = scores[labels <= 0.5]
    wins = 0.0
    for c in cases:
        for d in controls:
            if c > d:
                wins += 1.0
            elif c == d:
                wins += 0.5
    return wins / (len(cases) * len(controls))


def brute_force_c_index(scores, times, events):
    """O(n^2) concordance: comparable iff the strictly shorter time is an event."""
    n = len(scores)
    num = den = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if times[i] == times[j]:
                continue
            first, second = (i, j) if times[i] < times[j] else (j, i)
            if not events[first]:
                continue
            den += 1.0
            if scores[first] > scores[second]:
                num += 1.0
            elif scores[first] == scores[second]:
                num += 0.5
    if den == 0:
        return None
    return num / den


class OracleEvaluator:
    """Evaluator plug-in producing zero-noise values from a known curve."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = []

    def __call__(self, n, kappa, stream, phase):
        self.calls.append((n, kappa, phase))
        value = float(self.fn(n))
        raw = np.full(kappa, value)
        return EvalRecord(
            n=n, phase=phase, raw=raw, value=value, se=0.0, redraws=0
        )


@pytest.fixture
def stream():
    return SeedStream(20240811)


@pytest.fixture
def saturating_curve():
    """Monotone curve g(n) = n / (n + 100) with known crossing g(100) = 0.5."""
    return lambda n: n / (n + 100.0)
