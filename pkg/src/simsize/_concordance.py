"""Compiled O(n log n) concordance counting for right-censored data.

Pairs are comparable when the shorter observed time belongs to an event, so
tied observed times never form a comparable pair.  A pair is concordant when
the subject failing earlier carries the higher risk score; tied scores count
one half.  Counting walks subjects in decreasing observed-time order while a
Fenwick tree over score ranks holds everyone with a strictly longer time.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _concordance_counts(order, times, events, score_rank, n_ranks):
    tree = np.zeros(n_ranks + 1, dtype=np.float64)
    per_rank = np.zeros(n_ranks + 1, dtype=np.float64)
    n = order.shape[0]
    concordant = 0.0
    comparable = 0.0
    total_in = 0.0
    i = 0
    while i < n:
        j = i
        t = times[order[i]]
        while j < n and times[order[j]] == t:
            j += 1
        # events at this time compare against strictly longer survivors only
        for k in range(i, j):
            s = order[k]
            if events[s] == 1:
                r = score_rank[s]
                below = 0.0
                idx = r - 1
                while idx > 0:
                    below += tree[idx]
                    idx -= idx & (-idx)
                concordant += below + 0.5 * per_rank[r]
                comparable += total_in
        for k in range(i, j):
            r = score_rank[order[k]]
            per_rank[r] += 1.0
            idx = r
            while idx <= n_ranks:
                tree[idx] += 1.0
                idx += idx & (-idx)
            total_in += 1.0
        i = j
    return concordant, comparable


def concordance_counts(scores, times, events, order=None):
    """Return (concordant pair weight, comparable pair count).

    ``order`` may carry a precomputed decreasing-time permutation so repeated
    calls against one fixed test set skip the sort.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    events = np.ascontiguousarray(events, dtype=np.int64)
    uniq, ranks = np.unique(scores, return_inverse=True)
    ranks = np.ascontiguousarray(ranks, dtype=np.int64) + 1
    if order is None:
        order = np.ascontiguousarray(np.argsort(-times, kind="stable"), dtype=np.int64)
    return _concordance_counts(order, times, events, ranks, len(uniq))


def concordance_index(scores, times, events) -> float:
    """Harrell's C; raises ZeroDivisionError when no pair is comparable."""
    concordant, comparable = concordance_counts(scores, times, events)
    return concordant / comparable
