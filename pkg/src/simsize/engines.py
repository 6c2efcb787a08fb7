"""Search engines: adaptive bound finding, bisection, GP search, and the hybrid.

Every engine spends an evaluation budget in units of one simulate-fit-score
operation.  Candidate evaluations redraw degenerate training samples (next
sub-stream, at most 10 attempts per replicate) and count every attempt against
the budget.  All engines are deterministic functions of the problem and the
seed stream, regardless of how many worker threads evaluate replicates.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .datagen import Dataset, GeneratorParams, generate
from .errors import EvaluationError, FitError, InvalidConfigError, MetricError, SurrogateError
from .metrics import AggregateEstimate, Criterion, aggregate, check_metric_family, make_scorer
from .models import fit_cox, fit_linear, fit_logistic, linear_predictor
from .seeding import SeedStream
from . import surrogate

ENGINES = ("gp", "bisection", "gp_bs")

MAX_FIT_ATTEMPTS = 10       # per replicate, counting the first draw
GP_INIT_POINTS = 5
HYBRID_BISECTION_SHARE = 0.2

DEFAULT_PILOT_BUDGET = 100
DEFAULT_PILOT_ITERS = 10
DEFAULT_BOUND_TOLERANCE = 1e-4
# Size of the fixed test set each search evaluates candidates on.  Large
# enough that test-set sampling error moves the estimated crossing by far
# less than the run-to-run search variability.
DEFAULT_N_TEST = 50_000


@dataclass(frozen=True)
class SearchProblem:
    """Everything an engine needs to search for the minimum sample size."""

    generator: GeneratorParams
    metric: str
    tau: float
    criterion: Criterion
    budget_B: int
    kappa: int
    pilot_budget_B0: int = DEFAULT_PILOT_BUDGET
    pilot_max_iters_K: int = DEFAULT_PILOT_ITERS
    bound_tolerance_delta: float = DEFAULT_BOUND_TOLERANCE
    n_test: int = DEFAULT_N_TEST
    master_seed: int = 0

    def __post_init__(self):
        check_metric_family(self.metric, self.generator.family)
        if self.metric in ("auc", "c_index") and not 0.5 < self.tau < 1.0:
            raise InvalidConfigError(f"{self.metric} target must lie in (0.5, 1)")
        if self.metric == "r2" and not 0.0 < self.tau < 1.0:
            raise InvalidConfigError("r2 target must lie in (0, 1)")
        if self.metric == "calibration_slope" and self.tau <= 0.0:
            raise InvalidConfigError("calibration slope target must be positive")
        if self.kappa < 1:
            raise InvalidConfigError("kappa must be at least 1")
        if self.criterion.tag == "assurance" and self.kappa < 2:
            raise InvalidConfigError("assurance aggregation needs kappa >= 2")
        if self.budget_B < 2 * self.kappa:
            raise InvalidConfigError("budget_B must be at least 2 * kappa")
        if self.pilot_max_iters_K < 2:
            raise InvalidConfigError("pilot_max_iters_K must be at least 2")
        if self.pilot_budget_B0 < self.pilot_max_iters_K:
            raise InvalidConfigError("pilot_budget_B0 must be >= pilot_max_iters_K")
        if self.n_test < 100:
            raise InvalidConfigError("n_test must be at least 100")

    @property
    def family(self) -> str:
        return self.generator.family


@dataclass(frozen=True)
class EvalRecord:
    """One candidate evaluation as it appears in the trace."""

    n: int
    phase: str                 # pilot | bisection | gp-init | gp-iter
    raw: np.ndarray
    value: float               # aggregated performance (nan when failed)
    se: float
    redraws: int
    failed: bool = False

    @property
    def consumed(self) -> int:
        return len(self.raw) + self.redraws

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "phase": self.phase,
            "raw": [float(v) for v in self.raw],
            "value": None if math.isnan(self.value) else float(self.value),
            "se": float(self.se),
            "redraws": self.redraws,
            "failed": self.failed,
        }


@dataclass(frozen=True)
class EvaluationTrace:
    entries: tuple[EvalRecord, ...]

    @property
    def total_evaluations(self) -> int:
        return sum(e.consumed for e in self.entries)

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]


@dataclass(frozen=True)
class SearchResult:
    n_star: int
    bounds_used: tuple[int, int]
    trace: EvaluationTrace
    evaluations_used: int
    engine: str
    wall_time: float
    fallback_flags: tuple[str, ...]
    master_seed: int = 0

    def to_dict(self, include_timing: bool = False) -> dict:
        return {
            "n_star": self.n_star,
            "bounds_used": list(self.bounds_used),
            "engine": self.engine,
            "evaluations_used": self.evaluations_used,
            "wall_time_s": round(self.wall_time, 6) if include_timing else 0.0,
            "fallback_flags": list(self.fallback_flags),
            "seed": self.master_seed,
            "trace": self.trace.to_list(),
        }


# --- candidate evaluation -----------------------------------------------------


_FITTERS = {"binary": fit_logistic, "continuous": fit_linear, "survival": fit_cox}


class SimulationEvaluator:
    """Simulate kappa training draws, fit, and score on the fixed test set.

    Degenerate draws are replaced by the next attempt sub-stream, up to
    ``MAX_FIT_ATTEMPTS`` per replicate; every attempt costs one budget unit.
    Replicates may run on a thread pool; results are keyed by replicate index
    so the outcome does not depend on scheduling.
    """

    def __init__(self, problem: SearchProblem, test_set: Dataset, threads: int = 1):
        self.problem = problem
        self.test_set = test_set
        self.threads = max(1, threads)
        self._fit = _FITTERS[problem.family]
        self._score = make_scorer(problem.metric, test_set)

    def _one_replicate(self, n: int, stream: SeedStream) -> tuple[Optional[float], int]:
        for attempt in range(MAX_FIT_ATTEMPTS):
            data = generate(self.problem.generator, n, stream.child("attempt", attempt))
            try:
                model = self._fit(data)
                value = self._score(linear_predictor(model, self.test_set.X))
            except (FitError, MetricError):
                continue
            return value, attempt
        return None, MAX_FIT_ATTEMPTS

    def __call__(self, n: int, kappa: int, stream: SeedStream, phase: str) -> EvalRecord:
        base = stream.child("n", n)
        rep_streams = [base.child("rep", j) for j in range(1, kappa + 1)]
        if self.threads > 1 and kappa > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                outcomes = list(pool.map(lambda s: self._one_replicate(n, s), rep_streams))
        else:
            outcomes = [self._one_replicate(n, s) for s in rep_streams]
        values = [v for v, _ in outcomes if v is not None]
        redraws = sum(attempts for _, attempts in outcomes)
        failed = len(values) < kappa
        if failed or not values:
            return EvalRecord(
                n=n,
                phase=phase,
                raw=np.asarray(values, dtype=np.float64),
                value=math.nan,
                se=0.0,
                redraws=redraws,
                failed=True,
            )
        est = aggregate(
            np.asarray(values, dtype=np.float64),
            self.problem.criterion,
            stream=base.child("boot"),
        )
        return EvalRecord(
            n=n, phase=phase, raw=est.raw, value=est.value, se=est.se, redraws=redraws
        )


Evaluator = Callable[[int, int, SeedStream, str], EvalRecord]


def evaluate_candidate(
    problem: SearchProblem,
    n: int,
    kappa: int,
    test_set: Dataset,
    stream: SeedStream,
    threads: int = 1,
) -> AggregateEstimate:
    """Aggregated performance at one candidate size; raises on exhausted redraws."""
    record = SimulationEvaluator(problem, test_set, threads)(n, kappa, stream, "adhoc")
    if record.failed:
        raise EvaluationError(
            f"candidate n={n}: replicate exhausted {MAX_FIT_ATTEMPTS} fit attempts"
        )
    return AggregateEstimate(
        value=record.value, se=record.se, kappa=len(record.raw), raw=record.raw
    )


# --- starting values and bounds ------------------------------------------------


def heuristic_start(problem: SearchProblem) -> int:
    """Outcome-driven starting size: events-per-predictor style heuristics."""
    gen = problem.generator
    p = gen.p
    if gen.family == "binary":
        rate = gen.requested.prevalence_or_event_rate
        n0 = math.ceil(10.0 * p / min(rate, 1.0 - rate) - 1e-9)
    elif gen.family == "survival":
        rate = gen.requested.prevalence_or_event_rate
        n0 = math.ceil(10.0 * p / rate - 1e-9)
    else:
        n0 = 10 * p + 50
    return max(n0, 30)


def family_floor(problem: SearchProblem) -> int:
    """Smallest sample size worth evaluating for this outcome family."""
    gen = problem.generator
    base = gen.p + 2
    if gen.family == "binary":
        rate = gen.requested.prevalence_or_event_rate
        base = max(base, math.ceil(2.0 / min(rate, 1.0 - rate)))
    elif gen.family == "survival":
        base = max(base, math.ceil(2.0 / gen.requested.prevalence_or_event_rate))
    return max(base, 8)


@dataclass(frozen=True)
class PilotResult:
    n_min: int
    n_max: int
    entries: tuple[EvalRecord, ...]
    flags: tuple[str, ...]

    @property
    def bounds(self) -> tuple[int, int]:
        return (self.n_min, self.n_max)


def find_bounds(
    problem: SearchProblem,
    test_set: Optional[Dataset] = None,
    stream: Optional[SeedStream] = None,
    *,
    evaluator: Optional[Evaluator] = None,
    n0: Optional[int] = None,
    threads: int = 1,
) -> PilotResult:
    """Locate a bracket [n_min, n_max] with performance straddling the target.

    Doubling/halving from a heuristic start, spending ``floor(B0 / K)``
    replicates per candidate.  The tolerance delta stops the walk once the
    estimate is already within delta of the target.  If the iteration cap or
    a candidate collapse prevents bracketing, the widest explored range is
    returned with a fallback flag.
    """
    if evaluator is None:
        evaluator = SimulationEvaluator(problem, test_set, threads)
    if stream is None:
        stream = SeedStream(problem.master_seed)
    kappa_pilot = problem.pilot_budget_B0 // problem.pilot_max_iters_K
    tau = problem.tau
    delta = problem.bound_tolerance_delta
    floor_n = family_floor(problem)

    n_cur = max(n0 if n0 is not None else heuristic_start(problem), floor_n)
    entries: list[EvalRecord] = []
    flags: list[str] = []

    def run_eval(n, k):
        rec = evaluator(n, kappa_pilot, stream.child("pilot", k), "pilot")
        entries.append(rec)
        if rec.failed:
            flags.append(f"pilot-evaluation-failed@{n}")
            return -math.inf  # unusable size reads as below target
        return rec.value

    g_cur = run_eval(n_cur, 0)
    direction = "up" if g_cur < tau else "down"
    visited = [n_cur]
    n_min = n_max = n_cur
    bracketed = False
    k = 1
    while k < problem.pilot_max_iters_K:
        if direction == "up":
            n_next = 2 * n_cur
        else:
            n_next = max(n_cur // 2, floor_n)
        if n_next == n_cur:
            flags.append("bounds-collapse")
            break
        g_next = run_eval(n_next, k)
        visited.append(n_next)
        if direction == "up":
            if g_next >= tau - delta:
                n_min, n_max = n_cur, n_next
                bracketed = True
                break
            n_min = n_next
        else:
            if g_next <= tau + delta:
                n_min, n_max = n_next, n_cur
                bracketed = True
                break
            n_max = n_next
        n_cur = n_next
        k += 1

    if not bracketed:
        flags.append("bounds-not-bracketed")
        n_min, n_max = min(visited), max(visited)
    return PilotResult(n_min, n_max, tuple(entries), tuple(flags))


# --- bisection ------------------------------------------------------------------


@dataclass
class _StageOutcome:
    n_star: int
    entries: list[EvalRecord]
    flags: list[str]
    lo: int
    hi: int
    g_lo: float
    g_hi: float


def _bisection_core(
    problem: SearchProblem,
    bounds: tuple[int, int],
    stream: SeedStream,
    evaluator: Evaluator,
    budget: int,
) -> _StageOutcome:
    lo, hi = int(bounds[0]), int(bounds[1])
    tau = problem.tau
    kappa = problem.kappa
    entries: list[EvalRecord] = []
    flags: list[str] = []
    g_lo, g_hi = -math.inf, math.inf

    if hi - lo <= 1:
        return _StageOutcome(hi, entries, flags, lo, hi, g_lo, g_hi)
    if budget < 2 * kappa:
        flags.append("bisection-budget-floor")
        return _StageOutcome(hi, entries, flags, lo, hi, g_lo, g_hi)

    used = 0
    counter = 0

    def run_eval(n):
        nonlocal used, counter
        rec = evaluator(n, kappa, stream.child("bisection", counter), "bisection")
        counter += 1
        used += rec.consumed
        entries.append(rec)
        if rec.failed:
            flags.append(f"bisection-evaluation-failed@{n}")
            return -math.inf
        return rec.value

    g_lo = run_eval(lo)
    g_hi = run_eval(hi)
    max_iters = budget // kappa
    t = 0
    while hi - lo > 1 and t < max_iters and used + kappa <= budget:
        mid = (lo + hi) // 2
        g_mid = run_eval(mid)
        if g_mid >= tau:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
        t += 1
    return _StageOutcome(hi, entries, flags, lo, hi, g_lo, g_hi)


def search_bisection(
    problem: SearchProblem,
    bounds: tuple[int, int],
    test_set: Dataset,
    stream: SeedStream,
    *,
    evaluator: Optional[Evaluator] = None,
    budget: Optional[int] = None,
    threads: int = 1,
) -> SearchResult:
    """Deterministic interval halving; returns the surviving upper bound."""
    t0 = time.perf_counter()
    if evaluator is None:
        evaluator = SimulationEvaluator(problem, test_set, threads)
    out = _bisection_core(
        problem, bounds, stream, evaluator, problem.budget_B if budget is None else budget
    )
    trace = EvaluationTrace(tuple(out.entries))
    return SearchResult(
        n_star=out.n_star,
        bounds_used=(int(bounds[0]), int(bounds[1])),
        trace=trace,
        evaluations_used=trace.total_evaluations,
        engine="bisection",
        wall_time=time.perf_counter() - t0,
        fallback_flags=tuple(out.flags),
        master_seed=problem.master_seed,
    )


# --- GP search --------------------------------------------------------------------


def _entries_to_observations(entries) -> tuple:
    return tuple(
        surrogate.GPObservation(n=e.n, g_hat=e.value, noise_var=e.se**2)
        for e in entries
        if not e.failed and math.isfinite(e.value)
    )


def _gp_core(
    problem: SearchProblem,
    bounds: tuple[int, int],
    stream: SeedStream,
    evaluator: Evaluator,
    budget: int,
    extra_observations: Sequence[surrogate.GPObservation] = (),
) -> _StageOutcome:
    lo, hi = int(bounds[0]), int(bounds[1])
    tau = problem.tau
    kappa = problem.kappa
    entries: list[EvalRecord] = []
    flags: list[str] = []

    if hi <= lo:
        flags.append("degenerate-bounds")
        return _StageOutcome(hi, entries, flags, lo, hi, -math.inf, math.inf)

    used = 0
    observations: list[surrogate.GPObservation] = list(extra_observations)

    def run_eval(n, phase, index):
        nonlocal used
        rec = evaluator(n, kappa, stream.child(phase, index), phase)
        used += rec.consumed
        entries.append(rec)
        if rec.failed:
            flags.append(f"gp-evaluation-failed@{n}")
            return None
        observations.append(surrogate.GPObservation(n=n, g_hat=rec.value, noise_var=rec.se**2))
        return rec.value

    init_sizes = np.unique(
        np.round(np.geomspace(lo, hi, GP_INIT_POINTS)).astype(np.int64)
    )
    init_values: dict[int, float] = {}
    for i, n in enumerate(init_sizes):
        if used + kappa > budget:
            flags.append("gp-init-budget-exhausted")
            break
        value = run_eval(int(n), "gp-init", i)
        if value is not None:
            init_values[int(n)] = value

    # A noisy pilot can hand over a bracket that excludes the true crossing.
    # The initial design re-estimates both edges with kappa replicates; if an
    # edge contradicts the bracket, widen one halving/doubling step (the same
    # recovery the hybrid engine applies to a flipped bisection interval).
    floor_n = family_floor(problem)
    if init_values.get(lo, -math.inf) >= tau and lo > floor_n:
        lo = max(floor_n, lo // 2)
        flags.append("gp-bounds-widened-left")
    if init_values.get(hi, math.inf) < tau:
        hi = 2 * hi
        flags.append("gp-bounds-widened-right")

    def fallback_bisection(reason):
        flags.append(reason)
        sub = _bisection_core(
            problem, (lo, hi), stream, evaluator, budget - used
        )
        entries.extend(sub.entries)
        flags.extend(sub.flags)
        return _StageOutcome(sub.n_star, entries, flags, sub.lo, sub.hi, sub.g_lo, sub.g_hi)

    if len({o.n for o in observations}) < 2:
        return fallback_bisection("gp-fallback-bisection")

    gp = None
    iteration = 0
    while used + kappa <= budget:
        try:
            gp = surrogate.fit_gp(observations)
        except SurrogateError:
            return fallback_bisection("gp-fallback-bisection")
        candidate = surrogate.acquire_next(gp, (lo, hi), tau, stream.child("acquire", iteration))
        run_eval(candidate, "gp-iter", iteration)
        iteration += 1
    if iteration == 0:
        flags.append("gp-no-iterations")
    try:
        gp = surrogate.fit_gp(observations)
    except SurrogateError:
        return fallback_bisection("gp-fallback-bisection")
    crossing = surrogate.crossing_estimate(gp, (lo, hi), tau)
    if not crossing.crossed:
        flags.append("gp-crossing-fallback-nmax")
    return _StageOutcome(crossing.n, entries, flags, lo, hi, -math.inf, math.inf)


def search_gp(
    problem: SearchProblem,
    bounds: tuple[int, int],
    test_set: Dataset,
    stream: SeedStream,
    *,
    evaluator: Optional[Evaluator] = None,
    budget: Optional[int] = None,
    threads: int = 1,
    extra_observations: Sequence[surrogate.GPObservation] = (),
) -> SearchResult:
    """Surrogate-guided search: initial log-spaced design, then acquisition loop.

    ``extra_observations`` seeds the surrogate with already-paid-for estimates
    (typically the pilot's); they carry their own noise and cost no budget.
    """
    t0 = time.perf_counter()
    if evaluator is None:
        evaluator = SimulationEvaluator(problem, test_set, threads)
    out = _gp_core(
        problem,
        bounds,
        stream,
        evaluator,
        problem.budget_B if budget is None else budget,
        extra_observations=extra_observations,
    )
    trace = EvaluationTrace(tuple(out.entries))
    return SearchResult(
        n_star=out.n_star,
        bounds_used=(out.lo, out.hi),
        trace=trace,
        evaluations_used=trace.total_evaluations,
        engine="gp",
        wall_time=time.perf_counter() - t0,
        fallback_flags=tuple(out.flags),
        master_seed=problem.master_seed,
    )


def search_gp_bs(
    problem: SearchProblem,
    test_set: Dataset,
    stream: SeedStream,
    *,
    evaluator: Optional[Evaluator] = None,
    bounds: Optional[tuple[int, int]] = None,
    threads: int = 1,
) -> SearchResult:
    """Hybrid: pilot bounds, coarse bisection on 20% of the budget, GP on the rest."""
    t0 = time.perf_counter()
    if evaluator is None:
        evaluator = SimulationEvaluator(problem, test_set, threads)
    entries: list[EvalRecord] = []
    flags: list[str] = []

    if bounds is None:
        pilot = find_bounds(problem, test_set, stream, evaluator=evaluator)
        entries.extend(pilot.entries)
        flags.extend(pilot.flags)
        lo, hi = pilot.bounds
    else:
        lo, hi = int(bounds[0]), int(bounds[1])

    stage2_budget = int(HYBRID_BISECTION_SHARE * problem.budget_B)
    stage3_budget = problem.budget_B - stage2_budget

    stage2 = _bisection_core(problem, (lo, hi), stream, evaluator, stage2_budget)
    entries.extend(stage2.entries)
    flags.extend(stage2.flags)

    tau = problem.tau
    if (stage2.g_lo > tau + problem.bound_tolerance_delta) or (
        stage2.g_hi < tau - problem.bound_tolerance_delta
    ):
        flags.append("stage2-bracket-flip")
    step = max(stage2.hi - stage2.lo, 1)
    refined = (max(lo, stage2.lo - step), min(hi, stage2.hi + step))

    stage3 = _gp_core(
        problem,
        refined,
        stream,
        evaluator,
        stage3_budget,
        extra_observations=_entries_to_observations(entries),
    )
    entries.extend(stage3.entries)
    flags.extend(stage3.flags)

    trace = EvaluationTrace(tuple(entries))
    return SearchResult(
        n_star=stage3.n_star,
        bounds_used=(stage3.lo, stage3.hi),
        trace=trace,
        evaluations_used=trace.total_evaluations,
        engine="gp_bs",
        wall_time=time.perf_counter() - t0,
        fallback_flags=tuple(flags),
        master_seed=problem.master_seed,
    )


# --- top-level dispatch -------------------------------------------------------------


def run_search(
    problem: SearchProblem,
    engine: str = "gp",
    *,
    manual_bounds: Optional[tuple[int, int]] = None,
    threads: int = 1,
    stream: Optional[SeedStream] = None,
    evaluator: Optional[Evaluator] = None,
) -> SearchResult:
    """Run one full search: fixed test set, bound finding, then the chosen engine.

    A custom ``evaluator`` replaces the whole simulate-fit-score pipeline,
    which is how user-defined data-generating processes (or noise-free test
    oracles) plug in.
    """
    if engine not in ENGINES:
        raise InvalidConfigError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    t0 = time.perf_counter()
    if stream is None:
        stream = SeedStream(problem.master_seed)
    test_set = None
    if evaluator is None:
        test_set = generate(problem.generator, problem.n_test, stream.child("test"))
        evaluator = SimulationEvaluator(problem, test_set, threads)

    if engine == "gp_bs":
        result = search_gp_bs(
            problem, test_set, stream, evaluator=evaluator, bounds=manual_bounds
        )
        return replace(result, wall_time=time.perf_counter() - t0)

    pilot_entries: tuple[EvalRecord, ...] = ()
    pilot_flags: tuple[str, ...] = ()
    if manual_bounds is not None:
        lo, hi = int(manual_bounds[0]), int(manual_bounds[1])
        if lo > hi:
            raise InvalidConfigError("manual bounds must satisfy n_min <= n_max")
        bounds = (max(lo, family_floor(problem)), max(hi, family_floor(problem)))
    else:
        pilot = find_bounds(problem, test_set, stream, evaluator=evaluator)
        bounds = pilot.bounds
        pilot_entries = pilot.entries
        pilot_flags = pilot.flags

    if engine == "gp":
        result = search_gp(
            problem,
            bounds,
            test_set,
            stream,
            evaluator=evaluator,
            extra_observations=_entries_to_observations(pilot_entries),
        )
    else:
        result = search_bisection(problem, bounds, test_set, stream, evaluator=evaluator)

    trace = EvaluationTrace(pilot_entries + result.trace.entries)
    return replace(
        result,
        trace=trace,
        evaluations_used=trace.total_evaluations,
        fallback_flags=pilot_flags + result.fallback_flags,
        wall_time=time.perf_counter() - t0,
    )
