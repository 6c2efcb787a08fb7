"""Command-line interface: tune, search, benchmark, validate.

Single-result commands emit JSON; benchmark emits the harness CSVs.  Every
output embeds the fully resolved configuration, including defaulted flags and
the seed.  All randomness flows from --seed, and outputs are byte-identical
for any --threads value.  Wall-clock timings are zeroed in outputs unless
--timings is passed, keeping default outputs reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .datagen import GeneratorParams, tune_binary, tune_continuous, tune_survival
from .engines import SearchProblem, run_search
from .errors import InvalidConfigError, SimsizeError
from .harness import (
    load_scenario_grid,
    run_scenario,
    validate_recommendation,
    write_runs_csv,
    write_summary_csv,
)
from .metrics import Criterion
from .seeding import SeedStream

_METRIC_NAMES = {
    "auc": "auc",
    "c-index": "c_index",
    "r2": "r2",
    "calibration-slope": "calibration_slope",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise _UsageError(message)


def _add_generator_flags(parser, require_outcome=True):
    group = parser.add_argument_group("generator")
    group.add_argument(
        "--outcome",
        choices=["binary", "continuous", "survival"],
        required=require_outcome,
        help="outcome family of the data-generating process",
    )
    group.add_argument("--prevalence", type=float, default=None, help="target outcome prevalence (binary)")
    group.add_argument("--event-rate", type=float, default=None, help="target event rate (survival)")
    group.add_argument("--c-statistic", type=float, default=None, help="target large-sample C-statistic / C-index")
    group.add_argument("--r2", type=float, default=None, help="target large-sample R-squared (continuous)")
    group.add_argument("--p", type=int, default=None, help="number of candidate predictors")
    group.add_argument("--p-noise", type=int, default=0, help="number of zero-coefficient predictors")
    group.add_argument("--censor-time", type=float, default=1.0, help="administrative censoring time (survival)")


def _add_search_flags(parser):
    parser.add_argument("--generator-file", default=None, help="JSON file with tuned generator parameters (skips tuning)")
    parser.add_argument("--metric", choices=sorted(_METRIC_NAMES), required=True, help="performance metric to target")
    parser.add_argument("--target", type=float, required=True, help="target metric value (tau)")
    parser.add_argument("--criterion", choices=["mean", "assurance"], default="mean", help="aggregation criterion across replicates")
    parser.add_argument("--engine", choices=["gp", "bisection", "gp-bs"], default="gp", help="search engine")
    parser.add_argument("--budget", type=int, default=1000, help="total evaluation budget B")
    parser.add_argument("--reps", type=int, default=20, help="replicates per candidate sample size (kappa)")
    parser.add_argument("--pilot-budget", type=int, default=100, help="pilot evaluation budget B0 for bound finding")
    parser.add_argument("--pilot-iters", type=int, default=10, help="maximum pilot iterations K")
    parser.add_argument("--n-test", type=int, default=50_000, help="size of the fixed test set")
    parser.add_argument("--bounds", default=None, metavar="MIN,MAX", help="manual search bounds, skipping the pilot")


def _add_common_flags(parser):
    parser.add_argument("--seed", type=int, default=0, help="master seed controlling all randomness")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for replicate evaluation (output-invariant)")
    parser.add_argument("--timings", action="store_true", help="include real wall-clock times in outputs (non-reproducible)")
    parser.add_argument("--out", default="-", help="output path ('-' writes JSON to stdout)")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="simsize",
        description="Simulation-based minimum sample size estimation for prediction models.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_tune = sub.add_parser(
        "tune",
        help="tune a data-generating process and emit its parameters as JSON",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_generator_flags(p_tune)
    _add_common_flags(p_tune)

    p_search = sub.add_parser(
        "search",
        help="run one sample size search and emit the result as JSON",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_generator_flags(p_search, require_outcome=False)
    _add_search_flags(p_search)
    _add_common_flags(p_search)

    p_bench = sub.add_parser(
        "benchmark",
        help="run a scenario grid from a config file and emit CSV summaries",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_bench.add_argument("--config", required=True, help="JSON scenario grid config")
    p_bench.add_argument("--out-dir", required=True, help="directory for runs.csv / summary.csv / config.json")
    p_bench.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p_bench.add_argument("--threads", type=int, default=1, help="worker threads (output-invariant)")
    p_bench.add_argument("--timings", action="store_true", help="include real wall-clock times in CSVs")

    p_val = sub.add_parser(
        "validate",
        help="train at a recommended size and report achieved performance",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_generator_flags(p_val, require_outcome=False)
    p_val.add_argument("--generator-file", default=None, help="JSON file with tuned generator parameters")
    p_val.add_argument("--result-file", default=None, help="search result JSON providing n_star")
    p_val.add_argument("--n", type=int, default=None, help="explicit sample size to validate")
    p_val.add_argument("--metric", choices=sorted(_METRIC_NAMES), required=True, help="performance metric")
    p_val.add_argument("--target", type=float, required=True, help="target metric value")
    p_val.add_argument("--n-validation", type=int, default=30_000, help="validation sample size")
    _add_common_flags(p_val)
    return parser


# Execution and I/O details are omitted from the echoed configuration: they
# never affect results, and outputs must stay byte-identical across --threads.
_NON_SEMANTIC_FLAGS = ("threads", "out", "out_dir", "timings")


def _resolved_config(args) -> dict:
    return {
        k: v for k, v in sorted(vars(args).items()) if k not in _NON_SEMANTIC_FLAGS
    }


def _tuned_generator(args) -> GeneratorParams:
    if getattr(args, "generator_file", None):
        text = Path(args.generator_file).read_text(encoding="utf-8")
        return GeneratorParams.from_json(text)
    if args.outcome is None:
        raise InvalidConfigError("either --generator-file or --outcome is required")
    if args.p is None:
        raise InvalidConfigError("--p is required when tuning a generator")
    if args.outcome == "binary":
        if args.prevalence is None or args.c_statistic is None:
            raise InvalidConfigError("binary tuning needs --prevalence and --c-statistic")
        return tune_binary(args.prevalence, args.c_statistic, args.p, args.p_noise)
    if args.outcome == "continuous":
        if args.r2 is None:
            raise InvalidConfigError("continuous tuning needs --r2")
        return tune_continuous(args.r2, args.p, args.p_noise)
    if args.event_rate is None or args.c_statistic is None:
        raise InvalidConfigError("survival tuning needs --event-rate and --c-statistic")
    return tune_survival(
        args.event_rate, args.c_statistic, args.p, args.p_noise, t_c=args.censor_time
    )


def _emit(payload: dict, out: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    if out == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _cmd_tune(args) -> int:
    params = _tuned_generator(args)
    payload = params.to_dict()
    payload["config"] = _resolved_config(args)
    _emit(payload, args.out)
    return 0


def _parse_bounds(text):
    if text is None:
        return None
    try:
        lo, hi = (int(part) for part in text.split(","))
    except ValueError as exc:
        raise InvalidConfigError("--bounds expects MIN,MAX integers") from exc
    return (lo, hi)


def _cmd_search(args) -> int:
    generator = _tuned_generator(args)
    problem = SearchProblem(
        generator=generator,
        metric=_METRIC_NAMES[args.metric],
        tau=args.target,
        criterion=Criterion(args.criterion),
        budget_B=args.budget,
        kappa=args.reps,
        pilot_budget_B0=args.pilot_budget,
        pilot_max_iters_K=args.pilot_iters,
        n_test=args.n_test,
        master_seed=args.seed,
    )
    result = run_search(
        problem,
        args.engine.replace("-", "_"),
        manual_bounds=_parse_bounds(args.bounds),
        threads=args.threads,
    )
    payload = {
        "config": _resolved_config(args),
        "generator": generator.to_dict(),
        "result": result.to_dict(include_timing=args.timings),
    }
    _emit(payload, args.out)
    return 0


def _cmd_benchmark(args) -> int:
    scenarios = load_scenario_grid(args.config)
    if args.seed is not None:
        from dataclasses import replace

        scenarios = [
            replace(s, problem=replace(s.problem, master_seed=args.seed)) for s in scenarios
        ]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = []
    for scenario in scenarios:
        summary = run_scenario(scenario, threads=args.threads)
        summaries.append(summary)
        print(
            f"[{scenario.label}] engine={scenario.engine} "
            f"mean_n*={summary.mean_n_star:.1f} cv={summary.cv_percent:.2f}% "
            f"failures={summary.failures}",
            file=sys.stderr,
        )
    write_runs_csv(summaries, out_dir / "runs.csv", include_timing=args.timings)
    write_summary_csv(summaries, out_dir / "summary.csv", include_timing=args.timings)
    config_echo = {
        "config": _resolved_config(args),
        "grid": json.loads(Path(args.config).read_text(encoding="utf-8")),
    }
    (out_dir / "config.json").write_text(
        json.dumps(config_echo, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def _cmd_validate(args) -> int:
    generator = _tuned_generator(args)
    if args.n is not None:
        n_star = args.n
    elif args.result_file:
        doc = json.loads(Path(args.result_file).read_text(encoding="utf-8"))
        result = doc.get("result", doc)
        n_star = int(result["n_star"])
    else:
        raise InvalidConfigError("validate needs either --n or --result-file")
    problem = SearchProblem(
        generator=generator,
        metric=_METRIC_NAMES[args.metric],
        tau=args.target,
        criterion=Criterion("mean"),
        budget_B=2,
        kappa=1,
        master_seed=args.seed,
    )
    stream = SeedStream(args.seed).child("validate")
    achieved, deviation = validate_recommendation(problem, n_star, args.n_validation, stream)
    payload = {
        "config": _resolved_config(args),
        "validation": {
            "n_star": n_star,
            "metric": _METRIC_NAMES[args.metric],
            "target": args.target,
            "n_validation": args.n_validation,
            "achieved": achieved,
            "deviation_percent": deviation,
        },
    }
    _emit(payload, args.out)
    return 0


_COMMANDS = {
    "tune": _cmd_tune,
    "search": _cmd_search,
    "benchmark": _cmd_benchmark,
    "validate": _cmd_validate,
}


def run_cli(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.subcommand](args)
    except InvalidConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SimsizeError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
