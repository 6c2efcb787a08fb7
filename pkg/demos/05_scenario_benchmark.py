"""
Benchmarking engines over a scenario grid
=========================================

The harness repeats a search S times on independent seed paths, summarises the
spread of the estimates (mean, SD, CV), and validates each recommendation by
training a fresh model at the recommended size and scoring it on a large
independent sample.  Grids normally come from a JSON config (see configs/);
here one scenario is built in code and run at demo scale.
"""

import numpy as np

from simsize import Criterion, Scenario, SearchProblem, run_scenario, tune_continuous
from simsize.harness import write_runs_csv, write_summary_csv

problem = SearchProblem(
    generator=tune_continuous(r2_target=0.5, p=5),
    metric="r2",
    tau=0.42,
    criterion=Criterion("mean"),
    budget_B=300,
    kappa=10,
    n_test=10_000,
    master_seed=99,
)

summaries = []
for engine in ("gp", "bisection"):
    scenario = Scenario(
        label=f"demo-{engine}",
        problem=problem,
        engine=engine,
        S=5,
        n_validation=10_000,
    )
    summary = run_scenario(scenario)
    summaries.append(summary)
    print(f"{engine:>10}: mean n* = {summary.mean_n_star:.1f}, "
          f"sd = {summary.sd_n_star:.1f}, cv = {summary.cv_percent:.2f}%, "
          f"mean deviation = {summary.mean_deviation_percent:+.2f}%")
    print(f"{'':>12}per-run n*: {[r.n_star for r in summary.per_run]}")

write_runs_csv(summaries, "demo_runs.csv")
write_summary_csv(summaries, "demo_summary.csv")
print("\nwrote demo_runs.csv and demo_summary.csv")
