"""
Searching for a minimum sample size
===================================

One full search: tune a generator, pick a target, and let an engine spend its
evaluation budget.  The result carries the estimated minimum sample size, the
bracket the pilot found, and the complete evaluation trace.
"""

from simsize import Criterion, SearchProblem, run_search, tune_binary

problem = SearchProblem(
    generator=tune_binary(prevalence_target=0.3, c_target=0.75, p=5),
    metric="auc",
    tau=0.70,
    criterion=Criterion("mean"),
    budget_B=400,
    kappa=10,
    n_test=20_000,
    master_seed=42,
)

result = run_search(problem, engine="gp")

print(f"estimated minimum sample size: {result.n_star}")
print(f"pilot bracket: {result.bounds_used}")
print(f"evaluations used: {result.evaluations_used} "
      f"(pilot budget 100 + main budget {problem.budget_B})")
print(f"fallback flags: {list(result.fallback_flags) or 'none'}")

print(f"\n{'phase':>10} {'n':>6} {'ghat':>8} {'se':>8}")
for entry in result.trace.entries:
    print(f"{entry.phase:>10} {entry.n:>6} {entry.value:>8.4f} {entry.se:>8.4f}")

# The assurance criterion asks for the 20th percentile of performance across
# training draws to clear the target, which needs more data than the mean.
assurance = SearchProblem(
    generator=problem.generator,
    metric="auc",
    tau=0.70,
    criterion=Criterion("assurance"),
    budget_B=400,
    kappa=10,
    n_test=20_000,
    master_seed=42,
)
print(f"\nassurance criterion: n* = {run_search(assurance, engine='gp').n_star} "
      f"vs mean criterion: n* = {result.n_star}")
