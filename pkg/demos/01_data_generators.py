"""
Tuning data-generating processes
================================

Each outcome family has a tuner that picks generator parameters so that the
population prevalence (or event rate) and the large-sample performance of a
correctly specified model hit user targets.  This script tunes one generator
per family and confirms the targets on a large Monte Carlo sample.
"""

import numpy as np

from simsize import (
    SeedStream,
    auc,
    c_index,
    generate,
    tune_binary,
    tune_continuous,
    tune_survival,
)

stream = SeedStream(2024)

# Continuous outcomes: the coefficient follows from the target R^2 in closed
# form, so tuning is exact.
cont = tune_continuous(r2_target=0.5, p=10)
print(f"continuous: beta_signal = {cont.beta_signal:.6f}")

data = generate(cont, 200_000, stream.child("continuous"))
eta = data.X @ cont.coefficients()
r2_pop = eta.var() / (eta.var() + 1.0)
print(f"  population R^2 from tuned coefficients: {r2_pop:.4f} (target 0.5)")

# Binary outcomes: the mean and scale of the linear predictor are optimised
# against the target prevalence and the target C-statistic.
bi = tune_binary(prevalence_target=0.2, c_target=0.8, p=10)
print(f"\nbinary: mu = {bi.mu:.4f}, sigma = {bi.sigma:.4f}")

data = generate(bi, 500_000, stream.child("binary"))
eta = data.X @ bi.coefficients() + bi.beta0
print(f"  empirical prevalence: {data.y.mean():.4f} (target 0.2)")
print(f"  AUC of the true linear predictor: {auc(eta, data.y):.4f} (target 0.8)")

# Survival outcomes: baseline hazard and linear-predictor scale are optimised
# against the target event rate (under administrative censoring) and C-index.
surv = tune_survival(event_rate_target=0.4, c_target=0.8, p=10, t_c=1.0)
print(f"\nsurvival: lambda0 = {surv.lambda0:.4f}, sigma = {surv.sigma:.4f}")

data = generate(surv, 500_000, stream.child("survival"))
eta = data.X @ surv.coefficients()
print(f"  empirical event rate: {data.events.mean():.4f} (target 0.4)")
print(f"  C-index of the true linear predictor: "
      f"{c_index(eta, data.times, data.events):.4f} (target 0.8)")

# Generator parameters serialise to JSON, the handoff format between the
# `tune` and `search` CLI subcommands.
print("\nserialised generator:")
print(surv.to_json(indent=2))
