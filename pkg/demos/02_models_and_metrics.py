"""
Model fitting and performance metrics
=====================================

Fit the default model for each outcome family on a modest training sample and
score it on a large held-out test set.  Smaller training samples overfit, so
out-of-sample discrimination drops and the calibration slope falls below 1;
this is the sample size / performance trade-off the search engines exploit.
"""

import numpy as np

from simsize import (
    SeedStream,
    calibration_slope,
    fit_cox,
    fit_linear,
    fit_logistic,
    generate,
    linear_predictor,
    score_model,
    tune_binary,
    tune_continuous,
    tune_survival,
)

stream = SeedStream(7)

bi = tune_binary(0.2, 0.8, p=10)
test = generate(bi, 50_000, stream.child("test"))

print("binary outcome, AUC and calibration slope by training size")
print(f"{'n':>6} {'auc':>8} {'slope':>8}")
for n in (75, 150, 300, 1200):
    train = generate(bi, n, stream.child("train", n))
    model = fit_logistic(train)
    eta = linear_predictor(model, test.X)
    print(f"{n:>6} {score_model('auc', model, test):>8.4f} "
          f"{calibration_slope(eta, test):>8.4f}")

cont = tune_continuous(0.7, p=10)
test_c = generate(cont, 50_000, stream.child("test-c"))
print("\ncontinuous outcome, out-of-sample R^2 by training size")
for n in (30, 60, 120, 500):
    train = generate(cont, n, stream.child("train-c", n))
    model = fit_linear(train)
    print(f"  n={n:>4}: R^2 = {score_model('r2', model, test_c):.4f}")

surv = tune_survival(0.8, 0.8, p=10)
test_s = generate(surv, 50_000, stream.child("test-s"))
print("\nsurvival outcome, C-index by training size")
for n in (20, 32, 64, 250):
    train = generate(surv, n, stream.child("train-s", n))
    model = fit_cox(train)
    print(f"  n={n:>4}: C = {score_model('c_index', model, test_s):.4f}")
