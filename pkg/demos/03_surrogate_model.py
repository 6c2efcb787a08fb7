"""
Surrogate modelling of the size-performance curve
=================================================

The GP engine treats aggregated performance as an unknown smooth function of
log sample size.  This script fits the surrogate to noisy observations of a
known curve, reads off the posterior, estimates where the curve crosses a
target, and asks the acquisition rule where to sample next.
"""

import numpy as np

from simsize import GPObservation, acquire_next, crossing_estimate, fit_gp, posterior

rng = np.random.default_rng(3)

# True curve: saturating performance with crossing g(100) = 0.5
g = lambda n: n / (n + 100.0)
tau = 0.5

sizes = np.unique(np.round(np.geomspace(20, 800, 12)).astype(int))
noise_sd = 0.01
observations = [
    GPObservation(n=int(n), g_hat=g(n) + noise_sd * rng.standard_normal(), noise_var=noise_sd**2)
    for n in sizes
]

gp = fit_gp(observations)
print(f"fitted hyperparameters: signal sd = {np.sqrt(gp.signal_variance):.4f}, "
      f"length scale = {gp.length_scale:.3f} (log-n units)")

print(f"\n{'n':>5} {'truth':>8} {'post mean':>10} {'post sd':>9}")
for n in (30, 60, 100, 200, 600):
    mean, sd = posterior(gp, n)
    print(f"{n:>5} {g(n):>8.4f} {mean:>10.4f} {sd:>9.4f}")

est = crossing_estimate(gp, (20, 800), tau)
print(f"\nestimated minimum n with posterior mean >= {tau}: {est.n} "
      f"(true crossing at 100, crossed={est.crossed})")

candidate = acquire_next(gp, (20, 800), tau)
print(f"acquisition picks n = {candidate} next "
      "(high posterior sd near the target crossing)")
