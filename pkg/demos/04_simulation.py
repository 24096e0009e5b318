"""
Checking the analysis by simulation
===================================

Simulate the protocol itself: binomial candidate draws, pebbles that travel
once around the ring per candidate, rounds counted until one candidate is
left.  Compare with the exact recurrences.
"""

# %%
import numpy as np
from scipy.stats import chi2

from ring_analyzer import SimConfig, empirical_t_curve, exact_distribution, mean_rounds, simulate

# %%
N = 10_000
rep = simulate(SimConfig(N, 1.0, trials=50_000, master_seed=1, j_max=10))
print(f"simulated {rep.mean_rounds:.4f} +- {rep.mean_rounds_se:.4f}, exact {rep.analytic_mean:.4f}, z = {rep.z_score:.2f}")

# %% [markdown]
# Chi-square of the histogram against the exact law, bins 1..10 plus a tail.

# %%
d = exact_distribution(N, 10)
expected = np.append(d.probs, d.tail_mass) * rep.trials_run
observed = np.append(rep.round_histogram, rep.tail_fraction) * rep.trials_run
stat = ((observed - expected) ** 2 / expected).sum()
print(f"chi2 = {stat:.2f}, 0.999 quantile = {chi2.ppf(0.999, 10):.2f}")

# %% [markdown]
# About one pebble circulates per round on average, so the bit cost per
# round is close to N.

# %%
print(f"pebble hops / (N * rounds) = {rep.bit_ratio:.4f}")
print(f"hops/N - rounds = {rep.bits_minus_rounds:.4f} +- {rep.bits_minus_rounds_se:.4f}")

# %%
curve = empirical_t_curve(1000, [0.8, 1.0, 1.065, 1.3], trials=20_000, master_seed=2)
for t, m, se in curve:
    print(f"t = {t:5.3f}   simulated {m:.4f} +- {se:.4f}   exact {mean_rounds(1000, t).mean:.4f}")
