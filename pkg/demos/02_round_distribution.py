"""
The full round-count law
========================

Beyond the mean: the probability that the election needs exactly j rounds,
for a finite ring and in the large-ring limit, and its geometric tail.
"""

# %%
import numpy as np

from ring_analyzer import exact_distribution, limit_distribution, residues, tail_law

# %%
lim = limit_distribution(40)
for j, p in enumerate(lim.probs[:13], start=1):
    print(f"P(oo, {j:>2}) = {p:.10f}")

# %% [markdown]
# For large j the limit law halves with every extra round: once two
# processors remain, each round elects with probability 1/2.  The amplitude
# collects the residues R(k) of every intermediate active count.

# %%
R = residues(15)
law = tail_law(15)
print("R(2..6) =", np.round(R[2:7], 6))
print(f"rho = {law.rho:.10f}, coefficient = {law.coefficient:.9f}")
for j in (5, 10, 15, 20, 25, 30):
    print(f"j = {j:>2}  P / (coef 2^-j) = {lim.probs[j - 1] / law(j):.6f}")

# %% [markdown]
# Finite rings approach the limit column by column.

# %%
for n in (10, 100, 1000):
    d = exact_distribution(n, 13)
    print(f"n = {n:>5}   max |P(n, j) - P(oo, j)| = {np.abs(d.probs - lim.probs[:13]).max():.2e}")

# %% [markdown]
# The moments of the limit law reproduce the limits computed directly.

# %%
print("sum j P(oo, j)   =", lim.moment(1))
print("sum j^2 P(oo, j) =", lim.moment(2))

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    j = np.arange(1, 41)
    fig, ax = plt.subplots()
    ax.semilogy(j, lim.probs, "o", label="P(oo, j)")
    ax.semilogy(j, law(j), "-", label="coefficient * 2^-j")
    ax.set_xlabel("rounds j")
    ax.legend()
    fig.savefig("round_distribution.png", dpi=120)
