"""
Rounds needed to elect a leader
===============================

Every active processor stands with probability 1/n; one candidate wins,
zero candidates repeat the round, several candidates become the new active
set.  How many rounds does that take on average, and how does the answer
behave as the ring grows?
"""

# %%
import numpy as np

from ring_analyzer import (
    correction_c1,
    correction_c2_fit,
    limit_second_moment,
    mean_rounds,
    round_table,
    second_moment_rounds,
)

# %% [markdown]
# Two processors flip fair coins until exactly one stands, so the round count
# is geometric with mean 2 and second moment 6.

# %%
r = second_moment_rounds(2)
print(r)

# %%
for n in (3, 10, 100, 1000, 10_000):
    print(f"n = {n:>6}   M(n) = {mean_rounds(n).mean:.12f}")

# %% [markdown]
# The mean creeps up to a finite limit.  Its value and the variance of the
# limiting law come from Poisson-weighted sums of the finite values.

# %%
lim = limit_second_moment(30)
print(f"M(oo)   = {lim.m_inf:.10f}  (truncation bound {lim.tail_bound:.1e})")
print(f"M2(oo)  = {lim.m2_inf:.10f}")
print(f"var(oo) = {lim.var_inf:.10f}")

# %% [markdown]
# The approach is like 1/n.  Compare the exact values with the two-term
# expansion M(oo) + C1/n + C2/n^2.

# %%
c1 = correction_c1()
c2 = correction_c2_fit(250, 300)
M = round_table(2000).mean
for n in (20, 50, 300, 2000):
    approx = lim.m_inf + c1 / n + c2 / n**2
    print(f"n = {n:>5}   exact - expansion = {M[n] - approx: .2e}")

# %%
n = np.arange(100, 2001)
scaled = n * (M[100:] - lim.m_inf)
print("n (M(n) - M(oo)) at n = 100, 2000:", scaled[0], scaled[-1], "   C1 =", c1)
