"""
Tuning the candidacy probability
================================

Let each active processor stand with probability t/n instead of 1/n.  The
large-ring mean M(oo, t) is convex on (0, 2) with a single minimum slightly
above t = 1.  Beyond t = 2 two survivors can no longer break symmetry, and a
fixed round count has to be assigned to such states.
"""

# %%
from ring_analyzer import (
    SegmentSpec,
    find_t_star,
    limit_mean_derivative_t,
    limit_mean_t,
    scan_segment,
    segment_bounds_2_3,
)

# %%
scan = scan_segment(SegmentSpec.open02(), step=0.1)
for t, m, dm in scan.samples:
    print(f"t = {t:4.2f}   M = {m:10.6f}   M' = {dm: 12.6f}")
print("convex on the grid:", scan.convexity_ok)

# %%
t_star, m_star = find_t_star()
m1 = limit_mean_t(1.0)
print(f"t* = {t_star:.10f}, M(oo, t*) = {m_star:.10f}")
print(f"gain over t = 1: {100 * (m1 - m_star) / m1:.4f} %")

# %% [markdown]
# On [2, 3) two active processors are taken to need one more round.  The
# closed-form bounds bracket the limit at t = 2, but the closed-form slope
# bound there is larger than the slope itself.

# %%
b = segment_bounds_2_3(2.0)
print(f"{b.lower:.6f} <= M(oo, 2) = {b.m_inf:.6f} <= {b.upper:.6f}")
print(f"slope: computed {b.m_prime:.6f}, closed-form bound {b.dprime_lower:.6f}")

# %%
h = 1e-5
seg = SegmentSpec.int2to3()
fd = (limit_mean_t(2.0 + h, segment=seg) - limit_mean_t(2.0, segment=seg)) / h
print("one-sided difference quotient at t = 2:", fd)

# %%
for xi in (3, 4):
    s = scan_segment(SegmentSpec.general(xi), step=0.2)
    print(f"({xi}, {xi + 1}): increasing = {s.monotone_ok}, M from {s.m[0]:.4f} to {s.m[-1]:.4f}")
print("slope at 3.5:", limit_mean_derivative_t(3.5))
