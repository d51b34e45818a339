"""
The maximum degree under the null
=================================

Centred and scaled, the largest degree of a null graph is approximately
Gumbel.  Here we look at the empirical distribution of the y-statistic.
"""

# %%
import numpy as np

from sbmdeg import harness

res = harness.gumbel_check(1000, 300, 200, reps=300, seed=4)
for w in res.warnings:
    print("warning:", w)
print(f"KS distance to exp(-exp(-y)): {res.ks_distance:.3f}")

# %%
# Empirical quantiles against the limit.
for q, emp, ref in res.quantiles:
    print(f"q = {q:.1f}: empirical {emp:6.3f}  Gumbel {ref:6.3f}")

# %%
# The Gumbel-calibrated max-degree test at level 0.05.
print(f"empirical Type I at 0.05: {res.rejection_rate(0.05):.3f}")
print(f"largest max degree seen: {int(np.max(res.max_degrees))}")
