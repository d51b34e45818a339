"""
Detection boundaries at a glance
================================

Where does a sparse set of degree-inflated vertices become detectable?  The
answer depends on the sparsity exponent alpha and on how the within-block and
across-block degrees are weighted.  This script tabulates the boundaries.
"""

# %%
# Regime limits come from the limiting ratios a/n and b/n.
import numpy as np

from sbmdeg import thresholds as th
from sbmdeg.model import GraphParams

params = GraphParams(10_000, 4000, 2000)
lim = th.RegimeLimits.from_params(params)
b1, b2 = th.optimal_betas(lim)
print(f"tau_a = {lim.tau_a}, tau_b = {lim.tau_b}")
print(f"optimal weights: beta1 = {b1:.4f}, beta2 = {b2:.4f}")

# %%
# The variance factor rho is smallest at the optimal weights.  Equal weights
# pay a small premium here.
print(f"rho(1, 1)     = {th.rho(1, 1, lim):.5f}")
print(f"rho(optimal)  = {th.rho(b1, b2, lim):.5f}")

# %%
# Boundaries over the sparse range.  The max-degree boundary only exists for
# alpha >= 3/4, where it coincides with the HC boundary.
print(f"{'alpha':>6} {'sparse':>8} {'hc(1,1)':>8} {'hc(opt)':>8} {'max(1,1)':>9}")
for alpha in np.arange(0.55, 1.0, 0.05):
    row = [th.c_sparse(alpha, lim), th.c_hc(alpha, 1, 1, lim), th.c_hc(alpha, b1, b2, lim)]
    mx = th.c_max(alpha, 1, 1, lim) if alpha >= 0.75 else float("nan")
    print(f"{alpha:6.2f} " + " ".join(f"{v:8.4f}" for v in row) + f" {mx:9.4f}")

# %%
# In the dense regime the boundary is a power of n, not a log factor.
for alpha in (0.1, 0.25, 0.4):
    print(f"dense alpha = {alpha}: r boundary = {th.c_dense(alpha):.3f}")
