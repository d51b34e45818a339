"""
An empirical phase diagram
==========================

Sweep sparsity alpha and signal constant C, estimate the risk of the HC test
on each cell, and compare with the theoretical boundary.
"""

# %%
from sbmdeg import harness
from sbmdeg.model import GraphParams

cfg = harness.ExperimentConfig(GraphParams(1000, 300, 100), 0.6, reps=40, base_seed=5)
alphas = [0.6, 0.7, 0.8, 0.9]
Cs = [0.0, 0.25, 0.5, 1.0, 2.0]
rows = harness.phase_diagram(alphas, Cs, cfg, ["hc"])

# %%
# Risk close to 1 means the test is powerless; close to 0 means it separates.
# The last column is the HC boundary for equal weights.
print("alpha " + " ".join(f"C={c:<4}" for c in Cs) + "  boundary")
for a in alphas:
    cells = [r for r in rows if r["alpha"] == a]
    print(f"{a:5.2f} " + " ".join(f"{r['risk']:6.2f}" for r in cells) + f"  {cells[0]['c_hc_vanilla']:8.3f}")
