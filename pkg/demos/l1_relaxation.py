"""
Convex relaxation: sparsity as gamma grows
==========================================

Proximal gradient on 1/2 ||Ya - b||^2 + gamma ||a||_1. Larger gamma gives
sparser weights; above max |Y^T b| the solution is exactly zero.
"""

import numpy as np

from sparsesel import solvers, synth

Y, b = synth.gaussian_instance(seed=4, n=12, d=8)
gmax = np.abs(Y.T @ b).max()

for gamma in (0.05, 0.5, 1.0, 2.0, 0.5 * gmax, gmax):
    sol = solvers.solve_l1(Y, b, solvers.L1Config(gamma, 100_000, 1e-12))
    best = solvers.oracle_l1(Y, b, gamma)
    obj = solvers.l1_objective(Y, b, sol.dense(), gamma)
    print(f"gamma={gamma:7.3f}  nnz={len(sol)}  objective={obj:.8f}  "
          f"enumerated optimum={best.history[0]:.8f}  iterations={sol.iterations}")

# %%
# The objective never increases from one iteration to the next.
sol = solvers.solve_l1(Y, b, solvers.L1Config(0.5))
print("monotone:", bool(np.all(np.diff(sol.history) <= 1e-12)))
