"""
Class-ratio margins and the Fisher direction
============================================

With every margin in a class set to that class's share of the samples,
the least-squares weights point along S_w^{-1} (m1 - m2).
"""

import numpy as np

from sparsesel import classifiers, shk

rng = np.random.default_rng(0)
A = rng.standard_normal((3, 3))
X = np.vstack([rng.standard_normal((30, 3)) @ A + 1.5, rng.standard_normal((45, 3)) @ A])
pos = np.r_[np.ones(30, bool), np.zeros(45, bool)]

Y = np.hstack([np.ones((75, 1)), X])
Y[~pos] *= -1
w = shk.solve_dense(Y, shk.make_margin("sfisher", pos)).dense()[1:]
f = classifiers.fisher_fit(X, pos).projection[:, 0]
print("|cos(mse, fisher)| =", abs(w @ f) / np.linalg.norm(w) / np.linalg.norm(f))
