"""
End to end: synthetic faces to recognition
==========================================

Ten synthetic subjects, six 64x64 images each. Identity lives in five
16x16 patches; the rest of each image is fresh texture. Train on four
images per subject, probe with the other two.

Pass ``--quick`` for a short run with a reduced iteration budget.
"""

import sys
import time

import numpy as np

from sparsesel import classifiers, gabor, pairs, shk, solvers, synth

quick = "--quick" in sys.argv
t0 = time.perf_counter()
faces = synth.synthetic_faces(seed=42)
bank = gabor.build_bank()
F = np.array([gabor.extract_features(img, bank).values for img in faces.images])
subjects = np.array(faces.subjects)
train = np.arange(len(F)) % 6 < 4

# intra pairs plus 7x as many sampled extra pairs
ps = pairs.build_pairs(F[train], subjects[train], pairs.SamplingPolicy(1, 7, seed=42))
Y, _, intra = pairs.assemble_matrix(ps, "uniform")
print("pair matrix:", Y.values.shape, "intra:", int(intra.sum()))

cfg = shk.ShkConfig(inner_solver="omp", stop=solvers.StoppingRule(max_atoms=100),
                    max_outer_iterations=10 if quick else 200)
sol, b, trace = shk.run_shk(Y.values, cfg)
model = classifiers.SelectionModel.from_solution(sol, "shk", "omp", seed=42)
print("selected:", model.support.size, "outer iterations:", len(trace))

mask = faces.patch_mask()
inside = np.mean([mask[r, c] for _, _, r, c in map(gabor.feature_location, model.support)])
print(f"inside the identity patches: {inside:.2f} (patches cover {mask.mean():.2f} of the image)")

# %%
# Recognition on the selected features only.
G, P = model.gather(F[train]), model.gather(F[~train])
gallery = list(subjects[train])
for name, predict in [
    ("NNC l1", lambda p: classifiers.nnc_classify(G, gallery, p, "l1")),
    ("MMC", lambda p: classifiers.mmc_classify(model.weights, model.bias, G, gallery, p)),
]:
    acc = np.mean([predict(p) == s for p, s in zip(P, subjects[~train])])
    print(f"{name}: accuracy {acc:.3f}")
fc = classifiers.fisher_fit(G, gallery)
print(f"Fisher: accuracy {np.mean(np.array(fc.predict(P)) == subjects[~train]):.3f}")
print(f"total {time.perf_counter() - t0:.0f}s")
