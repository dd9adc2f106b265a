"""
The Gabor bank and its feature layout
=====================================

32 complex kernels (4 scales x 8 orientations). Magnitude responses are
kept on a 4x4 pixel lattice, so a 64x64 image gives 32 * 16 * 16 = 8192
features.
"""

import numpy as np

from sparsesel import gabor, synth

bank = gabor.build_bank()
for spec, K in list(zip(bank.specs, bank.kernels))[::8]:
    ratio = abs(K.sum()) / np.abs(K).sum()
    print(f"nu={spec.nu:2d}  width={K.shape[0]}  |k|={spec.k:.4f}  DC ratio={ratio:.1e}")

faces = synth.synthetic_faces(seed=1, n_subjects=2, n_images=1)
fv = gabor.extract_features(faces.images[0], bank)
print("feature length:", len(fv), "full resolution:", gabor.full_feature_count())

# %%
# Each index maps back to (scale, orientation, pixel row, pixel col).
top = np.argsort(fv.values)[-5:][::-1]
for i in top:
    print(i, fv.location(int(i)), round(float(fv.values[i]), 4))
