"""Seeded synthetic instances for the solver checks and the recognition benchmark.

All randomness lives here (numpy ``default_rng``); solvers never draw numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def coherence(D) -> float:
    """Largest |<d_i, d_j>| between distinct normalized columns."""
    D = np.asarray(D, dtype=np.float64)
    U = D / np.linalg.norm(D, axis=0)
    G = np.abs(U.T @ U)
    np.fill_diagonal(G, 0.0)
    return float(G.max()) if G.size > 1 else 0.0


def incoherent_dictionary(rng, n: int, d: int, max_coherence: float,
                          perturbation: float = 0.35) -> np.ndarray:
    """Unit-norm ``n x d`` dictionary with coherence below ``max_coherence``.

    Starts from an orthonormal frame and perturbs it, shrinking the
    perturbation until the coherence bound holds.
    """
    if d > n:
        raise ValueError("the perturbed-frame construction needs d <= n")
    Q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    eps = perturbation
    while True:
        D = Q + eps * rng.standard_normal((n, d)) / np.sqrt(n)
        D /= np.linalg.norm(D, axis=0)
        if coherence(D) < max_coherence:
            return D
        eps *= 0.8


@dataclass(frozen=True)
class PlantedInstance:
    Y: np.ndarray
    b: np.ndarray
    a: np.ndarray
    support: tuple


def planted_instance(seed: int, n: int = 20, d: int = 15, k: int = 3,
                     max_coherence: float | None = None) -> PlantedInstance:
    """Exactly ``k``-sparse system ``b = Y a`` with coefficient magnitudes in [1, 2]."""
    rng = np.random.default_rng(seed)
    if max_coherence is None:
        max_coherence = 1.0 / (2 * k - 1) if k > 0 else 1.0
    Y = incoherent_dictionary(rng, n, d, max_coherence)
    support = tuple(sorted(int(i) for i in rng.choice(d, size=k, replace=False)))
    a = np.zeros(d)
    a[list(support)] = rng.uniform(1.0, 2.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    b = Y @ a
    if k == 0:
        b = rng.standard_normal(n)
    return PlantedInstance(Y, b, a, support)


def gaussian_instance(seed: int, n: int = 12, d: int = 8):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, d)), rng.standard_normal(n)


def gaussian_blobs(seed: int, n_per_class: int = 20, separation: float = 6.0,
                   dim: int = 2, sigma: float = 1.0):
    """Two isotropic Gaussian classes whose means lie ``separation * sigma`` apart.

    Returns ``(X, positive)``. Samples are redrawn until the classes are
    linearly separable along the mean-difference direction.
    """
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    m1 = 0.5 * separation * sigma * direction + rng.uniform(-2, 2, size=dim)
    m2 = m1 - separation * sigma * direction
    mid = 0.5 * (m1 + m2)
    while True:
        X1 = m1 + sigma * rng.standard_normal((n_per_class, dim))
        X2 = m2 + sigma * rng.standard_normal((n_per_class, dim))
        if np.all((X1 - mid) @ direction > 0) and np.all((X2 - mid) @ direction < 0):
            break
    X = np.vstack([X1, X2])
    positive = np.r_[np.ones(n_per_class, bool), np.zeros(n_per_class, bool)]
    return X, positive


# 16x16 discriminative patches as (row0, col0): eyes, nose, mouth corners
FACE_PATCHES = ((2, 2), (2, 46), (22, 22), (46, 2), (46, 46))
PATCH_SIZE = 16


@dataclass(frozen=True)
class SyntheticFaces:
    images: np.ndarray  # (n, 64, 64) in [0, 1]
    subjects: tuple
    patches: tuple
    patch_size: int = PATCH_SIZE

    def patch_mask(self) -> np.ndarray:
        mask = np.zeros(self.images.shape[1:], dtype=bool)
        for r, c in self.patches:
            mask[r:r + self.patch_size, c:c + self.patch_size] = True
        return mask


def _grating(rng, size, n_waves, freq_range):
    """Mean of ``n_waves`` plane waves with random orientation, frequency and phase."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    out = np.zeros((size, size))
    for _ in range(n_waves):
        theta = rng.uniform(0, np.pi)
        freq = rng.uniform(*freq_range)
        phase = rng.uniform(0, 2 * np.pi)
        out += np.cos(freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
    return out / n_waves


def synthetic_faces(seed: int, n_subjects: int = 10, n_images: int = 6, size: int = 64,
                    noise: float = 0.05, gain_jitter: float = 0.15,
                    background_gain: float = 1.5) -> SyntheticFaces:
    """Textured images where only the five patches carry subject identity.

    Each subject owns one low-frequency texture per patch (radian frequency
    0.25-1.2), repeated in every image with a random contrast gain. The
    background is a fresh broadband texture per image (0.25-2.4) and pixel
    noise covers everything, so outside the patches same-subject and
    different-subject images are statistically alike.
    """
    rng = np.random.default_rng(seed)
    identity = [[_grating(rng, PATCH_SIZE, 2, (0.25, 1.2)) for _ in FACE_PATCHES]
                for _ in range(n_subjects)]
    images, subjects = [], []
    for s in range(n_subjects):
        for _ in range(n_images):
            img = background_gain * _grating(rng, size, 2, (0.25, 2.4))
            for (r, c), tex in zip(FACE_PATCHES, identity[s]):
                gain = rng.uniform(1 - gain_jitter, 1 + gain_jitter)
                img[r:r + PATCH_SIZE, c:c + PATCH_SIZE] = gain * tex
            img = 0.5 + 0.3 * img + noise * rng.standard_normal((size, size))
            images.append(np.clip(img, 0.0, 1.0))
            subjects.append(f"s{s:02d}")
    return SyntheticFaces(np.array(images), tuple(subjects), FACE_PATCHES)
