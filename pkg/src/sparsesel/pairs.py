"""Intra/extra-personal pair samples and the balanced augmented matrix.

Every image pair yields a feature vector of absolute differences between the
two Gabor representations. Same-subject pairs are positive (intra), the rest
negative (extra). All intra pairs are kept; extra pairs are drawn without
replacement until the requested intra:extra ratio is met.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import AugmentedFeatureMatrix
from .shk import make_margin

RNG_NAME = "splitmix64"
SPPM_MAGIC = b"SPPM"
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Portable 64-bit generator (Steele, Lea & Flood), identical on every platform."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound


def sample_without_replacement(rng: SplitMix64, population: int, k: int) -> list[int]:
    """Partial Fisher-Yates over ``range(population)``; only swapped slots are stored."""
    swaps: dict[int, int] = {}
    out = []
    for t in range(k):
        j = t + rng.below(population - t)
        out.append(swaps.get(j, j))
        swaps[j] = swaps.get(t, t)
    return out


def count_pairs(C: int, K: int) -> tuple[int, int, int]:
    """(total, intra, extra) pair counts for C subjects with K images each."""
    total = C * K * (C * K - 1) // 2
    intra = C * K * (K - 1) // 2
    return total, intra, total - intra


@dataclass(frozen=True)
class DatasetManifest:
    paths: tuple
    subjects: tuple

    def __post_init__(self):
        if len(self.paths) != len(self.subjects):
            raise ValueError("one subject per path is required")
        if len(set(self.paths)) != len(self.paths):
            raise ValueError("manifest paths must be unique")

    def __len__(self):
        return len(self.paths)

    @property
    def subject_counts(self) -> dict:
        counts: dict = {}
        for s in self.subjects:
            counts[s] = counts.get(s, 0) + 1
        return counts


def read_manifest(path) -> DatasetManifest:
    """Read a ``path,subject`` CSV; relative paths resolve against the manifest's directory."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"path", "subject"} <= set(rows[0]):
        raise ValueError(f"{path}: manifest needs columns 'path,subject'")
    base = path.parent
    paths = tuple(str(p if Path(p).is_absolute() else base / p) for p in (r["path"] for r in rows))
    return DatasetManifest(paths, tuple(r["subject"] for r in rows))


def write_manifest(path, manifest: DatasetManifest, relative_to=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "subject"])
        for p, s in zip(manifest.paths, manifest.subjects):
            if relative_to is not None:
                p = Path(p).relative_to(relative_to).as_posix()
            w.writerow([p, s])


@dataclass(frozen=True)
class SamplingPolicy:
    intra: int = 1
    extra: int = 7
    seed: int = 42
    keep_all_positives: bool = True

    def __post_init__(self):
        if self.intra < 1 or self.extra < 1:
            raise ValueError("ratio terms must be positive")
        if not 1 <= self.extra / self.intra <= 10:
            raise ValueError("intra:extra ratio must lie between 1:1 and 1:10")

    @property
    def ratio(self) -> str:
        return f"{self.intra}:{self.extra}"


@dataclass(frozen=True)
class PairSample:
    feature: np.ndarray
    intra: bool
    pair: tuple


@dataclass(frozen=True)
class PairSet:
    """Sampled pairs as arrays; iterating yields :class:`PairSample`."""

    features: np.ndarray
    intra: np.ndarray
    pairs: np.ndarray
    clamped: bool = False

    def __len__(self):
        return self.intra.size

    def __iter__(self):
        for f, lab, p in zip(self.features, self.intra, self.pairs):
            yield PairSample(f, bool(lab), (int(p[0]), int(p[1])))


def enumerate_pairs(subjects):
    """All (i, j), i < j, split into intra and extra lists, lexicographic order."""
    subjects = list(subjects)
    intra, extra = [], []
    for i in range(len(subjects)):
        for j in range(i + 1, len(subjects)):
            (intra if subjects[i] == subjects[j] else extra).append((i, j))
    return intra, extra


def sample_pair_indices(subjects, policy: SamplingPolicy):
    """Choose pair indices per the policy.

    Returns ``(pairs, intra_mask, clamped)`` with intra pairs first, then the
    sampled extra pairs, each block in lexicographic order.
    """
    intra, extra = enumerate_pairs(subjects)
    rng = SplitMix64(policy.seed)
    clamped = False
    if not policy.keep_all_positives and intra:
        # let intra shrink so the ratio holds when extras are the scarce side
        n_intra = min(len(intra), max(1, len(extra) * policy.intra // policy.extra))
        intra = [intra[i] for i in sorted(sample_without_replacement(rng, len(intra), n_intra))]
    want = len(intra) * policy.extra // policy.intra
    if want > len(extra):
        warnings.warn(f"requested {want} extra-personal pairs, only {len(extra)} available; clamping")
        want, clamped = len(extra), True
    chosen = sorted(sample_without_replacement(rng, len(extra), want))
    pairs = intra + [extra[i] for i in chosen]
    mask = np.zeros(len(pairs), dtype=bool)
    mask[:len(intra)] = True
    return np.array(pairs, dtype=np.int64).reshape(-1, 2), mask, clamped


def build_pairs(features, subjects, policy: SamplingPolicy) -> PairSet:
    """Absolute-difference pair samples for the sampled index pairs.

    Args:
        features: ``(n_images, d)`` Gabor feature vectors, aligned with ``subjects``.
        subjects: subject identifier per image (e.g. ``manifest.subjects``).
        policy: sampling ratio and seed.
    """
    features = np.asarray(features, dtype=np.float64)
    subjects = list(subjects)
    if features.shape[0] != len(subjects):
        raise ValueError("features must align one-to-one with subjects")
    pairs, mask, clamped = sample_pair_indices(subjects, policy)
    diffs = np.abs(features[pairs[:, 0]] - features[pairs[:, 1]]) if len(pairs) \
        else np.zeros((0, features.shape[1]))
    return PairSet(diffs, mask, pairs, clamped)


def assemble_matrix(samples, margin: str = "sfisher", initial_margin: float = 1.0):
    """Augmented matrix, margin vector and labels from pair samples.

    Extra-personal rows are negated in full, including the leading 1.
    """
    if isinstance(samples, PairSet):
        X, intra = samples.features, samples.intra
    else:
        samples = list(samples)
        X = np.array([s.feature for s in samples], dtype=np.float64)
        intra = np.array([s.intra for s in samples], dtype=bool)
    if len(intra) == 0:
        raise ValueError("no pair samples to assemble")
    Y = AugmentedFeatureMatrix.from_samples(X, intra)
    b = make_margin(margin, intra, initial_margin)
    return Y, b, intra


def encode_sppm(Y, intra) -> bytes:
    Y = np.ascontiguousarray(Y, dtype="<f8")
    intra = np.asarray(intra, dtype=np.uint8)
    n, m = Y.shape
    return SPPM_MAGIC + struct.pack("<II", n, m) + Y.tobytes() + intra.tobytes()


def decode_sppm(data: bytes):
    if data[:4] != SPPM_MAGIC:
        raise ValueError("not an SPPM pair matrix")
    n, m = struct.unpack_from("<II", data, 4)
    body = 12 + 8 * n * m
    if len(data) != body + n:
        raise ValueError("SPPM payload size does not match its header")
    Y = np.frombuffer(data, dtype="<f8", count=n * m, offset=12).reshape(n, m).astype(np.float64)
    intra = np.frombuffer(data, dtype=np.uint8, count=n, offset=body).astype(bool)
    return Y, intra


def write_sppm(path, Y, intra) -> None:
    Path(path).write_bytes(encode_sppm(Y, intra))


def read_sppm(path):
    return decode_sppm(Path(path).read_bytes())
