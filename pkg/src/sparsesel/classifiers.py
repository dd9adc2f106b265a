"""Recognition on selected features, plus the selection-model file format."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .core import BIAS_COLUMN, SparseSolution

DISTANCES = ("l1", "l2", "cosine")
MODEL_HEADER = "SPARSESEL v1"


def distances(gallery, probe, kind: str = "l1") -> np.ndarray:
    """Distance from ``probe`` to every row of ``gallery``."""
    G = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    p = np.asarray(probe, dtype=np.float64)
    if G.shape[1] != p.shape[0]:
        raise ValueError(f"dimension mismatch: gallery {G.shape[1]}, probe {p.shape[0]}")
    diff = G - p
    if kind == "l1":
        return np.abs(diff).sum(axis=1)
    if kind == "l2":
        return np.sqrt((diff * diff).sum(axis=1))
    if kind == "cosine":
        gn = np.linalg.norm(G, axis=1)
        pn = np.linalg.norm(p)
        if pn == 0 or np.any(gn == 0):
            raise ValueError("cosine distance is undefined for zero vectors")
        return 1.0 - (G @ p) / (gn * pn)
    raise ValueError(f"unknown distance {kind!r}; expected one of {DISTANCES}")


def nnc_classify(gallery, subjects, probe, dist: str = "l1"):
    """Subject of the nearest gallery vector; the lowest gallery index wins ties."""
    if len(subjects) == 0:
        raise ValueError("gallery is empty")
    return subjects[int(np.argmin(distances(gallery, probe, dist)))]


def mmc_scores(weights, bias, gallery, subjects, probe):
    """Best discriminant value per subject, in order of first gallery appearance.

    Each gallery sample is paired with the probe through the absolute
    difference, then scored with ``bias + weights . |probe - sample|``.
    """
    G = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    g = bias + np.abs(G - np.asarray(probe, dtype=np.float64)) @ np.asarray(weights, dtype=np.float64)
    order: list = []
    best: dict = {}
    for s, v in zip(subjects, g):
        if s not in best:
            order.append(s)
            best[s] = v
        elif v > best[s]:
            best[s] = v
    return order, np.array([best[s] for s in order])


def mmc_classify(weights, bias, gallery, subjects, probe):
    """Subject whose gallery samples maximize the pair discriminant.

    A winning score <= 0 means no subject passed the separating condition;
    callers can check it with :func:`mmc_scores`.
    """
    if len(subjects) == 0:
        raise ValueError("at least one candidate subject is required")
    order, scores = mmc_scores(weights, bias, gallery, subjects, probe)
    return order[int(np.argmax(scores))]


@dataclass(frozen=True)
class FisherModel:
    projection: np.ndarray
    center: np.ndarray
    class_means: np.ndarray
    classes: tuple

    def transform(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.projection - self.center

    def predict(self, X, dist: str = "cosine") -> list:
        Z = self.transform(X)
        return [self.classes[int(np.argmin(distances(self.class_means, z, dist)))] for z in Z]


def fisher_fit(X, labels, out_dim: int | None = None) -> FisherModel:
    """Multi-class Fisher discriminant with a ridge on the within-class scatter.

    ``S_w + lambda I`` with ``lambda = 1e-4 trace(S_w) / dim`` keeps the
    generalized eigenproblem well posed for duplicate or rank-deficient
    features. Projected data are centred on the training mean so that cosine
    nearest-mean classification is meaningful.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    classes = tuple(dict.fromkeys(labels))
    if len(classes) < 2:
        raise ValueError("Fisher discriminant needs at least two classes")
    out_dim = len(classes) - 1 if out_dim is None else out_dim
    if not 1 <= out_dim <= len(classes) - 1:
        raise ValueError("out_dim must be between 1 and (classes - 1)")
    lab = np.array([classes.index(c) for c in labels])
    mean = X.mean(axis=0)
    dim = X.shape[1]
    Sw = np.zeros((dim, dim))
    Sb = np.zeros((dim, dim))
    means = []
    for c in range(len(classes)):
        Xc = X[lab == c]
        mc = Xc.mean(axis=0)
        means.append(mc)
        D = Xc - mc
        Sw += D.T @ D
        Sb += Xc.shape[0] * np.outer(mc - mean, mc - mean)
    lam = 1e-4 * np.trace(Sw) / dim
    if lam == 0:
        lam = 1e-12
    _, vecs = linalg.eigh(Sb, Sw + lam * np.eye(dim))
    W = vecs[:, ::-1][:, :out_dim]
    center = mean @ W
    return FisherModel(W, center, np.array(means) @ W - center, classes)


# --- selection model file ----------------------------------------------------

@dataclass(frozen=True)
class SelectionModel:
    """Selected feature indices (into the non-augmented vector) with their weights."""

    support: np.ndarray
    weights: np.ndarray
    bias: float
    dim: int
    method: str
    solver: str
    seed: int = 0
    ratio: str = "1:7"
    digest: str = "0" * 64

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if s.shape != w.shape:
            raise ValueError("support and weights must align")
        if s.size and (np.any(np.diff(s) <= 0) or s[0] < 0 or s[-1] >= self.dim):
            raise ValueError("support must be sorted, unique and below dim")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def from_solution(cls, solution: SparseSolution, method: str, solver: str, **provenance):
        mask = solution.support != BIAS_COLUMN
        bias = solution.coefficients[~mask].sum() if (~mask).any() else 0.0
        return cls(solution.support[mask] - 1, solution.coefficients[mask], bias,
                   solution.n_columns - 1, method, solver, **provenance)

    def gather(self, X) -> np.ndarray:
        """Restrict full feature vectors to the selected components."""
        return np.asarray(X)[..., self.support]

    def discriminant(self, x_selected) -> np.ndarray:
        return self.bias + np.asarray(x_selected, dtype=np.float64) @ self.weights

    def dumps(self) -> str:
        lines = [
            MODEL_HEADER,
            f"method {self.method} solver {self.solver}",
            f"dim {self.dim} nnz {self.support.size} bias {float(self.bias)!r}",
        ]
        lines += [f"{int(i)} {float(w)!r}" for i, w in zip(self.support, self.weights)]
        lines.append(f"provenance seed={self.seed} ratio={self.ratio} digest={self.digest}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> SelectionModel:
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != MODEL_HEADER:
            raise ValueError(f"not a selection model (expected {MODEL_HEADER!r})")
        try:
            _, method, _, solver = lines[1].split(" ")
            _, dim, _, nnz, _, bias = lines[2].split(" ")
            k = int(nnz)
            entries = [ln.split(" ") for ln in lines[3:3 + k]]
            prov_line = lines[3 + k]
        except (ValueError, IndexError) as exc:
            raise ValueError("malformed selection model") from exc
        if len(lines) != 4 + k or not prov_line.startswith("provenance "):
            raise ValueError("malformed selection model")
        prov = dict(item.split("=", 1) for item in prov_line.split(" ")[1:])
        return cls(
            support=[int(i) for i, _ in entries],
            weights=[float(w) for _, w in entries],
            bias=float(bias), dim=int(dim), method=method, solver=solver,
            seed=int(prov["seed"]), ratio=prov["ratio"], digest=prov["digest"],
        )

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path) -> SelectionModel:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def dataset_digest(*blobs: bytes) -> str:
    h = hashlib.sha256()
    for blob in blobs:
        h.update(blob)
    return h.hexdigest()
