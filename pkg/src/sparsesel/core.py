"""Linear discriminant types shared by the solvers.

Samples are augmented with a leading constant so that the bias folds into
the weight vector: ``y = [1, x1, ..., xd]`` and ``a = [w0, w1, ..., wd]``.
Column 0 of every augmented matrix is therefore the bias column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BIAS_COLUMN = 0


def as_feature_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"feature vector must be 1-D and non-empty, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector has non-finite entries")
    return x


def augment(x, negative: bool = False) -> np.ndarray:
    """Prefix ``x`` with the constant 1; negate the whole row for negative samples."""
    x = as_feature_vector(x)
    y = np.concatenate(([1.0], x))
    return -y if negative else y


def margin_vector(values) -> np.ndarray:
    """Validate a margin vector: 1-D, finite and strictly positive."""
    b = np.asarray(values, dtype=np.float64)
    if b.ndim != 1 or b.size < 1:
        raise ValueError(f"margin vector must be 1-D and non-empty, got shape {b.shape}")
    if not np.all(np.isfinite(b)) or np.any(b <= 0):
        raise ValueError("margin vector entries must be finite and strictly positive")
    return b


@dataclass(frozen=True)
class WeightVector:
    bias: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if not (np.isfinite(self.bias) and np.all(np.isfinite(w))):
            raise ValueError("weight vector has non-finite entries")
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_augmented(cls, a) -> WeightVector:
        a = np.asarray(a, dtype=np.float64)
        return cls(bias=a[0], weights=a[1:])

    def augmented(self) -> np.ndarray:
        return np.concatenate(([self.bias], self.weights))


@dataclass(frozen=True)
class AugmentedFeatureMatrix:
    """Stacked augmented samples with negative rows already negated.

    Attributes:
        values: ``(n, d + 1)`` array; row ``i`` is ``y_i`` for positives and
            ``-y_i`` for negatives.
        positive: boolean label per row (True for the positive class).
    """

    values: np.ndarray
    positive: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.values, dtype=np.float64)
        pos = np.asarray(self.positive, dtype=bool).reshape(-1)
        if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 2:
            raise ValueError(f"augmented matrix needs n >= 1 rows and >= 2 columns, got {Y.shape}")
        if pos.shape[0] != Y.shape[0]:
            raise ValueError("one label per row is required")
        object.__setattr__(self, "values", Y)
        object.__setattr__(self, "positive", pos)

    @classmethod
    def from_samples(cls, X, positive) -> AugmentedFeatureMatrix:
        """Augment raw samples ``X`` (n, d) and negate the negative rows."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("samples must be a 2-D array")
        pos = np.asarray(positive, dtype=bool)
        Y = np.hstack([np.ones((X.shape[0], 1)), X])
        Y[~pos] *= -1.0
        return cls(Y, pos)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d_plus_1(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class SparseSolution:
    """Sparse augmented weight vector with its fit record.

    ``history`` holds per-iteration residual norms for the greedy solvers and
    per-iteration objective values for the l1 solver.
    """

    support: np.ndarray
    coefficients: np.ndarray
    n_columns: int
    residual_norm: float
    iterations: int = 0
    converged: bool = True
    history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64).reshape(-1)
        c = np.asarray(self.coefficients, dtype=np.float64).reshape(-1)
        if s.shape != c.shape:
            raise ValueError("support and coefficients must have equal length")
        if s.size and (np.any(np.diff(s) <= 0) or s[0] < 0 or s[-1] >= self.n_columns):
            raise ValueError("support must be strictly increasing indices in [0, n_columns)")
        if self.residual_norm < 0:
            raise ValueError("residual norm must be nonnegative")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "history", np.asarray(self.history, dtype=np.float64))

    @classmethod
    def from_dense(cls, a, Y=None, b=None, **kwargs) -> SparseSolution:
        """Sparsify a dense vector; the residual is recomputed when Y and b are given."""
        a = np.asarray(a, dtype=np.float64)
        support = np.flatnonzero(a)
        if Y is not None and b is not None:
            kwargs["residual_norm"] = float(np.linalg.norm(residual(Y, a, b)))
        return cls(support, a[support], a.size, **kwargs)

    def dense(self) -> np.ndarray:
        a = np.zeros(self.n_columns)
        a[self.support] = self.coefficients
        return a

    def weight_vector(self) -> WeightVector:
        return WeightVector.from_augmented(self.dense())

    def __len__(self) -> int:
        return self.support.size


def discriminant(w: WeightVector, x) -> float:
    """Evaluate ``g(x) = w0 + sum_i w_i x_i``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != w.weights.shape:
        raise ValueError(f"incompatible shapes: weights {w.weights.shape}, features {x.shape}")
    return float(w.bias + w.weights @ x)


def residual(Y, a, b) -> np.ndarray:
    """Error vector ``Ya - b``."""
    Y = np.asarray(Y, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if Y.ndim != 2 or a.shape != (Y.shape[1],) or b.shape != (Y.shape[0],):
        raise ValueError(f"incompatible shapes: Y {Y.shape}, a {a.shape}, b {b.shape}")
    return Y @ a - b
