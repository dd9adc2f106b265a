"""Sparse solvers for the penalized minimum-squared-error criterion.

Greedy pursuit (MP, OMP) approximates ``min ||Ya - b||^2 + tau^2 ||a||_0``;
``solve_l1`` runs proximal gradient (ISTA) on the relaxation
``min 1/2 ||Ya - b||^2 + gamma ||a||_1``; ``oracle_l0`` enumerates supports
exactly for verification on small instances.

All solvers take the raw (unnormalized) matrix. Column norms only enter the
atom-selection score.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import SparseSolution

TIE_TOL = 1e-12
PRUNE_TOL = 1e-12
MAX_ORACLE_COLUMNS = 24
MAX_ORACLE_SUPPORT = 12


class RankDeficientSupportError(np.linalg.LinAlgError):
    def __init__(self, atom: int, message: str):
        super().__init__(message)
        self.atom = atom


@dataclass(frozen=True)
class StoppingRule:
    """Halt when ``||r|| <= residual_threshold`` or ``max_atoms`` atoms are selected.

    ``max_iterations`` only bounds plain MP, which may revisit atoms.
    """

    residual_threshold: float = 0.0
    max_atoms: int | None = None
    max_iterations: int = 10_000

    def __post_init__(self):
        if self.residual_threshold < 0:
            raise ValueError("residual_threshold must be nonnegative")
        if self.max_atoms is not None and self.max_atoms < 1:
            raise ValueError("max_atoms must be a positive count")
        if self.residual_threshold == 0 and self.max_atoms is None:
            raise ValueError("at least one stopping criterion must be active")


@dataclass(frozen=True)
class L1Config:
    gamma: float
    max_iterations: int = 10_000
    convergence_tol: float = 1e-10
    step_size: float | None = None  # None means 1/L from power iteration

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")


def _prepare(Y, b, excluded_columns):
    Y = np.asarray(Y, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if Y.ndim != 2 or b.shape != (Y.shape[0],):
        raise ValueError(f"incompatible shapes: Y {Y.shape}, b {b.shape}")
    if Y.shape[0] == 0 or Y.shape[1] == 0:
        raise ValueError("Y must be non-empty")
    candidates = np.ones(Y.shape[1], dtype=bool)
    excluded = np.asarray(excluded_columns if excluded_columns is not None else (), dtype=np.int64)
    candidates[excluded.reshape(-1)] = False
    if not candidates.any():
        raise ValueError("candidate column set is empty")
    return Y, b, candidates


def _column_norms(Y, candidates):
    norms = np.linalg.norm(Y, axis=0)
    zero = np.flatnonzero(candidates & (norms == 0))
    if zero.size:
        raise ValueError(f"candidate column {int(zero[0])} has zero norm")
    return norms


def _select_atom(Y, r, norms, candidates):
    """Index of the candidate with the largest normalized |correlation|, lowest index on ties."""
    scores = np.abs(Y.T @ r) / np.where(norms > 0, norms, 1.0)
    scores[~candidates] = -np.inf
    best = scores.max()
    j = int(np.flatnonzero(scores >= best - TIE_TOL * max(best, 1.0))[0])
    return j, best


def _finish(Y, b, a, iterations, converged, history, prune=True):
    if prune:
        a = np.where(np.abs(a) < PRUNE_TOL, 0.0, a)
    support = np.flatnonzero(a)
    return SparseSolution(
        support=support,
        coefficients=a[support],
        n_columns=Y.shape[1],
        residual_norm=float(np.linalg.norm(Y @ a - b)),
        iterations=iterations,
        converged=converged,
        history=np.asarray(history),
    )


def solve_mp(Y, b, stop: StoppingRule, excluded_columns=()) -> SparseSolution:
    """Plain matching pursuit: only the chosen coefficient moves per step."""
    Y, b, candidates = _prepare(Y, b, excluded_columns)
    norms = _column_norms(Y, candidates)
    a = np.zeros(Y.shape[1])
    r = b.copy()
    rnorm = float(np.linalg.norm(r))
    history = [rnorm]
    chosen: set[int] = set()
    it = 0
    while it < stop.max_iterations:
        if rnorm <= stop.residual_threshold:
            break
        if stop.max_atoms is not None and len(chosen) >= stop.max_atoms:
            break
        j, score = _select_atom(Y, r, norms, candidates)
        if score <= TIE_TOL * rnorm:
            break
        step = (Y[:, j] @ r) / norms[j] ** 2
        a[j] += step
        r -= step * Y[:, j]
        chosen.add(j)
        rnorm = float(np.linalg.norm(r))
        history.append(rnorm)
        it += 1
    return _finish(Y, b, a, it, True, history)


def solve_omp(Y, b, stop: StoppingRule, excluded_columns=()) -> SparseSolution:
    """Orthogonal matching pursuit with a least-squares refit on the support each step.

    Raises:
        RankDeficientSupportError: the newly selected atom is (numerically)
            in the span of the atoms already selected.
    """
    Y, b, candidates = _prepare(Y, b, excluded_columns)
    norms = _column_norms(Y, candidates)
    candidates = candidates.copy()
    support: list[int] = []
    coef = np.zeros(0)
    r = b.copy()
    rnorm = float(np.linalg.norm(r))
    history = [rnorm]
    limit = min(Y.shape[0], int(candidates.sum()))
    if stop.max_atoms is not None:
        limit = min(limit, stop.max_atoms)
    L = np.zeros((0, 0))
    A = np.zeros((Y.shape[0], 0))
    while len(support) < limit and rnorm > stop.residual_threshold:
        j, score = _select_atom(Y, r, norms, candidates)
        if score <= TIE_TOL * rnorm:
            break
        c = Y[:, j]
        # grow the Cholesky factor of A^T A by one row
        w = linalg.solve_triangular(L, A.T @ c, lower=True) if support else np.zeros(0)
        pivot2 = float(c @ c - w @ w)
        # pivot^2 is the squared part of column j orthogonal to the previous atoms
        if pivot2 <= 1e-10 * norms[j] ** 2:
            raise RankDeficientSupportError(
                j, f"atom {j} is linearly dependent on the selected support {support}"
            )
        k = len(support)
        L_next = np.zeros((k + 1, k + 1))
        L_next[:k, :k] = L
        L_next[k, :k] = w
        L_next[k, k] = np.sqrt(pivot2)
        L = L_next
        A = np.column_stack([A, c])
        support.append(j)
        candidates[j] = False
        coef = linalg.cho_solve((L, True), A.T @ b)
        r = b - A @ coef
        rnorm = float(np.linalg.norm(r))
        history.append(rnorm)
    a = np.zeros(Y.shape[1])
    a[support] = coef
    return _finish(Y, b, a, len(support), True, history, prune=False)


def soft_threshold(x, level):
    return np.sign(x) * np.maximum(np.abs(x) - level, 0.0)


def lipschitz_bound(Y, iterations: int = 30, safety: float = 1.01) -> float:
    """Largest eigenvalue of ``Y^T Y`` by power iteration, inflated by ``safety``."""
    Y = np.asarray(Y, dtype=np.float64)
    d = Y.shape[1]
    v = 1.0 + np.arange(d) / max(d, 1)  # fixed start, no RNG in solvers
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = Y.T @ (Y @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 1.0
        lam = float(v @ w)
        v = w / nw
    return safety * max(lam, float(v @ (Y.T @ (Y @ v))))


def l1_objective(Y, b, a, gamma) -> float:
    r = np.asarray(Y) @ a - b
    return 0.5 * float(r @ r) + gamma * float(np.abs(a).sum())


def solve_l1(Y, b, cfg: L1Config, excluded_columns=()) -> SparseSolution:
    """Proximal gradient on ``1/2 ||Ya - b||^2 + gamma ||a||_1``.

    The automatic step is ``1/L`` with ``L`` from :func:`lipschitz_bound`.
    Since power iteration can underestimate, any step that would raise the
    objective is retried with ``L`` doubled, which keeps the objective
    sequence non-increasing. Hitting ``max_iterations`` is reported through
    ``converged=False``, not raised.
    """
    Y, b, candidates = _prepare(Y, b, excluded_columns)
    cols = np.flatnonzero(candidates)
    A = Y[:, cols]
    L = 1.0 / cfg.step_size if cfg.step_size is not None else lipschitz_bound(A)
    x = np.zeros(cols.size)
    obj = 0.5 * float(b @ b)
    history = [obj]
    Atb = A.T @ b
    converged = False
    it = 0
    while it < cfg.max_iterations:
        it += 1
        grad = A.T @ (A @ x) - Atb
        while True:
            x_new = soft_threshold(x - grad / L, cfg.gamma / L)
            obj_new = l1_objective(A, b, x_new, cfg.gamma)
            if obj_new <= obj + 1e-12 * max(obj, 1.0):
                break
            L *= 2.0
        change = float(np.linalg.norm(x_new - x))
        x, obj = x_new, obj_new
        history.append(obj)
        if change < cfg.convergence_tol:
            converged = True
            break
    a = np.zeros(Y.shape[1])
    a[cols] = x
    return _finish(Y, b, a, it, converged, history)


def oracle_l0(Y, b, tau: float, max_support: int, excluded_columns=()) -> SparseSolution:
    """Exact minimizer of ``||Ya - b||^2 + tau^2 |support|`` by enumeration.

    Ties go to the lexicographically smallest support. Rank-deficient
    supports are skipped.
    """
    Y, b, candidates = _prepare(Y, b, excluded_columns)
    if Y.shape[1] > MAX_ORACLE_COLUMNS or max_support > MAX_ORACLE_SUPPORT:
        raise ValueError(
            f"oracle limited to <= {MAX_ORACLE_COLUMNS} columns and support <= "
            f"{MAX_ORACLE_SUPPORT}; got {Y.shape[1]} columns, max_support={max_support}"
        )
    if tau <= 0:
        raise ValueError("tau must be positive")
    cols = [int(j) for j in np.flatnonzero(candidates)]
    penalty = tau * tau
    best_obj = float(b @ b)
    best_support: tuple[int, ...] = ()
    best_coef = np.zeros(0)
    tol = 1e-12 * max(best_obj, 1.0)
    for k in range(1, min(max_support, len(cols), Y.shape[0]) + 1):
        if k * penalty > best_obj + tol:
            break
        for S in itertools.combinations(cols, k):
            A = Y[:, S]
            if np.linalg.matrix_rank(A) < k:
                continue
            coef, *_ = np.linalg.lstsq(A, b, rcond=None)
            r = b - A @ coef
            obj = float(r @ r) + k * penalty
            if obj < best_obj - tol or (abs(obj - best_obj) <= tol and S < best_support):
                best_obj, best_support, best_coef = obj, S, coef
    a = np.zeros(Y.shape[1])
    a[list(best_support)] = best_coef
    n_sets = sum(math.comb(len(cols), k) for k in range(min(max_support, len(cols)) + 1))
    return _finish(Y, b, a, n_sets, True, [best_obj], prune=False)


def oracle_l1(Y, b, gamma: float) -> SparseSolution:
    """Global minimizer of ``1/2 ||Ya - b||^2 + gamma ||a||_1`` by sign-pattern enumeration.

    On a support ``S`` with signs ``s`` a stationary point has
    ``a_S = (Y_S^T Y_S)^{-1} (Y_S^T b - gamma s)``; it is admissible when
    ``sign(a_S) = s``. The best admissible point over every support (and the
    zero vector) is the global optimum for a full-column-rank ``Y``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = Y.shape[1]
    if d > MAX_ORACLE_COLUMNS // 2:
        raise ValueError(f"l1 oracle limited to <= {MAX_ORACLE_COLUMNS // 2} columns; got {d}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    Ytb = Y.T @ b
    best_a = np.zeros(d)
    best_obj = 0.5 * float(b @ b)
    for k in range(1, d + 1):
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=k))).T  # (k, 2^k)
        for S in itertools.combinations(range(d), k):
            A = Y[:, S]
            G = A.T @ A
            if np.linalg.matrix_rank(G) < k:
                continue
            cand = np.linalg.solve(G, Ytb[list(S), None] - gamma * signs)
            ok = np.all(np.sign(cand) == signs, axis=0)
            for col in np.flatnonzero(ok):
                a = np.zeros(d)
                a[list(S)] = cand[:, col]
                obj = l1_objective(Y, b, a, gamma)
                if obj < best_obj:
                    best_obj, best_a = obj, a
    n_sets = 3 ** d
    return _finish(Y, b, best_a, n_sets, True, [best_obj], prune=False)
