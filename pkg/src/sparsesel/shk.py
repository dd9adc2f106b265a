"""Sparse Ho-Kashyap procedure and fixed-margin selection presets.

Three margin regimes drive feature selection:

* ``ssmes``: ``b = 1`` and the bias column is never a candidate.
* ``sfisher``: ``b_i = n_c / n`` for the class ``c`` of sample ``i``.
* ``shk``: ``b`` starts positive and is raised by the positive part of the
  error after every sparse solve, with learn rate ``eta1 / t``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import BIAS_COLUMN, SparseSolution, margin_vector, residual
from .solvers import L1Config, StoppingRule, solve_l1, solve_mp, solve_omp

MARGIN_PRESETS = ("ssmes", "sfisher", "uniform")
INNER_SOLVERS = ("mp", "omp", "l1", "lstsq")


class ShkError(RuntimeError):
    pass


def positive_part(e) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64)
    return 0.5 * (e + np.abs(e))


def margin_update(b, e, eta_t: float) -> np.ndarray:
    """Return ``b + 2 eta_t e+``; components never decrease."""
    if not eta_t > 0:
        raise ValueError("learn rate must be positive")
    b = np.asarray(b, dtype=np.float64)
    if np.any(b <= 0):
        raise ValueError("margin vector must be strictly positive before the update")
    return b + 2.0 * eta_t * positive_part(e)


def make_margin(preset: str, labels, initial_margin: float = 1.0) -> np.ndarray:
    """Build a margin vector for the given preset and per-sample class labels."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("labels must be non-empty")
    n = labels.size
    if preset == "ssmes":
        return np.ones(n)
    if preset == "uniform":
        if not initial_margin > 0:
            raise ValueError("initial_margin must be positive")
        return np.full(n, float(initial_margin))
    if preset == "sfisher":
        _, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
        return counts[inverse.reshape(-1)] / n
    raise ValueError(f"unknown margin preset {preset!r}; expected one of {MARGIN_PRESETS}")


def solve_dense(Y, b) -> SparseSolution:
    """Unconstrained least-squares solve, the classical Ho-Kashyap weight step."""
    a, *_ = np.linalg.lstsq(np.asarray(Y, dtype=np.float64), b, rcond=None)
    return SparseSolution.from_dense(a, Y, b, iterations=1)


def sparse_solve(Y, b, solver: str, stop: StoppingRule | None = None,
                 l1: L1Config | None = None, excluded_columns=()) -> SparseSolution:
    if solver == "mp":
        return solve_mp(Y, b, stop, excluded_columns)
    if solver == "omp":
        return solve_omp(Y, b, stop, excluded_columns)
    if solver == "l1":
        return solve_l1(Y, b, l1, excluded_columns)
    if solver == "lstsq":
        if len(excluded_columns):
            raise ValueError("the dense solve does not support excluded columns")
        return solve_dense(Y, b)
    raise ValueError(f"unknown solver {solver!r}; expected one of {INNER_SOLVERS}")


@dataclass(frozen=True)
class ShkConfig:
    eta1: float = 0.5
    epsilon: float = 1e-4
    max_outer_iterations: int = 200
    initial_margin: float = 1.0
    inner_solver: str = "omp"
    stop: StoppingRule | None = None
    l1: L1Config | None = None
    excluded_columns: tuple = ()

    def __post_init__(self):
        if not 0 < self.eta1 < 1:
            raise ValueError("eta1 must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be positive")
        if not self.initial_margin > 0:
            raise ValueError("initial_margin must be positive")
        if self.inner_solver not in INNER_SOLVERS:
            raise ValueError(f"unknown inner solver {self.inner_solver!r}")
        if self.inner_solver in ("mp", "omp") and self.stop is None:
            raise ValueError("greedy inner solvers need a StoppingRule")
        if self.inner_solver == "l1" and self.l1 is None:
            raise ValueError("the l1 inner solver needs an L1Config")

    def learn_rate(self, t: int) -> float:
        return self.eta1 / t


@dataclass
class ShkTrace:
    t: list = field(default_factory=list)
    margin_norm: list = field(default_factory=list)
    residual_norm: list = field(default_factory=list)
    eplus_norm: list = field(default_factory=list)
    support_size: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    converged: bool = False

    def record(self, t, b, e, eplus, support_size):
        self.t.append(t)
        self.margin_norm.append(float(np.linalg.norm(b)))
        self.residual_norm.append(float(np.linalg.norm(e)))
        self.eplus_norm.append(float(np.linalg.norm(eplus)))
        self.support_size.append(int(support_size))
        self.margins.append(np.array(b))

    def __len__(self):
        return len(self.t)

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "margin_norm", "residual_norm", "eplus_norm", "support_size"])
        for row in zip(self.t, self.margin_norm, self.residual_norm,
                       self.eplus_norm, self.support_size):
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), row[4]])


class ShkResult(NamedTuple):
    solution: SparseSolution
    margin: np.ndarray
    trace: ShkTrace


def run_shk(Y, cfg: ShkConfig, initial_margin=None) -> ShkResult:
    """Alternate sparse solves and margin updates until ``||b(t+1) - b(t)|| < epsilon``.

    Args:
        Y: augmented feature matrix with negative rows negated.
        cfg: procedure settings.
        initial_margin: optional starting margin vector (e.g. the sfisher
            preset); defaults to the constant ``cfg.initial_margin``.

    Returns:
        The last sparse solution, the margin it was fitted to, and the trace.
        ``trace.converged`` is False when ``max_outer_iterations`` ran out.
    """
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if initial_margin is None:
        b = np.full(n, cfg.initial_margin)
    else:
        b = margin_vector(initial_margin).copy()
        if b.shape != (n,):
            raise ValueError("initial margin must have one entry per row of Y")
    trace = ShkTrace()
    solution = None
    for t in range(1, cfg.max_outer_iterations + 1):
        try:
            solution = sparse_solve(Y, b, cfg.inner_solver, cfg.stop, cfg.l1,
                                    cfg.excluded_columns)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ShkError(f"inner {cfg.inner_solver} solve failed at outer iteration {t}: {exc}") from exc
        e = residual(Y, solution.dense(), b)
        eplus = positive_part(e)
        trace.record(t, b, e, eplus, len(solution))
        fitted = b
        b = margin_update(b, e, cfg.learn_rate(t))
        if float(np.linalg.norm(b - fitted)) < cfg.epsilon:
            trace.converged = True
            break
    return ShkResult(solution, fitted, trace)


def select_features(Y, labels, method: str, solver: str, stop: StoppingRule | None = None,
                    l1: L1Config | None = None, shk: ShkConfig | None = None,
                    excluded_columns=()):
    """Run one margin regime end to end.

    Returns ``(solution, margin, trace)``; ``trace`` is None for the fixed
    margin presets.
    """
    excluded = set(excluded_columns)
    if method == "ssmes":
        excluded.add(BIAS_COLUMN)
        b = make_margin("ssmes", labels)
    elif method == "sfisher":
        b = make_margin("sfisher", labels)
    elif method == "shk":
        cfg = shk or ShkConfig(inner_solver=solver, stop=stop, l1=l1)
        cfg = ShkConfig(
            eta1=cfg.eta1, epsilon=cfg.epsilon, max_outer_iterations=cfg.max_outer_iterations,
            initial_margin=cfg.initial_margin, inner_solver=solver,
            stop=stop or cfg.stop, l1=l1 or cfg.l1,
            excluded_columns=tuple(sorted(excluded | set(cfg.excluded_columns))),
        )
        return run_shk(Y, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    solution = sparse_solve(Y, b, solver, stop, l1, tuple(sorted(excluded)))
    return solution, b, None
