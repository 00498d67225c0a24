"""Cyclic coordinatewise minimizer for the penalized row objective.

The generic problem is

    h(x) = x^t A x - 2 log x_k + lam * sum_{j<k} |x_j|

over x in R^{k-1} x R_+, with A symmetric positive semidefinite and positive
diagonal.  Both closed-form coordinate updates are single-valued: the
off-diagonal coordinates soft-threshold a cross term, and the diagonal
coordinate takes the positive root of a quadratic.  Because the objective is
convex and coordinatewise minimization descends exactly, the iterates reach a
global minimum; a subgradient stationarity check certifies the result.

Two computational paths produce the same iterates: a dense path with O(k)
work per coordinate, and a residual-caching path with O(n) work per
coordinate when A = B B^t for a k x n factor B with n < k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidProblem, StaleResidual

__all__ = [
    "RowProblem",
    "RowSolution",
    "SolverConfig",
    "soft_threshold",
    "update_offdiag",
    "update_diag",
    "minimize_row",
    "kkt_check",
    "low_rank_gradient_term",
    "row_objective",
]


def _contiguous(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


@dataclass(frozen=True)
class RowProblem:
    """One row's minimization instance: (A, lambda) and an optional factor.

    ``low_rank_factor`` is a k x n matrix B with A = B B^t; the constructor
    verifies the diagonal of B B^t against A (full equality is an invariant
    exercised in the test suite; rebuilding the whole product on every
    construction would dominate the solver itself).
    """

    a: np.ndarray
    lam: float
    low_rank_factor: np.ndarray | None = None

    def __post_init__(self):
        a = _contiguous(self.a)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidProblem(f"A must be square, got shape {a.shape}")
        scale = float(np.abs(a).max())
        if np.abs(a - a.T).max() > 1e-12 * max(scale, 1.0):
            raise InvalidProblem("A is not symmetric to 1e-12 relative tolerance")
        if np.any(np.diag(a) <= 0.0):
            raise InvalidProblem("A must have strictly positive diagonal entries")
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise InvalidProblem("lambda must be finite and non-negative")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "lam", float(self.lam))
        if self.low_rank_factor is not None:
            b = _contiguous(self.low_rank_factor)
            if b.ndim != 2 or b.shape[0] != a.shape[0]:
                raise InvalidProblem(f"factor shape {b.shape} incompatible with k={a.shape[0]}")
            if np.abs(np.einsum("ij,ij->i", b, b) - np.diag(a)).max() > 1e-10:
                raise InvalidProblem("low-rank factor inconsistent with diag(A)")
            b.flags.writeable = False
            object.__setattr__(self, "low_rank_factor", b)

    @property
    def k(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule for the cyclic sweeps.

    Convergence is declared when the max-norm change of the iterate over one
    full sweep drops below ``epsilon``; the objective is recorded but never
    used for stopping.
    """

    epsilon: float = 1e-8
    r_max: int = 1000
    initial: np.ndarray | None = None

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise InvalidProblem("epsilon must be positive")
        if self.r_max < 1:
            raise InvalidProblem("r_max must be at least 1")
        if self.initial is not None:
            init = np.array(self.initial, dtype=np.float64)
            if init.ndim != 1 or init[-1] <= 0.0 or not np.all(np.isfinite(init)):
                raise InvalidProblem("initial iterate must be finite with a positive last entry")
            init.flags.writeable = False
            object.__setattr__(self, "initial", init)


@dataclass(frozen=True)
class RowSolution:
    x: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    kkt_residual: float


def soft_threshold(x: float, lam: float) -> float:
    """sign(x) * max(|x| - lam, 0)."""
    if lam < 0.0:
        raise InvalidProblem("threshold must be non-negative")
    mag = abs(x) - lam
    return math.copysign(mag, x) if mag > 0.0 else 0.0


def row_objective(a: np.ndarray, x: np.ndarray, lam: float) -> float:
    """Value of h at x; x[-1] must be positive."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return float(x @ a @ x) - 2.0 * math.log(x[-1]) + lam * float(np.abs(x[:-1]).sum())


def update_offdiag(prob: RowProblem, x: np.ndarray, j: int) -> float:
    """Exact minimizer over off-diagonal coordinate j (0-based, j < k-1)."""
    if not 0 <= j < prob.k - 1:
        raise InvalidProblem(f"off-diagonal index {j} out of range for k={prob.k}")
    cross = float(prob.a[:, j] @ x) - prob.a[j, j] * float(x[j])
    return soft_threshold(-2.0 * cross, prob.lam) / (2.0 * prob.a[j, j])


def update_diag(prob: RowProblem, x: np.ndarray) -> float:
    """Exact minimizer over the diagonal coordinate: the positive root of
    -2/x_k + 2 A_kk x_k + 2 c = 0 with c the off-diagonal cross term."""
    kk = prob.k - 1
    c = float(prob.a[:, kk] @ x) - prob.a[kk, kk] * float(x[kk])
    a_kk = prob.a[kk, kk]
    return (-c + math.sqrt(c * c + 4.0 * a_kk)) / (2.0 * a_kk)


def default_initial(prob: RowProblem) -> np.ndarray:
    """Zeros off the diagonal, 1/sqrt(A_kk) on it (the full-sparsity limit)."""
    x = np.zeros(prob.k)
    x[-1] = 1.0 / math.sqrt(prob.a[-1, -1])
    return x


def minimize_row(prob: RowProblem, cfg: SolverConfig, path: str = "auto") -> RowSolution:
    """Run cyclic Gauss-Seidel sweeps until the iterate change is below epsilon.

    Parameters
    ----------
    path : {"auto", "dense", "lowrank"}
        "auto" picks the residual-caching path when a factor with n < k is
        available, matching the min(O(nk), O(k^2)) per-sweep cost; the
        explicit values force a path (used for equivalence testing).

    Returns
    -------
    RowSolution
        Non-convergence within ``r_max`` sweeps is reported through the
        ``converged`` flag, never as an exception.
    """
    if path not in ("auto", "dense", "lowrank"):
        raise InvalidProblem(f"unknown path {path!r}")
    k = prob.k
    if cfg.initial is not None:
        if cfg.initial.shape[0] != k:
            raise InvalidProblem(f"initial iterate has length {cfg.initial.shape[0]}, expected {k}")
        x = np.array(cfg.initial, dtype=np.float64)
    else:
        x = default_initial(prob)

    b = prob.low_rank_factor
    if path == "lowrank" and b is None:
        raise InvalidProblem("low-rank path requested but no factor present")
    use_lowrank = path == "lowrank" or (path == "auto" and b is not None and b.shape[1] < k)

    trace = np.empty(cfg.r_max + 1)
    if use_lowrank:
        a_diag = np.ascontiguousarray(np.diag(prob.a))
        r = _contiguous(b.T @ x)
        sweeps, converged = _kernels.lowrank_solve(
            b, r, x, a_diag, prob.lam, cfg.epsilon, cfg.r_max, trace
        )
    else:
        sweeps, converged = _kernels.dense_solve(
            prob.a, x, prob.lam, cfg.epsilon, cfg.r_max, trace
        )

    x.flags.writeable = False
    return RowSolution(
        x=x,
        iterations=int(sweeps),
        converged=bool(converged),
        objective_trace=trace[: sweeps + 1].copy(),
        kkt_residual=kkt_check(prob, x),
    )


def kkt_check(prob: RowProblem, x: np.ndarray) -> float:
    """Max violation of the subgradient stationarity conditions at x.

    With d = 2 A x, optimality requires d_j = -lam * sign(x_j) on active
    off-diagonal coordinates, |d_j| <= lam on inactive ones, and
    d_k - 2/x_k = 0 on the diagonal.  Zero return certifies a global
    minimizer by convexity.
    """
    x = np.asarray(x, dtype=np.float64)
    if x[-1] <= 0.0:
        raise InvalidProblem("diagonal coordinate must be positive")
    d = 2.0 * (prob.a @ x)
    lam = prob.lam
    worst = abs(d[-1] - 2.0 / x[-1])
    for j in range(prob.k - 1):
        if x[j] != 0.0:
            viol = abs(d[j] + lam * math.copysign(1.0, x[j]))
        else:
            viol = max(abs(d[j]) - lam, 0.0)
        if viol > worst:
            worst = viol
    return float(worst)


def low_rank_gradient_term(
    b: np.ndarray,
    r: np.ndarray,
    j: int,
    x_j: float,
    x_full: np.ndarray | None = None,
) -> float:
    """Cross term sum_{l != j} A_lj x_l from the cached residual r = B^t x.

    Costs O(n) against the factor row: B_j . r - A_jj x_j with A_jj = ||B_j||^2.
    Passing ``x_full`` enables the debug staleness assertion on r.
    """
    b = np.asarray(b, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if x_full is not None:
        if np.abs(b.T @ np.asarray(x_full, dtype=np.float64) - r).max() > 1e-8:
            raise StaleResidual("cached residual does not match B^t x")
    row = b[j]
    return float(row @ r) - float(row @ row) * float(x_j)
