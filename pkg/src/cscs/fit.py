"""Full-matrix estimator: p independent row problems assembled into a factor.

The objective over the whole lower-triangular factor separates into one
problem per row (row i sees only the leading i x i block of S), so the rows
can be solved in any order or in parallel with identical results.  Row 1 is a
one-dimensional penalty-free problem with the closed form L_11 = 1/sqrt(S_11).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .covmodel import CholeskyFactor, CovarianceMatrix, PenaltySpec, cscs_objective
from .errors import InvalidCovariance, InvalidProblem
from .rowsolver import RowProblem, RowSolution, SolverConfig, minimize_row

__all__ = [
    "RowDiagnostics",
    "FitResult",
    "fit_cscs",
    "penalty_path",
    "fully_sparsifying_penalty",
]


@dataclass(frozen=True)
class RowDiagnostics:
    iterations: int
    converged: bool
    kkt_residual: float


@dataclass(frozen=True)
class FitResult:
    factor: CholeskyFactor
    objective: float
    per_row: tuple[RowDiagnostics, ...]
    penalty: PenaltySpec
    converged: bool
    wall_time_seconds: float


def _trusted_row_problem(a: np.ndarray, lam: float, b: np.ndarray | None) -> RowProblem:
    """Build a RowProblem from blocks of an already-validated covariance,
    skipping the per-row re-validation of the same data."""
    prob = object.__new__(RowProblem)
    object.__setattr__(prob, "a", a)
    object.__setattr__(prob, "lam", lam)
    object.__setattr__(prob, "low_rank_factor", b)
    return prob


def _solve_row(
    cov: CovarianceMatrix,
    i: int,
    lam: float,
    cfg: SolverConfig,
    initial_row: np.ndarray | None,
) -> RowSolution:
    a = np.ascontiguousarray(cov.values[: i + 1, : i + 1])
    b = cov.low_rank_factor
    b_i = np.ascontiguousarray(b[: i + 1]) if b is not None else None
    prob = _trusted_row_problem(a, lam, b_i)
    row_cfg = cfg
    if initial_row is not None:
        row_cfg = SolverConfig(epsilon=cfg.epsilon, r_max=cfg.r_max, initial=initial_row)
    return minimize_row(prob, row_cfg)


def fit_cscs(
    cov: CovarianceMatrix,
    penalty: PenaltySpec,
    cfg: SolverConfig | None = None,
    parallel: bool = False,
    initial: CholeskyFactor | None = None,
    max_workers: int | None = None,
) -> FitResult:
    """Estimate the sparse Cholesky factor of the precision matrix.

    Parameters
    ----------
    cov : CovarianceMatrix
        Requires all diagonal entries strictly positive.
    penalty : PenaltySpec
        Scalar or per-row L1 level on the strictly-lower entries.
    cfg : SolverConfig, optional
        Row-solver stopping rule; ``cfg.initial`` is ignored here (use the
        ``initial`` factor for warm starts).
    parallel : bool
        Solve rows with a thread pool.  The rows share no mutable state and
        the kernels avoid fastmath, so serial and parallel runs produce
        bit-identical iterate sequences.
    initial : CholeskyFactor, optional
        Warm-start factor, row by row.

    Raises
    ------
    InvalidCovariance
        If some S_ii <= 0 (the CovarianceMatrix type already enforces this).
        Per-row non-convergence is reported via the ``converged`` flag.
    """
    start = time.perf_counter()
    if cfg is None:
        cfg = SolverConfig()
    p = cov.p
    penalty.check_dimension(p)
    if np.any(np.diag(cov.values) <= 0.0):
        raise InvalidCovariance("every diagonal entry of S must be positive")
    if initial is not None and initial.p != p:
        raise InvalidProblem(f"warm start has p={initial.p}, expected {p}")

    def row_initial(i: int) -> np.ndarray | None:
        return np.array(initial.rows[i]) if initial is not None else None

    # Row 0 is one-dimensional and penalty-free: L_00 = 1/sqrt(S_00) exactly.
    s00 = float(cov.values[0, 0])
    x0 = np.array([1.0 / math.sqrt(s00)])
    kkt0 = abs(2.0 * s00 * x0[0] - 2.0 / x0[0])
    first = RowSolution(
        x=x0,
        iterations=0,
        converged=True,
        objective_trace=np.array([s00 * x0[0] ** 2 - 2.0 * math.log(x0[0])]),
        kkt_residual=kkt0,
    )

    tasks = range(1, p)
    if parallel and p > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rest = list(
                pool.map(lambda i: _solve_row(cov, i, penalty.for_row(i), cfg, row_initial(i)), tasks)
            )
    else:
        rest = [_solve_row(cov, i, penalty.for_row(i), cfg, row_initial(i)) for i in tasks]

    solutions = [first] + rest
    factor = CholeskyFactor(tuple(sol.x for sol in solutions))
    diagnostics = tuple(
        RowDiagnostics(sol.iterations, sol.converged, sol.kkt_residual) for sol in solutions
    )
    objective = cscs_objective(factor, cov, penalty)
    return FitResult(
        factor=factor,
        objective=objective,
        per_row=diagnostics,
        penalty=penalty,
        converged=all(sol.converged for sol in solutions),
        wall_time_seconds=time.perf_counter() - start,
    )


def penalty_path(
    cov: CovarianceMatrix,
    grid,
    cfg: SolverConfig | None = None,
    parallel: bool = False,
) -> list[FitResult]:
    """Fit every penalty in ``grid``, warm-starting along descending lambda.

    Heavily penalized solutions are cheap and make good starts for the next
    (denser) fit; because each fit solves a convex problem, warm starts change
    speed but not the optimum.  Results come back in the caller's grid order.
    """
    lams = [float(l) for l in grid]
    if not lams:
        raise InvalidProblem("penalty grid must be non-empty")
    if any(l < 0.0 for l in lams):
        raise InvalidProblem("penalties must be non-negative")
    order = sorted(range(len(lams)), key=lambda i: lams[i], reverse=True)
    results: list[FitResult | None] = [None] * len(lams)
    warm: CholeskyFactor | None = None
    for idx in order:
        fit = fit_cscs(cov, PenaltySpec.constant(lams[idx]), cfg, parallel=parallel, initial=warm)
        results[idx] = fit
        warm = fit.factor
    return results  # type: ignore[return-value]


def fully_sparsifying_penalty(
    cov: CovarianceMatrix,
    cfg: SolverConfig | None = None,
    floor: float = 1e-6,
    ceiling: float = 1e12,
) -> float:
    """Smallest power-of-two multiple of 1 that zeroes the whole strict lower
    triangle, found by doubling (and halving) search.

    The log-barrier couples the diagonal to the off-diagonal entries, so no
    proven closed form is used; the value is operational and deterministic
    given S.
    """
    if cfg is None:
        cfg = SolverConfig()

    def all_zero(lam: float) -> bool:
        fit = fit_cscs(cov, PenaltySpec.constant(lam), cfg)
        return fit.factor.nonzero_count(include_diagonal=False) == 0

    lam = 1.0
    if all_zero(lam):
        while lam > floor and all_zero(lam / 2.0):
            lam /= 2.0
        return lam
    while not all_zero(lam):
        lam *= 2.0
        if lam > ceiling:
            raise InvalidProblem("no sparsifying penalty found below the search ceiling")
    return lam
