"""Comparison estimators on the modified Cholesky parameterization (T, D).

Sparse Cholesky alternates exact block minimization between the regression
coefficients of each row (a lasso at fixed conditional variance) and the
conditional variance itself (closed form).  Its row objective is not jointly
convex, and with n < p its infimum is -inf, attained only as D_ii -> 0; a
numerical floor makes the algorithm terminate, and a ``degenerate`` flag
records when the floor was hit so the collapse is visible rather than hidden.

Sparse DAG fixes D = I and reduces each row to a plain lasso, which is convex
and certificate-checkable but constrains the latent conditional variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .covmodel import CovarianceMatrix, ModifiedCholesky, PenaltySpec
from .errors import InvalidCovariance
from .rowsolver import SolverConfig

__all__ = [
    "CholRowDiagnostics",
    "SparseCholResult",
    "DagRowDiagnostics",
    "SparseDagResult",
    "fit_sparse_cholesky",
    "fit_sparse_dag",
    "sparse_cholesky_objective",
    "sparse_cholesky_row_objective",
    "sparse_dag_objective",
    "D_FLOOR",
]

# Lower clamp for conditional variances.  The Sparse Cholesky infimum with
# n < p sits at D_ii = 0, so termination requires a floor.
D_FLOOR = 1e-12


@dataclass(frozen=True)
class CholRowDiagnostics:
    iterations: int
    converged: bool
    clamped: bool
    d_trace: tuple[float, ...]
    objective_trace: tuple[float, ...]
    first_clamp_iteration: int | None


@dataclass(frozen=True)
class SparseCholResult:
    params: ModifiedCholesky
    objective: float
    per_row: tuple[CholRowDiagnostics, ...]
    degenerate: bool
    degenerate_rows: tuple[int, ...]
    converged: bool


@dataclass(frozen=True)
class DagRowDiagnostics:
    iterations: int
    converged: bool
    kkt_residual: float


@dataclass(frozen=True)
class SparseDagResult:
    t: np.ndarray
    objective: float
    per_row: tuple[DagRowDiagnostics, ...]
    converged: bool


def _check_cov(cov: CovarianceMatrix) -> np.ndarray:
    s = cov.values
    if np.any(np.diag(s) <= 0.0):
        raise InvalidCovariance("every diagonal entry of S must be positive")
    return s


def _quad(sub: np.ndarray, cross: np.ndarray, s_ii: float, phi: np.ndarray) -> float:
    """phi^t sub phi + 2 phi^t cross + s_ii; non-negative for PSD blocks."""
    return float(phi @ sub @ phi) + 2.0 * float(phi @ cross) + s_ii


def sparse_cholesky_row_objective(
    cov: CovarianceMatrix, row: int, phi: np.ndarray, d_ii: float, lam: float
) -> float:
    """Row objective (quad(phi) + S_ii)/D_ii + log D_ii + lam ||phi||_1."""
    s = cov.values
    phi = np.asarray(phi, dtype=np.float64)
    sub = s[:row, :row]
    cross = s[:row, row]
    q = _quad(sub, cross, float(s[row, row]), phi)
    return q / d_ii + math.log(d_ii) + lam * float(np.abs(phi).sum())


def sparse_cholesky_objective(
    td: ModifiedCholesky, cov: CovarianceMatrix, penalty: PenaltySpec
) -> float:
    """tr(T^t D^-1 T S) + log|D| + sum_i lambda_i ||phi_i||_1."""
    s = cov.values
    quad = float(np.einsum("ij,jk,ik,i->", td.t, s, td.t, 1.0 / td.d))
    pen = sum(
        penalty.for_row(i) * float(np.abs(td.t[i, :i]).sum()) for i in range(1, td.p)
    )
    return quad + float(np.sum(np.log(td.d))) + pen


def sparse_dag_objective(t: np.ndarray, cov: CovarianceMatrix, penalty: PenaltySpec) -> float:
    """tr(T^t T S) + sum_i lambda_i ||phi_i||_1 (the D = I restriction)."""
    t = np.asarray(t, dtype=np.float64)
    quad = float(np.einsum("ij,jk,ik->", t, cov.values, t))
    pen = sum(penalty.for_row(i) * float(np.abs(t[i, :i]).sum()) for i in range(1, t.shape[0]))
    return quad + pen


def fit_sparse_cholesky(
    cov: CovarianceMatrix,
    penalty: PenaltySpec,
    cfg: SolverConfig | None = None,
    d_floor: float = D_FLOOR,
) -> SparseCholResult:
    """Cyclic block minimization of the non-convex row objectives.

    Each outer iteration solves the phi-block lasso at the current D_ii
    (coordinate descent to tolerance epsilon/10, capped at r_max sweeps;
    multiplying the row objective through by D_ii makes the effective lasso
    penalty lam * D_ii), then sets D_ii to the quadratic value, clamped below
    at ``d_floor``.  Rows start from phi = 0, D_ii = 1.  D_11 = S_11 is exact.

    ``d_trace`` in the per-row diagnostics records the *unclamped* D-block
    values, so a collapse toward zero stays observable past the floor.
    """
    if cfg is None:
        cfg = SolverConfig()
    s = _check_cov(cov)
    p = cov.p
    penalty.check_dimension(p)
    eps_inner = cfg.epsilon / 10.0

    t = np.eye(p)
    d = np.empty(p)
    d[0] = s[0, 0]
    rows = [
        CholRowDiagnostics(
            iterations=0,
            converged=True,
            clamped=bool(s[0, 0] <= d_floor),
            d_trace=(float(s[0, 0]),),
            objective_trace=(1.0 + math.log(float(s[0, 0])),),
            first_clamp_iteration=None,
        )
    ]

    for i in range(1, p):
        sub = np.ascontiguousarray(s[:i, :i])
        cross = np.ascontiguousarray(s[:i, i])
        s_ii = float(s[i, i])
        lam = penalty.for_row(i)

        phi = np.zeros(i)
        d_cur = 1.0
        d_trace = [d_cur]
        obj_trace = [sparse_cholesky_row_objective(cov, i, phi, d_cur, lam)]
        converged = False
        clamped = False
        first_clamp: int | None = None
        it = 0
        for it in range(1, cfg.r_max + 1):
            phi_old = phi.copy()
            d_old = d_cur
            lam_eff = lam * d_cur
            _kernels.lasso_solve(sub, cross, phi, lam_eff, eps_inner, cfg.r_max)
            quad = _quad(sub, cross, s_ii, phi)
            d_trace.append(quad)
            clamped = quad <= d_floor
            if clamped and first_clamp is None:
                first_clamp = it
            d_cur = max(quad, d_floor)
            obj_trace.append(quad / d_cur + math.log(d_cur) + lam * float(np.abs(phi).sum()))
            delta = max(float(np.abs(phi - phi_old).max(initial=0.0)), abs(d_cur - d_old))
            if delta < cfg.epsilon:
                converged = True
                break
        t[i, :i] = phi
        d[i] = d_cur
        rows.append(
            CholRowDiagnostics(
                iterations=it,
                converged=converged,
                clamped=clamped,
                d_trace=tuple(d_trace),
                objective_trace=tuple(obj_trace),
                first_clamp_iteration=first_clamp,
            )
        )

    params = ModifiedCholesky(t=t, d=d)
    degenerate_rows = tuple(i for i, r in enumerate(rows) if r.clamped)
    return SparseCholResult(
        params=params,
        objective=sparse_cholesky_objective(params, cov, penalty),
        per_row=tuple(rows),
        degenerate=bool(degenerate_rows),
        degenerate_rows=degenerate_rows,
        converged=all(r.converged for r in rows),
    )


def fit_sparse_dag(
    cov: CovarianceMatrix,
    penalty: PenaltySpec,
    cfg: SolverConfig | None = None,
) -> SparseDagResult:
    """Row-wise lasso with D fixed at the identity.

    Row i minimizes phi^t S_{i-1} phi + 2 phi^t S_{.i} + lam ||phi||_1 by
    cyclic coordinate descent; a subgradient certificate is evaluated per row.
    """
    if cfg is None:
        cfg = SolverConfig()
    s = _check_cov(cov)
    p = cov.p
    penalty.check_dimension(p)

    t = np.eye(p)
    rows = [DagRowDiagnostics(iterations=0, converged=True, kkt_residual=0.0)]
    for i in range(1, p):
        sub = np.ascontiguousarray(s[:i, :i])
        cross = np.ascontiguousarray(s[:i, i])
        lam = penalty.for_row(i)
        phi = np.zeros(i)
        sweeps, converged = _kernels.lasso_solve(sub, cross, phi, lam, cfg.epsilon, cfg.r_max)
        g = 2.0 * (sub @ phi + cross)
        active = phi != 0.0
        viol = np.where(
            active,
            np.abs(g + lam * np.sign(phi)),
            np.maximum(np.abs(g) - lam, 0.0),
        )
        t[i, :i] = phi
        rows.append(
            DagRowDiagnostics(
                iterations=int(sweeps),
                converged=bool(converged),
                kkt_residual=float(viol.max(initial=0.0)),
            )
        )

    return SparseDagResult(
        t=t,
        objective=sparse_dag_objective(t, cov, penalty),
        per_row=tuple(rows),
        converged=all(r.converged for r in rows),
    )
