"""Penalty selection: BIC, K-fold cross-validation, and normal-quantile rules.

The BIC form used here is n tr(S Omega) - n log|Omega| + log(n) * E with E
the number of nonzero entries of the estimated factor.  The log(n) * E
reading of the complexity term is the standard BIC convention; E counts the
diagonal by default because diagonal entries are always nonzero, and a flag
switches to strict-lower-only counting for sensitivity analysis.

Cross-validation folds come from a seeded PCG64 generator
(numpy.random.default_rng) through a single permutation split into K
near-equal parts, so fold assignment is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .baselines import fit_sparse_cholesky, fit_sparse_dag
from .covmodel import (
    CholeskyFactor,
    CovarianceMatrix,
    DataMatrix,
    PenaltySpec,
    from_modified_cholesky,
    sample_covariance,
)
from .errors import CscsError, DomainError, FoldDegenerate, InvalidProblem
from .fit import fit_cscs, fully_sparsifying_penalty, penalty_path
from .rowsolver import SolverConfig

__all__ = [
    "TuningReport",
    "bic_score",
    "cv_score",
    "quantile_penalty",
    "default_grid",
    "tune_bic",
    "tune_cv",
    "METHODS",
]

METHODS = ("cscs", "sparse-cholesky", "sparse-dag")

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class TuningReport:
    """Grid, per-grid-point scores, and the selected penalty."""

    criterion: str
    grid: tuple[float, ...]
    scores: tuple[float, ...]
    selected: float | PenaltySpec
    per_fold: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if len(self.grid) != len(self.scores):
            raise InvalidProblem("grid and scores must have the same length")
        if self.scores and isinstance(self.selected, float):
            if not math.isclose(min(self.scores), self.scores[self.grid.index(self.selected)]):
                raise InvalidProblem("selected penalty does not attain the minimum score")

    def to_dict(self) -> dict:
        if isinstance(self.selected, PenaltySpec):
            selected = {"per_row": [float(v) for v in self.selected.per_row]}
        else:
            selected = float(self.selected)
        out = {
            "criterion": self.criterion,
            "grid": [float(g) for g in self.grid],
            "scores": [float(s) for s in self.scores],
            "selected": selected,
        }
        if self.per_fold is not None:
            out["per_fold"] = [[float(v) for v in fold] for fold in self.per_fold]
        return out


def bic_score(cov: CovarianceMatrix, fit, n: int, count_diagonal: bool = True) -> float:
    """n tr(S Omega) - n log|Omega| + log(n) * E for Omega = L^t L.

    ``fit`` may be a FitResult or a bare CholeskyFactor; log|Omega| is
    evaluated as 2 sum(log L_ii), exact for the factorization.
    """
    if n < 1:
        raise DomainError("sample size must be positive")
    factor: CholeskyFactor = getattr(fit, "factor", fit)
    ld = factor.to_dense()
    trace = float(np.einsum("ij,jk,ik->", ld, cov.values, ld))
    logdet = 2.0 * float(np.sum(np.log(factor.diagonal())))
    e = factor.nonzero_count(include_diagonal=count_diagonal)
    return n * trace - n * logdet + math.log(n) * e


def _estimate_factor(
    method: str,
    cov: CovarianceMatrix,
    penalty: PenaltySpec,
    cfg: SolverConfig | None,
) -> CholeskyFactor:
    """Common estimator interface: any method reduced to a triangular factor.

    Sparse DAG's implied D is the identity, so its factor is T itself.
    """
    if method == "cscs":
        return fit_cscs(cov, penalty, cfg).factor
    if method == "sparse-cholesky":
        return from_modified_cholesky(fit_sparse_cholesky(cov, penalty, cfg).params)
    if method == "sparse-dag":
        return CholeskyFactor.from_dense(fit_sparse_dag(cov, penalty, cfg).t)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")


def _fold_indices(n: int, k_folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), k_folds)


def cv_score(
    data: DataMatrix,
    method: str,
    penalty: PenaltySpec,
    k_folds: int,
    seed: int,
    cfg: SolverConfig | None = None,
    center: bool = False,
    scale: bool = False,
    return_folds: bool = False,
):
    """Predictive Gaussian K-fold score for one penalty level.

    Each fold contributes d_v log|Sigma_hat| + sum_{i in fold} y_i^t Omega_hat
    y_i, with Omega_hat fit on the complementary training rows; the score is
    the mean over folds.  log|Sigma_hat| = -2 sum(log L_ii) and the quadratic
    form is ||L y||^2, so the precision matrix is never formed.
    """
    if k_folds < 2:
        raise DomainError("cross-validation needs at least 2 folds")
    x = data.values
    n = data.n
    if k_folds > n:
        raise DomainError("more folds than samples")
    folds = _fold_indices(n, k_folds, seed)
    per_fold = []
    for held in folds:
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        train = x[mask]
        try:
            cov_train = sample_covariance(DataMatrix(train), center=center, scale=scale)
        except CscsError as exc:
            raise FoldDegenerate(f"training fold produced an invalid covariance: {exc}") from exc
        factor = _estimate_factor(method, cov_train, penalty, cfg)
        ld = factor.to_dense()
        logdet_sigma = -2.0 * float(np.sum(np.log(factor.diagonal())))
        resid = x[held] @ ld.T
        quad = float(np.sum(resid * resid))
        per_fold.append(held.size * logdet_sigma + quad)
    score = float(np.mean(per_fold))
    if return_folds:
        return score, tuple(float(v) for v in per_fold)
    return score


def quantile_penalty(n: int, p: int, alpha: float) -> PenaltySpec:
    """Per-row penalties 2 n^{-1/2} z(1 - alpha / (2 p (i-1))) for rows i >= 2.

    z(1-q) is the (1-q) standard-normal quantile, evaluated through the
    double-precision rational approximation in statistics.NormalDist (about
    1e-15 accurate); the symmetric form -z(q) avoids cancellation in 1 - q
    for small tail levels.  Row 1 has no penalized entries, so its value is 0.
    """
    if n < 1:
        raise DomainError("sample size must be positive")
    if p < 2:
        raise DomainError("quantile penalties need p >= 2")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    lams = np.zeros(p)
    scale = 2.0 / math.sqrt(n)
    for i in range(2, p + 1):
        q = alpha / (2.0 * p * (i - 1))
        if q >= 1.0:
            raise DomainError(f"tail level {q} >= 1 for row {i}")
        lams[i - 1] = scale * (-_STD_NORMAL.inv_cdf(q))
    return PenaltySpec.rowwise(lams)


def default_grid(cov: CovarianceMatrix, count: int, cfg: SolverConfig | None = None) -> np.ndarray:
    """Ascending log-spaced grid from 0.01 * lam_top to lam_top, where lam_top
    is the operational fully-sparsifying penalty found by doubling search."""
    if count < 2:
        raise DomainError("grid needs at least 2 points")
    top = fully_sparsifying_penalty(cov, cfg)
    return np.geomspace(0.01 * top, top, num=count)


def tune_bic(
    cov: CovarianceMatrix,
    n: int,
    grid,
    method: str = "cscs",
    cfg: SolverConfig | None = None,
    count_diagonal: bool = True,
) -> TuningReport:
    """Evaluate BIC over a penalty grid and select the argmin."""
    lams = tuple(float(g) for g in grid)
    if method == "cscs":
        fits = penalty_path(cov, lams, cfg)
        scores = tuple(bic_score(cov, f, n, count_diagonal) for f in fits)
    else:
        scores = tuple(
            bic_score(cov, _estimate_factor(method, cov, PenaltySpec.constant(l), cfg), n, count_diagonal)
            for l in lams
        )
    best = int(np.argmin(scores))
    return TuningReport(criterion="bic", grid=lams, scores=scores, selected=lams[best])


def tune_cv(
    data: DataMatrix,
    method: str,
    grid,
    k_folds: int,
    seed: int,
    cfg: SolverConfig | None = None,
    center: bool = False,
    scale: bool = False,
) -> TuningReport:
    """Evaluate the CV score over a penalty grid and select the argmin."""
    lams = tuple(float(g) for g in grid)
    scores = []
    folds = []
    for lam in lams:
        score, fold_scores = cv_score(
            data,
            method,
            PenaltySpec.constant(lam),
            k_folds,
            seed,
            cfg,
            center=center,
            scale=scale,
            return_folds=True,
        )
        scores.append(score)
        folds.append(fold_scores)
    best = int(np.argmin(scores))
    return TuningReport(
        criterion="cv",
        grid=lams,
        scores=tuple(scores),
        selected=lams[best],
        per_fold=tuple(folds),
    )
