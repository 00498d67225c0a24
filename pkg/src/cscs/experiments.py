"""Seeded desk-scale experiment workflows behind the CLI and the scripts.

Each workflow draws one ground-truth model per (p, seed), regenerates data
per replication from derived seeds, and returns a JSON-ready dict.  Penalty
grids are computed once from the first replication's covariance so that every
replication and method sees comparable penalty values.
"""

from __future__ import annotations

import numpy as np

from .baselines import fit_sparse_cholesky, fit_sparse_dag
from .covmodel import CovarianceMatrix, PenaltySpec, precision_from_factor, sample_covariance
from .errors import DomainError
from .fit import fit_cscs, penalty_path
from .rowsolver import SolverConfig
from .simeval import (
    RocPoint,
    auc_windowed,
    estimated_edges,
    frobenius_error,
    generate_model,
    paired_sign_test_pvalue,
    roc_curve,
    sample_gaussian,
    selection_rates,
)
from .tuning import default_grid

__all__ = [
    "degeneracy_experiment",
    "roc_auc_experiment",
    "frobenius_path_experiment",
    "EXPERIMENTS",
    "run_experiment",
]

# Threshold used to report that an unclamped conditional variance collapsed.
DEGENERACY_FLOOR = 1e-10


def _min_d_trace(per_row) -> list[float]:
    """Pointwise minimum over the rows' unclamped D traces, padded with each
    trace's final value so rows that stop early stay comparable."""
    traces = [list(r.d_trace) for r in per_row]
    length = max(len(t) for t in traces)
    padded = np.array([t + [t[-1]] * (length - len(t)) for t in traces])
    return padded.min(axis=0).tolist()


def degeneracy_experiment(
    p: int = 8,
    n: int = 7,
    lam: float = 0.1,
    seeds: int = 20,
    base_seed: int = 0,
    zero_fraction: float = 0.6,
    coef_range: tuple[float, float] = (0.3, 0.7),
    d_range: tuple[float, float] = (2.0, 5.0),
    cfg: SolverConfig | None = None,
) -> dict:
    """Replicate the n < p conditional-variance collapse of Sparse Cholesky.

    For each seed: draw a sparse model, sample n rows, run Sparse Cholesky
    and record the per-iteration minimum of the unclamped D values; run the
    convex estimator on the same data and record its smallest diagonal.
    """
    if cfg is None:
        cfg = SolverConfig()
    runs = []
    for s in range(seeds):
        model = generate_model(
            p, zero_fraction, coef_range, d_range, seed=base_seed + 2 * s
        )
        data = sample_gaussian(model, n, seed=base_seed + 2 * s + 1)
        cov = sample_covariance(data)
        pen = PenaltySpec.constant(lam)
        chol = fit_sparse_cholesky(cov, pen, cfg)
        cscs = fit_cscs(cov, pen, cfg)
        trace = _min_d_trace(chol.per_row)
        min_unclamped = min(min(r.d_trace) for r in chol.per_row)
        runs.append(
            {
                "seed": s,
                "min_d_trace": trace,
                "min_unclamped_d": float(min_unclamped),
                "floor_hit": bool(min_unclamped <= DEGENERACY_FLOOR),
                "degenerate_rows": list(chol.degenerate_rows),
                "cscs_min_diag": float(cscs.factor.diagonal().min()),
            }
        )
    return {
        "experiment": "degeneracy",
        "p": p,
        "n": n,
        "lambda": lam,
        "seeds": seeds,
        "base_seed": base_seed,
        "floor": DEGENERACY_FLOOR,
        "runs": runs,
        "num_floor_hits": sum(r["floor_hit"] for r in runs),
        "any_floor_hit": any(r["floor_hit"] for r in runs),
        "cscs_min_diag_overall": min(r["cscs_min_diag"] for r in runs),
    }


def _dag_sparsifying(s: np.ndarray) -> float:
    """Exact smallest penalty zeroing every Sparse DAG row: the lasso
    stationarity bound 2 max |S_ij|, i != j."""
    off = np.abs(s - np.diag(np.diag(s)))
    return max(2.0 * float(off.max()), 1e-8)


def _chol_sparsifying(cov: CovarianceMatrix, cfg: SolverConfig) -> float:
    """Operational doubling search for a penalty at which Sparse Cholesky
    returns an identity T."""
    lam = 1.0

    def all_zero(level: float) -> bool:
        res = fit_sparse_cholesky(cov, PenaltySpec.constant(level), cfg)
        return not np.any(np.tril(res.params.t, k=-1))

    if all_zero(lam):
        while lam > 1e-6 and all_zero(lam / 2.0):
            lam /= 2.0
        return lam
    while not all_zero(lam):
        lam *= 2.0
        if lam > 1e12:
            raise DomainError("no sparsifying penalty found for Sparse Cholesky")
    return lam


def roc_auc_experiment(
    p: int = 100,
    n: int = 25,
    reps: int = 20,
    zero_fraction: float = 0.98,
    grid_count: int = 25,
    seed: int = 0,
    fpr_window: tuple[float, float] = (0.01, 0.15),
    center: bool = True,
    scale: bool = True,
    cfg: SolverConfig | None = None,
) -> dict:
    """Edge-recovery comparison: windowed AUC per method over replications.

    One model per (p, seed); each replication redraws the data.  Diagonal
    rescaling of the data leaves the true sparsity pattern unchanged, so
    centering and scaling are safe for selection metrics.
    """
    if cfg is None:
        cfg = SolverConfig()
    model = generate_model(p, zero_fraction, seed=seed)
    first = sample_covariance(
        sample_gaussian(model, n, seed=seed + 1), center=center, scale=scale
    )
    grids = {
        "cscs": np.asarray(default_grid(first, grid_count, cfg)),
        "sparse-dag": np.geomspace(
            0.01 * _dag_sparsifying(first.values), _dag_sparsifying(first.values), grid_count
        ),
        "sparse-cholesky": np.geomspace(
            0.01 * _chol_sparsifying(first, cfg), _chol_sparsifying(first, cfg), grid_count
        ),
    }

    lo, hi = fpr_window
    aucs = {m: [] for m in grids}
    for r in range(reps):
        data = sample_gaussian(model, n, seed=seed + 1 + r)
        cov = sample_covariance(data, center=center, scale=scale)
        patterns = {}
        patterns["cscs"] = [
            (lam, estimated_edges(fit.factor))
            for lam, fit in zip(grids["cscs"], penalty_path(cov, grids["cscs"], cfg))
        ]
        patterns["sparse-dag"] = [
            (lam, estimated_edges(fit_sparse_dag(cov, PenaltySpec.constant(lam), cfg).t))
            for lam in grids["sparse-dag"]
        ]
        patterns["sparse-cholesky"] = [
            (lam, estimated_edges(fit_sparse_cholesky(cov, PenaltySpec.constant(lam), cfg).params.t))
            for lam in grids["sparse-cholesky"]
        ]
        for method, pats in patterns.items():
            points = []
            for lam, edges in pats:
                tpr, fpr = selection_rates(edges, model.edge_set, p)
                points.append(RocPoint(fpr=fpr, tpr=tpr, lam=float(lam)))
            aucs[method].append(auc_windowed(roc_curve(points), lo, hi))

    cscs_auc = np.array(aucs["cscs"])
    chol_auc = np.array(aucs["sparse-cholesky"])
    dag_auc = np.array(aucs["sparse-dag"])
    wins = int(np.sum(cscs_auc > chol_auc))
    losses = int(np.sum(cscs_auc < chol_auc))
    effective = wins + losses
    pvalue = paired_sign_test_pvalue(wins, effective) if effective else 1.0

    return {
        "experiment": "roc-auc",
        "p": p,
        "n": n,
        "reps": reps,
        "zero_fraction": zero_fraction,
        "seed": seed,
        "fpr_window": [lo, hi],
        "grid_count": grid_count,
        "auc": {
            method: {
                "values": [float(v) for v in vals],
                "mean": float(np.mean(vals)),
                "std": float(np.std(vals)),
            }
            for method, vals in aucs.items()
        },
        "cscs_vs_sparse_cholesky": {
            "wins": wins,
            "losses": losses,
            "sign_test_pvalue": float(pvalue),
        },
        "cscs_minus_sparse_dag_mean": float(np.mean(cscs_auc) - np.mean(dag_auc)),
    }


def frobenius_path_experiment(
    p: int = 50,
    n: int = 25,
    reps: int = 20,
    zero_fraction: float = 0.98,
    grid_count: int = 20,
    seed: int = 0,
    center: bool = True,
    scale: bool = False,
    cfg: SolverConfig | None = None,
) -> dict:
    """Estimation comparison: mean Frobenius error to the true precision along
    a shared penalty grid, for the convex estimator and Sparse DAG."""
    if cfg is None:
        cfg = SolverConfig()
    model = generate_model(p, zero_fraction, seed=seed)
    first = sample_covariance(
        sample_gaussian(model, n, seed=seed + 1), center=center, scale=scale
    )
    grid = np.asarray(default_grid(first, grid_count, cfg))

    errors = {"cscs": np.zeros((reps, grid.size)), "sparse-dag": np.zeros((reps, grid.size))}
    for r in range(reps):
        data = sample_gaussian(model, n, seed=seed + 1 + r)
        cov = sample_covariance(data, center=center, scale=scale)
        for gi, fit in enumerate(penalty_path(cov, grid, cfg)):
            omega = precision_from_factor(fit.factor)
            errors["cscs"][r, gi] = frobenius_error(model.precision, omega)
        for gi, lam in enumerate(grid):
            t = fit_sparse_dag(cov, PenaltySpec.constant(lam), cfg).t
            errors["sparse-dag"][r, gi] = frobenius_error(model.precision, t.T @ t)

    mean_err = {m: errors[m].mean(axis=0) for m in errors}
    return {
        "experiment": "frobenius-path",
        "p": p,
        "n": n,
        "reps": reps,
        "zero_fraction": zero_fraction,
        "seed": seed,
        "grid": [float(g) for g in grid],
        "mean_error": {m: [float(v) for v in vals] for m, vals in mean_err.items()},
        "min_mean_error": {m: float(vals.min()) for m, vals in mean_err.items()},
    }


EXPERIMENTS = {
    "degeneracy": degeneracy_experiment,
    "roc-auc": roc_auc_experiment,
    "frobenius-path": frobenius_path_experiment,
}


def run_experiment(name: str, **kwargs) -> dict:
    if name not in EXPERIMENTS:
        raise DomainError(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name](**kwargs)
