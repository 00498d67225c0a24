"""Sparse Cholesky factor estimation for inverse covariance matrices.

The main entry points are :func:`fit_cscs` (the convex estimator over the
classical Cholesky factor), the two baselines :func:`fit_sparse_cholesky` and
:func:`fit_sparse_dag`, penalty tuning (BIC, cross-validation, normal
quantiles), and a seeded simulation/evaluation harness.
"""

from .baselines import (
    SparseCholResult,
    SparseDagResult,
    fit_sparse_cholesky,
    fit_sparse_dag,
    sparse_cholesky_objective,
    sparse_dag_objective,
)
from .covmodel import (
    CholeskyFactor,
    CovarianceMatrix,
    DataMatrix,
    ModifiedCholesky,
    PenaltySpec,
    cscs_objective,
    from_modified_cholesky,
    precision_from_factor,
    sample_covariance,
    to_modified_cholesky,
)
from .fit import FitResult, fit_cscs, fully_sparsifying_penalty, penalty_path
from .rowsolver import (
    RowProblem,
    RowSolution,
    SolverConfig,
    kkt_check,
    minimize_row,
    soft_threshold,
)
from .simeval import (
    GroundTruthModel,
    RocCurve,
    RocPoint,
    auc_windowed,
    conditional_forecast,
    forecast_error,
    frobenius_error,
    gaussian_loglik,
    generate_model,
    roc_curve,
    sample_gaussian,
    selection_rates,
)
from .tuning import (
    TuningReport,
    bic_score,
    cv_score,
    default_grid,
    quantile_penalty,
    tune_bic,
    tune_cv,
)

__version__ = "0.1.0"
