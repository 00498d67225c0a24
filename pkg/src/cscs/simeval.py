"""Synthetic ground-truth models, Gaussian sampling, and evaluation metrics.

Edge recovery treats a strictly-lower entry as "found" when its magnitude
exceeds ZERO_THRESHOLD; soft-thresholding produces exact zeros, so the
threshold only guards float noise.  Windowed AUC integrates TPR against FPR
over an FPR interval without normalizing by the window width, so its ceiling
equals the width of the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .covmodel import CholeskyFactor, DataMatrix, ModifiedCholesky
from .errors import (
    DegenerateConfig,
    DimensionMismatch,
    EmptyTruth,
    InsufficientCurve,
    SingularBlock,
)

__all__ = [
    "ZERO_THRESHOLD",
    "GroundTruthModel",
    "RocPoint",
    "RocCurve",
    "generate_model",
    "sample_gaussian",
    "estimated_edges",
    "selection_rates",
    "roc_curve",
    "auc_windowed",
    "frobenius_error",
    "gaussian_loglik",
    "conditional_forecast",
    "forecast_error",
    "paired_sign_test_pvalue",
]

# Magnitude below which an estimated strictly-lower entry counts as zero.
ZERO_THRESHOLD = 1e-8


@dataclass(frozen=True)
class GroundTruthModel:
    """A known (T0, D0) pair, its precision matrix, and its edge set."""

    params: ModifiedCholesky
    precision: np.ndarray
    edge_set: frozenset
    seed: int

    @property
    def p(self) -> int:
        return self.params.p


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    lam: float

    def __post_init__(self):
        if not (0.0 <= self.fpr <= 1.0 and 0.0 <= self.tpr <= 1.0):
            raise DimensionMismatch("TPR and FPR must lie in [0, 1]")


@dataclass(frozen=True)
class RocCurve:
    """Points sorted by FPR; ties in FPR are averaged during integration."""

    points: tuple[RocPoint, ...]

    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique FPR knots with tie-averaged TPR."""
        fpr = np.array([pt.fpr for pt in self.points])
        tpr = np.array([pt.tpr for pt in self.points])
        knots = np.unique(fpr)
        means = np.array([tpr[fpr == k].mean() for k in knots])
        return knots, means


def roc_curve(points) -> RocCurve:
    return RocCurve(points=tuple(sorted(points, key=lambda pt: (pt.fpr, pt.tpr))))


def generate_model(
    p: int,
    zero_fraction: float,
    coef_range: tuple[float, float] = (0.3, 0.7),
    d_range: tuple[float, float] = (2.0, 5.0),
    seed: int = 0,
) -> GroundTruthModel:
    """Draw a random sparse (T0, D0) and its precision T0^t D0^-1 T0.

    Exactly round(zero_fraction * p(p-1)/2) strictly-lower positions of T0
    are zeroed, chosen uniformly without replacement; the rest are uniform on
    ``coef_range`` with independent random signs.  D0 entries are uniform on
    ``d_range``.  All draws come from a single seeded PCG64 stream (zeros,
    then coefficients, then signs, then D0), so the model is a pure function
    of the arguments.
    """
    if p < 2:
        raise DegenerateConfig("need p >= 2 to have candidate edges")
    if not 0.0 < zero_fraction < 1.0:
        raise DegenerateConfig("zero_fraction must lie strictly in (0, 1)")
    lo, hi = coef_range
    dlo, dhi = d_range
    if not (0.0 < lo <= hi and 0.0 < dlo <= dhi):
        raise DegenerateConfig("coefficient and variance ranges must be positive and ordered")
    positions = [(i, j) for i in range(1, p) for j in range(i)]
    m = len(positions)
    zeros = int(round(zero_fraction * m))
    if zeros >= m:
        raise DegenerateConfig("rounding left no true edges")

    rng = np.random.default_rng(seed)
    zero_idx = set(rng.choice(m, size=zeros, replace=False).tolist())
    live = [positions[idx] for idx in range(m) if idx not in zero_idx]
    coefs = rng.uniform(lo, hi, size=len(live))
    signs = np.where(rng.random(len(live)) < 0.5, -1.0, 1.0)
    d0 = rng.uniform(dlo, dhi, size=p)

    t0 = np.eye(p)
    for (i, j), c, sgn in zip(live, coefs, signs):
        t0[i, j] = sgn * c
    params = ModifiedCholesky(t=t0, d=d0)
    return GroundTruthModel(
        params=params,
        precision=params.precision(),
        edge_set=frozenset(live),
        seed=seed,
    )


def sample_gaussian(model: GroundTruthModel, n: int, seed: int = 0) -> DataMatrix:
    """Draw n rows from the zero-mean Gaussian with precision T0^t D0^-1 T0.

    Each row solves the unit-lower-triangular system T0 y = D0^{1/2} z by
    forward substitution (no matrix inversion), giving population covariance
    exactly equal to the model's precision inverse.
    """
    if n < 1:
        raise DimensionMismatch("need at least one sample")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, model.p))
    rhs = z * np.sqrt(model.params.d)[None, :]
    y = solve_triangular(model.params.t, rhs.T, lower=True, unit_diagonal=True)
    return DataMatrix(y.T)


def estimated_edges(estimate, threshold: float = ZERO_THRESHOLD) -> frozenset:
    """Strictly-lower positions of a factor (or dense triangular matrix) whose
    magnitude exceeds the zero threshold."""
    if isinstance(estimate, CholeskyFactor):
        dense = estimate.to_dense()
    else:
        dense = np.asarray(estimate, dtype=np.float64)
    p = dense.shape[0]
    return frozenset(
        (i, j) for i in range(1, p) for j in range(i) if abs(dense[i, j]) > threshold
    )


def selection_rates(found, truth, p: int) -> tuple[float, float]:
    """(TPR, FPR) of a recovered edge set against the true one.

    Raises
    ------
    EmptyTruth
        If the true edge set is empty (TPR undefined).
    """
    truth = frozenset(truth)
    found = frozenset(found)
    if not truth:
        raise EmptyTruth("true edge set is empty; TPR undefined")
    total_pairs = p * (p - 1) // 2
    negatives = total_pairs - len(truth)
    tpr = len(found & truth) / len(truth)
    fpr = len(found - truth) / negatives if negatives > 0 else 0.0
    return tpr, fpr


def auc_windowed(curve: RocCurve, fpr_lo: float, fpr_hi: float) -> float:
    """Trapezoidal integral of TPR over FPR in [fpr_lo, fpr_hi], unnormalized.

    TPR at the window endpoints comes from linear interpolation between curve
    knots (constant extrapolation beyond the observed FPR range).  The
    maximum attainable value is fpr_hi - fpr_lo.
    """
    if not fpr_lo < fpr_hi:
        raise DimensionMismatch("window must satisfy fpr_lo < fpr_hi")
    if len(curve.points) < 2:
        raise InsufficientCurve("need at least 2 ROC points to integrate")
    knots, tprs = curve.xy()
    inside = knots[(knots > fpr_lo) & (knots < fpr_hi)]
    xs = np.concatenate(([fpr_lo], inside, [fpr_hi]))
    ys = np.interp(xs, knots, tprs)
    widths = np.diff(xs)
    return float(np.sum(widths * (ys[:-1] + ys[1:]) / 2.0))


def frobenius_error(truth: np.ndarray, estimate: np.ndarray) -> float:
    """Frobenius norm of the entrywise difference."""
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise DimensionMismatch(f"shapes {truth.shape} and {estimate.shape} differ")
    return float(np.linalg.norm(truth - estimate, "fro"))


def gaussian_loglik(test: DataMatrix, mean: np.ndarray, factor: CholeskyFactor) -> float:
    """Total Gaussian log-likelihood of test rows under Omega = L^t L.

    Per row: (2 sum(log L_ii) - ||L (y - mu)||^2 - p log(2 pi)) / 2; the
    quadratic form never materializes Omega.
    """
    mean = np.asarray(mean, dtype=np.float64)
    if test.p != factor.p or mean.shape != (test.p,):
        raise DimensionMismatch("test data, mean, and factor dimensions differ")
    ld = factor.to_dense()
    resid = (test.values - mean[None, :]) @ ld.T
    quad = float(np.sum(resid * resid))
    logdet = 2.0 * float(np.sum(np.log(factor.diagonal())))
    n = test.n
    return 0.5 * (n * logdet - quad - n * test.p * math.log(2.0 * math.pi))


def conditional_forecast(
    mean: np.ndarray,
    covariance: np.ndarray,
    split: int,
    y1: np.ndarray,
) -> np.ndarray:
    """Conditional-mean forecast mu_2 + Sigma_21 Sigma_11^{-1} (y1 - mu_1).

    Sigma_11^{-1} (y1 - mu_1) is obtained from a Cholesky solve of the
    leading block, never an explicit inverse.
    """
    mean = np.asarray(mean, dtype=np.float64)
    sigma = np.asarray(covariance, dtype=np.float64)
    y1 = np.asarray(y1, dtype=np.float64)
    p = sigma.shape[0]
    if sigma.shape != (p, p) or mean.shape != (p,):
        raise DimensionMismatch("mean and covariance dimensions differ")
    if not 0 < split < p:
        raise DimensionMismatch(f"split {split} must lie strictly inside 0..{p}")
    if y1.shape != (split,):
        raise DimensionMismatch(f"observed block must have length {split}")
    s11 = sigma[:split, :split]
    s21 = sigma[split:, :split]
    try:
        chol = cho_factor(s11, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularBlock("leading covariance block is not positive definite") from exc
    return mean[split:] + s21 @ cho_solve(chol, y1 - mean[:split])


def forecast_error(predictions: np.ndarray, actuals: np.ndarray) -> np.ndarray:
    """Mean absolute error per forecast coordinate across test rows."""
    predictions = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    actuals = np.atleast_2d(np.asarray(actuals, dtype=np.float64))
    if predictions.shape != actuals.shape:
        raise DimensionMismatch(f"shapes {predictions.shape} and {actuals.shape} differ")
    return np.mean(np.abs(predictions - actuals), axis=0)


def paired_sign_test_pvalue(wins: int, trials: int) -> float:
    """One-sided binomial tail P(X >= wins) for X ~ Bin(trials, 1/2).

    Ties should be discarded before calling (wins counts strict wins out of
    the non-tied trials).
    """
    if trials < 1 or wins < 0 or wins > trials:
        raise DimensionMismatch("need 0 <= wins <= trials with trials >= 1")
    total = sum(math.comb(trials, k) for k in range(wins, trials + 1))
    return total / 2.0**trials
