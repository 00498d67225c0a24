"""Core data model: observations, covariances, triangular factors, penalties.

The estimators in this package work on the classical Cholesky factor L of
the precision matrix (Omega = L^t L, L lower triangular with positive
diagonal) and on the modified parameterization (T, D) with Omega = T^t D^-1 T,
T unit-diagonal lower triangular and D a positive diagonal.  The two are
linked by L = D^{-1/2} T, i.e. row i of T divided by sqrt(D_ii); this is the
unique convention under which L^t L = T^t D^-1 T, and it preserves the
sparsity pattern exactly (L_ij = 0 iff T_ij = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidCovariance, ZeroVarianceColumn

__all__ = [
    "DataMatrix",
    "CovarianceMatrix",
    "CholeskyFactor",
    "ModifiedCholesky",
    "PenaltySpec",
    "sample_covariance",
    "to_modified_cholesky",
    "from_modified_cholesky",
    "precision_from_factor",
    "cscs_objective",
    "read_matrix_csv",
    "write_matrix_csv",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    """Return a float64 copy with the writeable flag cleared."""
    out = np.array(a, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DataMatrix:
    """An n x p observation matrix; rows are samples, columns variables."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(np.atleast_2d(self.values))
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionMismatch(f"data must be a 2-d matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidCovariance("data contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CovarianceMatrix:
    """A p x p symmetric PSD matrix with strictly positive diagonal.

    Parameters
    ----------
    values : np.ndarray, shape (p, p)
        The covariance matrix itself.
    low_rank_factor : np.ndarray, shape (p, n), optional
        A factor B with values = B @ B.T.  When the matrix comes from n
        observations this enables O(n)-per-coordinate solver updates.
    sample_size : int, optional
        Number of observations behind the matrix, when known.

    Notes
    -----
    Symmetry and positive diagonal are enforced at construction; positive
    semidefiniteness is a documented invariant verified in the test suite
    rather than on every construction (an eigendecomposition per instance
    would dominate runtime).
    """

    values: np.ndarray
    low_rank_factor: np.ndarray | None = None
    sample_size: int | None = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got shape {v.shape}")
        scale = float(np.abs(v).max())
        if np.abs(v - v.T).max() > 1e-12 * max(scale, 1.0):
            raise InvalidCovariance("covariance is not symmetric to 1e-12 relative tolerance")
        if np.any(np.diag(v) <= 0.0):
            raise InvalidCovariance("covariance has a non-positive diagonal entry")
        object.__setattr__(self, "values", v)
        if self.low_rank_factor is not None:
            b = _frozen(self.low_rank_factor)
            if b.ndim != 2 or b.shape[0] != v.shape[0]:
                raise DimensionMismatch(
                    f"low-rank factor shape {b.shape} incompatible with p={v.shape[0]}"
                )
            if np.abs(v - b @ b.T).max() > 1e-10:
                raise InvalidCovariance("low-rank factor does not reproduce the covariance")
            object.__setattr__(self, "low_rank_factor", b)
        if self.sample_size is not None and self.sample_size < 1:
            raise InvalidCovariance("sample_size must be positive")

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower triangular factor with positive diagonal, stored as ragged rows.

    Row i (0-based) holds the i+1 entries (L_i0, ..., L_ii): the strictly
    lower entries followed by the diagonal entry.  The ragged layout matches
    the row-separable structure of the estimation problem; dense views are
    materialized only for I/O and matrix algebra.
    """

    rows: tuple[np.ndarray, ...]

    def __post_init__(self):
        rows = tuple(_frozen(np.atleast_1d(r)) for r in self.rows)
        if not rows:
            raise DimensionMismatch("factor needs at least one row")
        for i, r in enumerate(rows):
            if r.ndim != 1 or r.shape[0] != i + 1:
                raise DimensionMismatch(f"row {i} must have length {i + 1}, got {r.shape}")
            if not np.all(np.isfinite(r)):
                raise InvalidCovariance(f"row {i} contains non-finite entries")
            if r[-1] <= 0.0:
                raise InvalidCovariance(f"diagonal entry of row {i} must be positive")
        object.__setattr__(self, "rows", rows)

    @property
    def p(self) -> int:
        return len(self.rows)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.p, self.p))
        for i, r in enumerate(self.rows):
            out[i, : i + 1] = r
        return out

    @classmethod
    def from_dense(cls, m: np.ndarray) -> "CholeskyFactor":
        m = np.asarray(m, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] > 1 and np.any(np.triu(m, k=1) != 0.0):
            raise InvalidCovariance("matrix has nonzero entries above the diagonal")
        return cls(tuple(m[i, : i + 1] for i in range(m.shape[0])))

    def diagonal(self) -> np.ndarray:
        return np.array([r[-1] for r in self.rows])

    def nonzero_count(self, include_diagonal: bool = True) -> int:
        total = sum(int(np.count_nonzero(r[:-1])) for r in self.rows)
        if include_diagonal:
            total += self.p
        return total


@dataclass(frozen=True)
class ModifiedCholesky:
    """Pair (T, D): unit-diagonal lower triangular T, positive diagonal D."""

    t: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        t = _frozen(self.t)
        d = _frozen(np.atleast_1d(self.d))
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionMismatch(f"T must be square, got shape {t.shape}")
        if d.shape != (t.shape[0],):
            raise DimensionMismatch("D must be a vector with one entry per row of T")
        if np.any(np.abs(np.diag(t) - 1.0) > 0.0):
            raise InvalidCovariance("T must have a unit diagonal")
        if t.shape[0] > 1 and np.any(np.triu(t, k=1) != 0.0):
            raise InvalidCovariance("T must be lower triangular")
        if np.any(d <= 0.0):
            raise InvalidCovariance("all conditional variances must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.t.shape[0]

    def precision(self) -> np.ndarray:
        """Omega = T^t D^-1 T."""
        return self.t.T @ (self.t / self.d[:, None])


@dataclass(frozen=True)
class PenaltySpec:
    """L1 penalty level: a single scalar, or one value per row.

    Row i's penalty multiplies the absolute strictly-lower entries of row i;
    row 0 has no penalized entries so its value is inert.
    """

    scalar: float | None = None
    per_row: np.ndarray | None = None

    def __post_init__(self):
        if (self.scalar is None) == (self.per_row is None):
            raise ValueError("exactly one of scalar/per_row must be given")
        if self.scalar is not None:
            if not np.isfinite(self.scalar) or self.scalar < 0.0:
                raise InvalidCovariance("penalty must be a finite non-negative number")
            object.__setattr__(self, "scalar", float(self.scalar))
        else:
            v = _frozen(np.atleast_1d(self.per_row))
            if v.ndim != 1 or v.shape[0] < 1:
                raise DimensionMismatch("per-row penalties must form a vector")
            if not np.all(np.isfinite(v)) or np.any(v < 0.0):
                raise InvalidCovariance("per-row penalties must be finite and non-negative")
            object.__setattr__(self, "per_row", v)

    @classmethod
    def constant(cls, lam: float) -> "PenaltySpec":
        return cls(scalar=lam)

    @classmethod
    def rowwise(cls, values) -> "PenaltySpec":
        return cls(per_row=np.asarray(values, dtype=np.float64))

    def for_row(self, i: int) -> float:
        """Penalty applied to the strictly-lower entries of (0-based) row i."""
        if self.scalar is not None:
            return self.scalar
        return float(self.per_row[i])

    def check_dimension(self, p: int) -> None:
        if self.per_row is not None and self.per_row.shape[0] != p:
            raise DimensionMismatch(
                f"per-row penalty has {self.per_row.shape[0]} entries, expected {p}"
            )


def sample_covariance(
    data: DataMatrix,
    center: bool = False,
    scale: bool = False,
    unbiased: bool = False,
) -> CovarianceMatrix:
    """Empirical covariance S = (1/n) X^t X of (optionally centered/scaled) data.

    The denominator is n by default; ``unbiased=True`` switches to n-1 for
    interoperability with other tools.  The returned matrix carries the
    low-rank factor B = X^t / sqrt(denominator), so S = B B^t exactly.

    Raises
    ------
    ZeroVarianceColumn
        If ``scale`` is requested and some column is constant.
    """
    x = np.array(data.values, copy=True)
    n = x.shape[0]
    if center:
        x -= x.mean(axis=0)
    if scale:
        sd = np.sqrt(np.mean((x - x.mean(axis=0)) ** 2, axis=0))
        bad = np.nonzero(sd <= 0.0)[0]
        if bad.size:
            raise ZeroVarianceColumn(f"column {int(bad[0])} has zero variance")
        x /= sd
    denom = n - 1 if unbiased else n
    if denom < 1:
        raise InvalidCovariance("unbiased covariance needs at least two samples")
    b = x.T / np.sqrt(denom)
    s = b @ b.T
    s = (s + s.T) / 2.0
    return CovarianceMatrix(values=s, low_rank_factor=b, sample_size=n)


def to_modified_cholesky(factor: CholeskyFactor) -> ModifiedCholesky:
    """Convert L to (T, D): D_ii = 1 / L_ii^2, T_ij = L_ij / L_ii."""
    p = factor.p
    t = np.eye(p)
    d = np.empty(p)
    for i, row in enumerate(factor.rows):
        d[i] = 1.0 / row[-1] ** 2
        t[i, :i] = row[:-1] / row[-1]
    return ModifiedCholesky(t=t, d=d)


def from_modified_cholesky(td: ModifiedCholesky) -> CholeskyFactor:
    """Convert (T, D) to L = D^{-1/2} T (row i of T divided by sqrt(D_ii))."""
    rows = tuple(td.t[i, : i + 1] / np.sqrt(td.d[i]) for i in range(td.p))
    return CholeskyFactor(rows)


def precision_from_factor(factor: CholeskyFactor) -> np.ndarray:
    """Omega = L^t L, symmetric positive definite for any valid factor."""
    ld = factor.to_dense()
    omega = ld.T @ ld
    return (omega + omega.T) / 2.0


def cscs_objective(factor: CholeskyFactor, cov: CovarianceMatrix, penalty: PenaltySpec) -> float:
    """tr(L^t L S) - 2 log|L| + sum_i lambda_i * sum_{j<i} |L_ij|.

    The trace term is evaluated as sum_i L_i. S L_i.^t, which equals the sum
    of the per-row quadratic forms eta_i^t S_i eta_i over the disjoint row
    partition of L.
    """
    if factor.p != cov.p:
        raise DimensionMismatch(f"factor has p={factor.p} but covariance has p={cov.p}")
    penalty.check_dimension(factor.p)
    ld = factor.to_dense()
    quad = float(np.einsum("ij,jk,ik->", ld, cov.values, ld))
    logdet = float(np.sum(np.log(factor.diagonal())))
    pen = 0.0
    for i, row in enumerate(factor.rows):
        if i > 0:
            pen += penalty.for_row(i) * float(np.abs(row[:-1]).sum())
    return quad - 2.0 * logdet + pen


def read_matrix_csv(path) -> np.ndarray:
    """Read a dense matrix from comma-separated text with no header."""
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    """Write a dense matrix as comma-separated rows (explicit zeros kept)."""
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")
