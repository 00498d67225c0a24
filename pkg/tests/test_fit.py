import math

import numpy as np
import pytest

from cscs.covmodel import (
    CovarianceMatrix,
    DataMatrix,
    PenaltySpec,
    cscs_objective,
    precision_from_factor,
    sample_covariance,
)
from cscs.errors import InvalidCovariance, InvalidProblem
from cscs.fit import fit_cscs, fully_sparsifying_penalty, penalty_path
from cscs.rowsolver import RowProblem, SolverConfig, minimize_row, row_objective


def random_cov(seed, n, p, center=False):
    rng = np.random.default_rng(seed)
    return sample_covariance(DataMatrix(rng.standard_normal((n, p))), center=center)


TIGHT = SolverConfig(epsilon=1e-12, r_max=100_000)


class TestFitCscs:
    def test_diagonal_covariance_closed_form(self):
        cov = CovarianceMatrix(np.diag([4.0, 9.0]))
        fit = fit_cscs(cov, PenaltySpec.constant(0.0))
        np.testing.assert_allclose(fit.factor.to_dense(), np.diag([0.5, 1.0 / 3.0]), atol=1e-12)
        assert fit.converged

    def test_fully_sparsifying_penalty_gives_inverse_diagonal(self):
        cov = random_cov(0, n=30, p=5)
        lam = fully_sparsifying_penalty(cov)
        fit = fit_cscs(cov, PenaltySpec.constant(lam), TIGHT)
        dense = fit.factor.to_dense()
        assert np.all(dense[np.tril_indices(5, -1)] == 0.0)
        np.testing.assert_allclose(
            fit.factor.diagonal(), 1.0 / np.sqrt(np.diag(cov.values)), rtol=1e-12
        )
        omega = precision_from_factor(fit.factor)
        np.testing.assert_allclose(np.diag(omega), 1.0 / np.diag(cov.values), rtol=1e-12)

    def test_unpenalized_fit_inverts_covariance(self):
        cov = random_cov(1, n=60, p=6)
        fit = fit_cscs(cov, PenaltySpec.constant(0.0), TIGHT)
        target = np.linalg.inv(cov.values)
        err = np.linalg.norm(precision_from_factor(fit.factor) - target) / np.linalg.norm(target)
        assert err <= 1e-6

    def test_objective_field_consistent(self):
        cov = random_cov(2, n=10, p=4)
        pen = PenaltySpec.constant(0.3)
        fit = fit_cscs(cov, pen)
        assert fit.objective == pytest.approx(cscs_objective(fit.factor, cov, pen), abs=1e-8)

    def test_row_separability(self):
        cov = random_cov(3, n=8, p=5)
        lam = 0.25
        fit = fit_cscs(cov, PenaltySpec.constant(lam), TIGHT)
        total = row_objective(cov.values[:1, :1], np.array([1.0 / math.sqrt(cov.values[0, 0])]), 0.0)
        for i in range(1, 5):
            prob = RowProblem(
                a=cov.values[: i + 1, : i + 1],
                lam=lam,
                low_rank_factor=cov.low_rank_factor[: i + 1],
            )
            sol = minimize_row(prob, TIGHT)
            total += row_objective(prob.a, sol.x, lam)
        assert fit.objective == pytest.approx(total, abs=1e-8)

    @pytest.mark.parametrize("seed,n,p", [(4, 6, 12), (5, 40, 7)])
    def test_precision_estimate_is_positive_definite(self, seed, n, p):
        cov = random_cov(seed, n=n, p=p)
        fit = fit_cscs(cov, PenaltySpec.constant(0.2))
        assert fit.factor.diagonal().min() > 0.0
        np.linalg.cholesky(precision_from_factor(fit.factor))

    def test_parallel_matches_serial_bitwise(self):
        cov = random_cov(6, n=15, p=10)
        pen = PenaltySpec.constant(0.15)
        serial = fit_cscs(cov, pen, parallel=False)
        threaded = fit_cscs(cov, pen, parallel=True, max_workers=4)
        for a, b in zip(serial.factor.rows, threaded.factor.rows):
            assert np.array_equal(np.array(a), np.array(b))
        assert serial.objective == threaded.objective

    def test_per_row_penalties(self):
        cov = random_cov(7, n=25, p=4)
        huge = 1e6
        pen = PenaltySpec.rowwise([0.0, huge, 0.0, huge])
        fit = fit_cscs(cov, pen, TIGHT)
        dense = fit.factor.to_dense()
        assert np.all(dense[1, :1] == 0.0)
        assert np.all(dense[3, :3] == 0.0)
        assert np.any(dense[2, :2] != 0.0)  # unpenalized row keeps its regression

    def test_row_one_closed_form_and_diagnostics(self):
        cov = random_cov(8, n=9, p=3)
        fit = fit_cscs(cov, PenaltySpec.constant(0.1))
        assert fit.factor.rows[0][0] == pytest.approx(1.0 / math.sqrt(cov.values[0, 0]))
        assert fit.per_row[0].iterations == 0
        assert fit.per_row[0].converged

    def test_invalid_covariance_rejected(self):
        with pytest.raises(InvalidCovariance):
            CovarianceMatrix(np.diag([1.0, -2.0]))

    def test_penalty_dimension_checked(self):
        cov = random_cov(9, n=10, p=3)
        with pytest.raises(Exception):
            fit_cscs(cov, PenaltySpec.rowwise([0.1, 0.1]))

    def test_nonconvergence_reported_not_raised(self):
        cov = random_cov(10, n=4, p=9)
        fit = fit_cscs(cov, PenaltySpec.constant(0.01), SolverConfig(epsilon=1e-14, r_max=2))
        assert not fit.converged
        assert any(not r.converged for r in fit.per_row)

    def test_warm_start_changes_speed_not_optimum(self):
        cov = random_cov(11, n=12, p=6)
        pen = PenaltySpec.constant(0.1)
        cold = fit_cscs(cov, pen, TIGHT)
        warm = fit_cscs(cov, pen, TIGHT, initial=cold.factor)
        assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
        assert sum(r.iterations for r in warm.per_row) <= sum(r.iterations for r in cold.per_row)


class TestPenaltyPath:
    def test_single_sparsifying_point(self):
        cov = random_cov(12, n=20, p=4)
        lam = fully_sparsifying_penalty(cov)
        [fit] = penalty_path(cov, [lam], TIGHT)
        assert fit.factor.nonzero_count(include_diagonal=False) == 0

    def test_results_in_caller_order_with_tags(self):
        cov = random_cov(13, n=20, p=4)
        grid = [0.1, 0.5, 0.05]
        fits = penalty_path(cov, grid, TIGHT)
        assert [f.penalty.scalar for f in fits] == grid

    def test_warm_start_matches_cold_start_objectives(self):
        cov = random_cov(14, n=10, p=6)
        grid = [0.1, 0.5]
        path = penalty_path(cov, grid, TIGHT)
        for lam, fit in zip(grid, path):
            cold = fit_cscs(cov, PenaltySpec.constant(lam), TIGHT)
            assert fit.objective == pytest.approx(cold.objective, abs=1e-6)

    def test_every_path_point_is_certified(self):
        cov = random_cov(15, n=8, p=6)
        grid = [0.05, 0.2, 1.0]
        for lam, fit in zip(grid, penalty_path(cov, grid, SolverConfig(epsilon=1e-10, r_max=100_000))):
            assert max(r.kkt_residual for r in fit.per_row) <= 1e-6 * (1.0 + lam)

    def test_empty_or_negative_grid_rejected(self):
        cov = random_cov(16, n=10, p=3)
        with pytest.raises(InvalidProblem):
            penalty_path(cov, [])
        with pytest.raises(InvalidProblem):
            penalty_path(cov, [0.1, -0.2])


class TestFullySparsifyingPenalty:
    def test_returned_value_sparsifies(self):
        cov = random_cov(17, n=12, p=5)
        lam = fully_sparsifying_penalty(cov)
        fit = fit_cscs(cov, PenaltySpec.constant(lam))
        assert fit.factor.nonzero_count(include_diagonal=False) == 0

    def test_deterministic(self):
        cov = random_cov(18, n=12, p=5)
        assert fully_sparsifying_penalty(cov) == fully_sparsifying_penalty(cov)

    def test_not_vacuously_large(self):
        # half the returned value must leave at least one nonzero
        cov = random_cov(19, n=30, p=5)
        lam = fully_sparsifying_penalty(cov)
        fit = fit_cscs(cov, PenaltySpec.constant(lam / 2.0))
        assert fit.factor.nonzero_count(include_diagonal=False) > 0
