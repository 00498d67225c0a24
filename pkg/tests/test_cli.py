import json
import math

import numpy as np
import pytest

from cscs.cli import dumps_json, format_float, main
from cscs.covmodel import read_matrix_csv, write_matrix_csv
from cscs.simeval import generate_model, sample_gaussian
from cscs.tuning import quantile_penalty


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "data.csv"
    write_matrix_csv(path, rng.standard_normal((40, 4)))
    return path


def run(*args):
    return main([str(a) for a in args])


class TestJsonSerialization:
    def test_floats_have_17_significant_digits(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(1.0) == "1"

    def test_round_trips_exactly(self):
        values = [0.1, 1e-300, math.pi, -2.5e17, 3.0]
        text = dumps_json({"v": values})
        assert json.loads(text)["v"] == values

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            dumps_json({"v": float("nan")})

    def test_nested_structures(self):
        payload = {"a": [1, {"b": True, "c": None}], "d": "x\"y"}
        assert json.loads(dumps_json(payload)) == payload


class TestFitCommand:
    def test_unpenalized_fit_inverts_centered_covariance(self, tmp_path, data_csv):
        out, rep = tmp_path / "L.csv", tmp_path / "rep.json"
        code = run(
            "fit", "--input", data_csv, "--method", "cscs", "--lambda", "0",
            "--epsilon", "1e-12", "--r-max", "100000",
            "--output", out, "--report", rep,
        )
        assert code == 0
        ld = read_matrix_csv(out)
        x = read_matrix_csv(data_csv)
        xc = x - x.mean(axis=0)
        target = np.linalg.inv(xc.T @ xc / x.shape[0])
        err = np.linalg.norm(ld.T @ ld - target) / np.linalg.norm(target)
        assert err < 1e-6
        report = json.loads(rep.read_text())
        assert report["schema_version"] == 1
        assert report["converged"] is True
        assert len(report["per_row"]) == 4

    def test_huge_penalty_gives_diagonal_factor(self, tmp_path, data_csv):
        out = tmp_path / "L.csv"
        assert run("fit", "--input", data_csv, "--lambda", "1e9", "--output", out) == 0
        ld = read_matrix_csv(out)
        assert np.all(ld[np.tril_indices(4, -1)] == 0.0)

    def test_sparse_cholesky_writes_t_and_d(self, tmp_path):
        model = generate_model(8, 0.6, seed=0)
        data = sample_gaussian(model, 7, seed=1)
        src = tmp_path / "deg.csv"
        write_matrix_csv(src, data.values)
        out, rep = tmp_path / "T.csv", tmp_path / "rep.json"
        code = run(
            "fit", "--input", src, "--method", "sparse-cholesky", "--lambda", "0.1",
            "--no-center", "--output", out, "--report", rep,
        )
        assert code == 0  # degeneracy is reported, not an error
        report = json.loads(rep.read_text())
        assert "degenerate" in report
        t = read_matrix_csv(out)
        np.testing.assert_allclose(np.diag(t), np.ones(8))
        d = read_matrix_csv(tmp_path / "T_d.csv")
        assert d.shape == (1, 8)

    def test_sparse_dag_output_unit_diagonal(self, tmp_path, data_csv):
        out = tmp_path / "T.csv"
        assert run("fit", "--input", data_csv, "--method", "sparse-dag", "--lambda", "0.2", "--output", out) == 0
        np.testing.assert_allclose(np.diag(read_matrix_csv(out)), np.ones(4))

    def test_quantile_penalty_mode(self, tmp_path, data_csv):
        out, rep = tmp_path / "L.csv", tmp_path / "rep.json"
        code = run(
            "fit", "--input", data_csv, "--quantile-alpha", "0.1",
            "--output", out, "--report", rep,
        )
        assert code == 0
        report = json.loads(rep.read_text())
        expected = quantile_penalty(40, 4, 0.1)
        np.testing.assert_allclose(report["penalty"]["per_row"], expected.per_row)

    def test_covariance_input(self, tmp_path, data_csv):
        x = read_matrix_csv(data_csv)
        cov_path = tmp_path / "S.csv"
        write_matrix_csv(cov_path, x.T @ x / x.shape[0])
        out = tmp_path / "L.csv"
        assert run("fit", "--input", cov_path, "--covariance", "--lambda", "0.1", "--output", out) == 0

    def test_missing_input_exits_2(self, tmp_path):
        assert run("fit", "--input", tmp_path / "nope.csv", "--lambda", "1", "--output", tmp_path / "o.csv") == 2

    def test_conflicting_penalty_modes_exit_2(self, tmp_path, data_csv):
        code = run(
            "fit", "--input", data_csv, "--lambda", "0.1", "--quantile-alpha", "0.1",
            "--output", tmp_path / "o.csv",
        )
        assert code == 2

    def test_no_penalty_mode_exits_2(self, tmp_path, data_csv):
        assert run("fit", "--input", data_csv, "--output", tmp_path / "o.csv") == 2

    def test_identical_paths_exit_2(self, data_csv):
        assert run("fit", "--input", data_csv, "--lambda", "1", "--output", data_csv) == 2

    def test_strict_nonconvergence_exits_3(self, tmp_path, data_csv):
        code = run(
            "fit", "--input", data_csv, "--lambda", "0.001", "--epsilon", "1e-15",
            "--r-max", "1", "--strict", "--output", tmp_path / "o.csv",
        )
        assert code == 3

    def test_nonconvergence_without_strict_is_ok(self, tmp_path, data_csv):
        code = run(
            "fit", "--input", data_csv, "--lambda", "0.001", "--epsilon", "1e-15",
            "--r-max", "1", "--output", tmp_path / "o.csv",
        )
        assert code == 0


class TestTuneCommand:
    def test_bic_selects_argmin(self, tmp_path, data_csv):
        rep = tmp_path / "tune.json"
        code = run(
            "tune", "--input", data_csv, "--criterion", "bic",
            "--grid", "0.01,0.1,0.5", "--report", rep,
        )
        assert code == 0
        report = json.loads(rep.read_text())
        assert report["selected"] == report["grid"][int(np.argmin(report["scores"]))]

    def test_cv_deterministic_reports(self, tmp_path, data_csv):
        rep1, rep2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["tune", "--input", data_csv, "--criterion", "cv", "--k", "5",
                "--seed", "7", "--grid", "0.05,0.2"]
        assert run(*args, "--report", rep1) == 0
        assert run(*args, "--report", rep2) == 0
        assert rep1.read_text() == rep2.read_text()

    def test_quantile_criterion_matches_library(self, tmp_path, data_csv):
        rep = tmp_path / "q.json"
        assert run("tune", "--input", data_csv, "--criterion", "quantile", "--alpha", "0.1", "--report", rep) == 0
        report = json.loads(rep.read_text())
        expected = quantile_penalty(40, 4, 0.1)
        np.testing.assert_allclose(report["selected"]["per_row"], expected.per_row)

    def test_cv_rejects_covariance_input(self, tmp_path, data_csv):
        x = read_matrix_csv(data_csv)
        cov_path = tmp_path / "S.csv"
        write_matrix_csv(cov_path, x.T @ x / x.shape[0])
        code = run("tune", "--input", cov_path, "--covariance", "--criterion", "cv", "--grid", "0.1")
        assert code == 2

    def test_bic_with_covariance_needs_n(self, tmp_path, data_csv):
        x = read_matrix_csv(data_csv)
        cov_path = tmp_path / "S.csv"
        write_matrix_csv(cov_path, x.T @ x / x.shape[0])
        assert run("tune", "--input", cov_path, "--covariance", "--criterion", "bic", "--grid", "0.1") == 2
        assert run("tune", "--input", cov_path, "--covariance", "--n", "40", "--criterion", "bic", "--grid", "0.1") == 0

    def test_bad_grid_exits_2(self, data_csv):
        assert run("tune", "--input", data_csv, "--criterion", "bic", "--grid", "0.1,oops") == 2


class TestExperimentCommand:
    def test_degeneracy_experiment_json(self, tmp_path):
        rep = tmp_path / "deg.json"
        assert run("experiment", "--name", "degeneracy", "--seeds", "5", "--report", rep) == 0
        report = json.loads(rep.read_text())
        assert report["experiment"] == "degeneracy"
        assert len(report["runs"]) == 5
        assert all("min_d_trace" in r for r in report["runs"])

    def test_unknown_experiment_exits_2(self, tmp_path):
        assert run("experiment", "--name", "nope", "--report", tmp_path / "x.json") == 2

    def test_experiment_deterministic(self, tmp_path):
        rep1, rep2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["experiment", "--name", "degeneracy", "--seeds", "3", "--seed", "4"]
        assert run(*args, "--report", rep1) == 0
        assert run(*args, "--report", rep2) == 0
        assert rep1.read_text() == rep2.read_text()
