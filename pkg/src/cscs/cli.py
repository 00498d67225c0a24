"""Command-line interface: fit, tune, and experiment over CSV inputs.

Matrices travel as headerless comma-separated values; structured results are
written as JSON with every float serialized at 17 significant digits (enough
to round-trip IEEE doubles exactly).  Exit codes: 0 success, 2 usage or
validation failure (one diagnostic line on stderr), 3 non-convergence when
--strict is set.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import fit_sparse_cholesky, fit_sparse_dag
from .covmodel import (
    CovarianceMatrix,
    DataMatrix,
    PenaltySpec,
    read_matrix_csv,
    sample_covariance,
    write_matrix_csv,
)
from .errors import CscsError
from .experiments import run_experiment
from .fit import fit_cscs
from .rowsolver import SolverConfig
from .tuning import METHODS, default_grid, quantile_penalty, tune_bic, tune_cv

SCHEMA_VERSION = 1


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    return format(float(x), ".17g")


def dumps_json(obj, level: int = 0) -> str:
    """Serialize to JSON with floats at 17 significant digits."""
    pad = "  " * level
    inner = "  " * (level + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}"{key}": {dumps_json(value, level + 1)}' for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps_json(value, level + 1)}" for value in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps_json(obj.tolist(), level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_report(path, payload: dict) -> None:
    Path(path).write_text(dumps_json(payload) + "\n")


@dataclass(frozen=True)
class RunConfig:
    """Validated per-invocation configuration shared by the subcommands."""

    command: str
    input_path: str | None
    output_path: str | None
    report_path: str | None
    method: str
    penalty_mode: str  # "scalar" | "grid" | "quantile"
    lam: float | None
    alpha: float | None
    grid: tuple[float, ...] | None
    grid_count: int
    epsilon: float
    r_max: int
    center: bool
    scale: bool
    covariance_input: bool
    n_override: int | None
    seed: int
    threads: int
    k_folds: int
    strict: bool

    def __post_init__(self):
        paths = [p for p in (self.input_path, self.output_path, self.report_path) if p]
        if len(paths) != len(set(paths)):
            raise CscsError("input, output, and report paths must be distinct")

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(epsilon=self.epsilon, r_max=self.r_max)


def _penalty_mode(args) -> str:
    modes = []
    if getattr(args, "lam", None) is not None:
        modes.append("scalar")
    if getattr(args, "quantile_alpha", None) is not None:
        modes.append("quantile")
    if getattr(args, "grid", None) is not None:
        modes.append("grid")
    if len(modes) > 1:
        raise CscsError(f"conflicting penalty specifications: {', '.join(modes)}")
    return modes[0] if modes else ""


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise CscsError(f"could not parse grid {text!r}: {exc}") from exc
    if not values or any(v < 0 for v in values):
        raise CscsError("grid must be a non-empty list of non-negative values")
    return values


def _load_input(cfg: RunConfig) -> tuple[CovarianceMatrix, DataMatrix | None, int | None]:
    """Read the input CSV as covariance or data per the flag; return the
    working covariance, the raw data when available, and the sample size."""
    try:
        raw = read_matrix_csv(cfg.input_path)
    except (OSError, ValueError) as exc:
        raise CscsError(f"could not read {cfg.input_path}: {exc}") from exc
    if cfg.covariance_input:
        cov = CovarianceMatrix(values=raw, sample_size=cfg.n_override)
        return cov, None, cfg.n_override
    data = DataMatrix(raw)
    cov = sample_covariance(data, center=cfg.center, scale=cfg.scale)
    return cov, data, data.n


def _resolve_penalty(cfg: RunConfig, p: int, n: int | None) -> PenaltySpec:
    if cfg.penalty_mode == "scalar":
        return PenaltySpec.constant(cfg.lam)
    if cfg.penalty_mode == "quantile":
        if n is None:
            raise CscsError("quantile penalties need a sample size (--n with --covariance)")
        return quantile_penalty(n, p, cfg.alpha)
    raise CscsError("fit needs exactly one of --lambda or --quantile-alpha")


def _penalty_payload(pen: PenaltySpec):
    if pen.scalar is not None:
        return pen.scalar
    return {"per_row": [float(v) for v in pen.per_row]}


def cmd_fit(cfg: RunConfig) -> int:
    cov, _, n = _load_input(cfg)
    pen = _resolve_penalty(cfg, cov.p, n)
    solver = cfg.solver
    started = time.perf_counter()
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "method": cfg.method,
        "penalty": _penalty_payload(pen),
        "epsilon": cfg.epsilon,
        "r_max": cfg.r_max,
        "input": cfg.input_path,
        "output": cfg.output_path,
    }
    if cfg.method == "cscs":
        fit = fit_cscs(cov, pen, solver, parallel=cfg.threads > 1, max_workers=cfg.threads)
        write_matrix_csv(cfg.output_path, fit.factor.to_dense())
        converged = fit.converged
        report.update(
            objective=fit.objective,
            converged=converged,
            wall_time_seconds=fit.wall_time_seconds,
            max_kkt_residual=max(r.kkt_residual for r in fit.per_row),
            per_row=[
                {"iterations": r.iterations, "converged": r.converged, "kkt_residual": r.kkt_residual}
                for r in fit.per_row
            ],
        )
    elif cfg.method == "sparse-cholesky":
        res = fit_sparse_cholesky(cov, pen, solver)
        write_matrix_csv(cfg.output_path, res.params.t)
        d_path = _sibling_path(cfg.output_path, "_d")
        write_matrix_csv(d_path, res.params.d[None, :])
        converged = res.converged
        report.update(
            objective=res.objective,
            converged=converged,
            degenerate=res.degenerate,
            degenerate_rows=list(res.degenerate_rows),
            diag_output=str(d_path),
            wall_time_seconds=time.perf_counter() - started,
            per_row=[
                {"iterations": r.iterations, "converged": r.converged, "clamped": r.clamped}
                for r in res.per_row
            ],
        )
    elif cfg.method == "sparse-dag":
        res = fit_sparse_dag(cov, pen, solver)
        write_matrix_csv(cfg.output_path, res.t)
        converged = res.converged
        report.update(
            objective=res.objective,
            converged=converged,
            wall_time_seconds=time.perf_counter() - started,
            max_kkt_residual=max(r.kkt_residual for r in res.per_row),
            per_row=[
                {"iterations": r.iterations, "converged": r.converged, "kkt_residual": r.kkt_residual}
                for r in res.per_row
            ],
        )
    else:  # pragma: no cover - argparse restricts choices
        raise CscsError(f"unknown method {cfg.method!r}")
    if cfg.report_path:
        write_report(cfg.report_path, report)
    if cfg.strict and not converged:
        print("error: solver did not converge within r_max sweeps", file=sys.stderr)
        return 3
    return 0


def _sibling_path(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix + p.suffix)


def cmd_tune(cfg: RunConfig, criterion: str) -> int:
    cov, data, n = _load_input(cfg)
    if criterion == "quantile":
        if n is None:
            raise CscsError("quantile tuning needs a sample size (--n with --covariance)")
        if cfg.alpha is None:
            raise CscsError("quantile tuning needs --alpha")
        pen = quantile_penalty(n, cov.p, cfg.alpha)
        payload = {
            "criterion": "quantile",
            "alpha": cfg.alpha,
            "grid": [],
            "scores": [],
            "selected": _penalty_payload(pen),
        }
    else:
        grid = cfg.grid if cfg.grid is not None else default_grid(cov, cfg.grid_count, cfg.solver)
        if criterion == "bic":
            if n is None:
                raise CscsError("BIC needs a sample size (--n with --covariance)")
            report = tune_bic(cov, n, grid, method=cfg.method, cfg=cfg.solver)
        elif criterion == "cv":
            if data is None:
                raise CscsError("cross-validation needs raw data input, not a covariance")
            report = tune_cv(
                data,
                cfg.method,
                grid,
                cfg.k_folds,
                cfg.seed,
                cfg.solver,
                center=cfg.center,
                scale=cfg.scale,
            )
        else:  # pragma: no cover - argparse restricts choices
            raise CscsError(f"unknown criterion {criterion!r}")
        payload = report.to_dict()
    payload.update(
        schema_version=SCHEMA_VERSION,
        command="tune",
        method=cfg.method,
        seed=cfg.seed,
        input=cfg.input_path,
    )
    if cfg.report_path:
        write_report(cfg.report_path, payload)
    else:
        print(dumps_json(payload))
    return 0


def cmd_experiment(args) -> int:
    kwargs = {"seed": args.seed, "cfg": SolverConfig(epsilon=args.epsilon, r_max=args.r_max)}
    if args.name == "degeneracy":
        kwargs.update(
            p=args.p if args.p is not None else 8,
            n=args.n if args.n is not None else 7,
            lam=args.lam if args.lam is not None else 0.1,
            seeds=args.seeds,
            base_seed=args.seed,
        )
        kwargs.pop("seed")
    else:
        defaults = {"roc-auc": (100, 25), "frobenius-path": (50, 25)}[args.name]
        kwargs.update(
            p=args.p if args.p is not None else defaults[0],
            n=args.n if args.n is not None else defaults[1],
            reps=args.reps,
            grid_count=args.grid_count,
        )
        if args.zero_fraction is not None:
            kwargs["zero_fraction"] = args.zero_fraction
    result = run_experiment(args.name, **kwargs)
    result["schema_version"] = SCHEMA_VERSION
    if args.report:
        write_report(args.report, result)
    else:
        print(dumps_json(result))
    return 0


def _add_common_solver_flags(sub):
    sub.add_argument("--epsilon", type=float, default=1e-8, help="sweep-change stopping threshold")
    sub.add_argument("--r-max", type=int, default=1000, help="maximum sweeps per row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cscs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate a sparse factor from CSV input")
    fit.add_argument("--input", required=True, help="CSV of n x p data rows, or p x p covariance")
    fit.add_argument("--covariance", action="store_true", help="treat input as a covariance matrix")
    fit.add_argument("--n", type=int, default=None, help="sample size behind a covariance input")
    fit.add_argument("--method", choices=METHODS, default="cscs")
    fit.add_argument("--lambda", dest="lam", type=float, default=None, help="scalar penalty")
    fit.add_argument(
        "--quantile-alpha",
        dest="quantile_alpha",
        type=float,
        default=None,
        help="per-row normal-quantile penalty level",
    )
    fit.add_argument("--output", required=True, help="CSV path for the estimated factor")
    fit.add_argument("--report", default=None, help="JSON report path")
    fit.add_argument("--center", dest="center", action=argparse.BooleanOptionalAction, default=True)
    fit.add_argument("--scale", action="store_true", default=False)
    fit.add_argument("--threads", type=int, default=1)
    fit.add_argument("--strict", action="store_true", help="exit 3 if any row fails to converge")
    _add_common_solver_flags(fit)
    fit.set_defaults(handler="fit")

    tune = sub.add_parser("tune", help="select a penalty by BIC, CV, or normal quantiles")
    tune.add_argument("--input", required=True)
    tune.add_argument("--covariance", action="store_true")
    tune.add_argument("--n", type=int, default=None)
    tune.add_argument("--method", choices=METHODS, default="cscs")
    tune.add_argument("--criterion", choices=("bic", "cv", "quantile"), required=True)
    tune.add_argument("--grid", type=str, default=None, help="comma-separated penalty values")
    tune.add_argument("--grid-count", type=int, default=20, help="size of the default grid")
    tune.add_argument("--alpha", type=float, default=None, help="level for the quantile criterion")
    tune.add_argument("--k", dest="k_folds", type=int, default=5, help="CV fold count")
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--center", dest="center", action=argparse.BooleanOptionalAction, default=True)
    tune.add_argument("--scale", action="store_true", default=False)
    tune.add_argument("--report", default=None, help="JSON report path (stdout when omitted)")
    _add_common_solver_flags(tune)
    tune.set_defaults(handler="tune")

    exp = sub.add_parser("experiment", help="run a seeded simulation study")
    exp.add_argument("--name", choices=("degeneracy", "roc-auc", "frobenius-path"), required=True)
    exp.add_argument("--p", type=int, default=None)
    exp.add_argument("--n", type=int, default=None)
    exp.add_argument("--reps", type=int, default=20)
    exp.add_argument("--seeds", type=int, default=20, help="replication count for degeneracy")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--lambda", dest="lam", type=float, default=None)
    exp.add_argument("--zero-fraction", dest="zero_fraction", type=float, default=None)
    exp.add_argument("--grid-count", type=int, default=25)
    exp.add_argument("--report", default=None, help="JSON report path (stdout when omitted)")
    _add_common_solver_flags(exp)
    exp.set_defaults(handler="experiment")

    return parser


def _config_from_args(args) -> RunConfig:
    mode = _penalty_mode(args)
    grid = _parse_grid(args.grid) if getattr(args, "grid", None) is not None else None
    return RunConfig(
        command=args.handler,
        input_path=getattr(args, "input", None),
        output_path=getattr(args, "output", None),
        report_path=getattr(args, "report", None),
        method=getattr(args, "method", "cscs"),
        penalty_mode=mode,
        lam=getattr(args, "lam", None),
        alpha=getattr(args, "quantile_alpha", None) or getattr(args, "alpha", None),
        grid=grid,
        grid_count=getattr(args, "grid_count", 20),
        epsilon=args.epsilon,
        r_max=args.r_max,
        center=getattr(args, "center", True),
        scale=getattr(args, "scale", False),
        covariance_input=getattr(args, "covariance", False),
        n_override=getattr(args, "n", None),
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", 1),
        k_folds=getattr(args, "k_folds", 5),
        strict=getattr(args, "strict", False),
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if args.handler == "experiment":
            return cmd_experiment(args)
        cfg = _config_from_args(args)
        if args.handler == "fit":
            return cmd_fit(cfg)
        return cmd_tune(cfg, args.criterion)
    except (CscsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
