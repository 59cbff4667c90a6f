"""Command-line front end.

Exit codes: 0 success, 1 IO or usage error, 2 validation or feasibility
error, 3 ill-posed problem or solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .closed_form import ConstantStrategy, Solution, objective_constant, solve, value_function
from .errors import OptdivError, UsageError
from .model import CONFIG_KEYS, ValidatedModel, load_config
from .sensitivity import PARAMETERS, fd_check, report_csv
from .simulate import TimeGrid, choose_horizon, exact_path, mc_objective, write_paths
from .sweep import DEFAULT_ETAS, DEFAULT_POINTS, DEFAULT_RHOS, emit_csv, sweep_lambda, sweep_rho


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="flat JSON parameter file")
    for key in CONFIG_KEYS:
        p.add_argument(f"--{key}", type=float, dest=f"param_{key}", metavar="X", help=f"override {key}")
    p.add_argument("--clamp-boundary", action="store_true", help="accept kappa* = 0 when C < 0")
    p.add_argument("--format", choices=("text", "json"), default="text")


def _strategy_args(p: argparse.ArgumentParser, required: bool) -> None:
    for name in ("pi", "kappa", "xi"):
        p.add_argument(f"--{name}", type=float, required=required, metavar="X")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optdiv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"optdiv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="optimal constant strategy and value function")
    _model_args(p)
    p.add_argument("--x", type=float, default=1.0, help="initial wealth for the reported value")

    p = sub.add_parser("objective", help="exact objective of a given constant strategy")
    _model_args(p)
    _strategy_args(p, required=True)
    p.add_argument("--x", type=float, default=1.0)

    p = sub.add_parser("simulate", help="dump exact wealth paths as CSV")
    _model_args(p)
    _strategy_args(p, required=False)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("mc", help="Monte Carlo estimate of the objective")
    _model_args(p)
    _strategy_args(p, required=False)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    span = p.add_mutually_exclusive_group()
    span.add_argument("--horizon", type=float)
    span.add_argument("--tail-tol", type=float, help="default 1e-4 * |closed-form value|")
    p.add_argument("--dt", type=float, default=0.05, help="time step")

    p = sub.add_parser("sensitivity", help="analytic partials against finite differences")
    _model_args(p)
    p.add_argument("--wrt", action="append", choices=PARAMETERS, help="repeatable; default all")
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--out", help="output directory for sensitivity.csv")

    p = sub.add_parser("sweep-rho", help="strategy over correlation, one series per eta")
    _model_args(p)
    p.add_argument("--etas", type=_float_list, default=list(DEFAULT_ETAS))
    p.add_argument("--points", type=int, default=DEFAULT_POINTS)
    p.add_argument("--rho-min", type=float, default=-0.8)
    p.add_argument("--rho-max", type=float, default=0.8)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep-lambda", help="strategy over jump intensity, one series per rho")
    _model_args(p)
    p.add_argument("--rhos", type=_float_list, default=list(DEFAULT_RHOS))
    p.add_argument("--points", type=int, default=DEFAULT_POINTS)
    p.add_argument("--lambda-min", type=float, default=0.01)
    p.add_argument("--lambda-max", type=float, default=0.2)
    p.add_argument("--theta", type=float, default=0.5, help="premium loading")
    p.add_argument("--fixed-p", action="store_true", help="keep p instead of the loading rule")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _load_model(args) -> ValidatedModel:
    overrides = {k: getattr(args, f"param_{k}") for k in CONFIG_KEYS if getattr(args, f"param_{k}") is not None}
    return load_config(args.config, **overrides)


def _emit(record: dict, fmt_kind: str, out) -> None:
    if fmt_kind == "json":
        clean = {k: (float(fmt(v)) if isinstance(v, float) and math.isfinite(v) else v) for k, v in record.items()}
        out.write(json.dumps(clean, sort_keys=False) + "\n")
    else:
        for k, v in record.items():
            out.write(f"{k}={fmt(v)}\n")


def _solution_record(sol: Solution, x: float) -> dict:
    c = sol.constants
    rec = {
        "utility": sol.utility_kind,
        "eta": sol.eta,
        "pi_star": sol.pi_star,
        "kappa_star": sol.kappa_star,
        "xi_star": sol.xi_star,
        "drift_star": sol.drift_star,
        "psi": sol.psi if sol.psi is not None else "",
        "sharpe": c.lambda_sharpe,
        "A": c.a,
        "B": c.b,
        "C": c.c,
        "method": sol.method,
        "boundary": sol.boundary,
        "x": x,
        "value": value_function(sol, x),
    }
    return rec


def _strategy(args, model: ValidatedModel) -> tuple[ConstantStrategy, Solution | None]:
    given = [args.pi, args.kappa, args.xi]
    if all(v is None for v in given):
        sol = solve(model, clamp_boundary=args.clamp_boundary)
        return sol.strategy, sol
    if any(v is None for v in given):
        raise UsageError("give all of --pi, --kappa, --xi or none of them")
    return ConstantStrategy(args.pi, args.kappa, args.xi), None


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc.strerror}") from None
    return out


def _run(args, out) -> None:
    model = _load_model(args)
    cmd = args.command
    if cmd == "solve":
        sol = solve(model, clamp_boundary=args.clamp_boundary)
        _emit(_solution_record(sol, args.x), args.format, out)
    elif cmd == "objective":
        u = ConstantStrategy(args.pi, args.kappa, args.xi)
        _emit({"pi": u.pi_c, "kappa": u.kappa_c, "xi": u.xi_c, "x": args.x,
               "objective": objective_constant(model, u, args.x)}, args.format, out)
    elif cmd == "simulate":
        u, _ = _strategy(args, model)
        grid = TimeGrid(args.horizon, args.steps)
        paths = [exact_path(model, u, args.x, grid, args.seed, i) for i in range(args.paths)]
        written = write_paths(paths, _out_dir(args.out))
        _emit({"paths": len(written), "directory": str(Path(args.out))}, args.format, out)
    elif cmd == "mc":
        u, _ = _strategy(args, model)
        exact = objective_constant(model, u, args.x)
        if args.horizon is not None:
            horizon = args.horizon
        else:
            tol = args.tail_tol if args.tail_tol is not None else 1e-4 * abs(exact)
            horizon = choose_horizon(model, u, tol, x=args.x)
        grid = TimeGrid.from_step(horizon, args.dt)
        est = mc_objective(model, u, args.x, args.paths, grid, args.seed)
        _emit({"mean": est.mean, "std_error": est.std_error, "n_paths": est.n_paths,
               "horizon": grid.horizon, "steps": grid.steps, "tail_bound": est.horizon_tail_bound,
               "quadrature_bias": est.quadrature_bias, "closed_form": exact,
               "abs_error": abs(est.mean - exact)}, args.format, out)
    elif cmd == "sensitivity":
        rows = fd_check(model, args.wrt or PARAMETERS, args.step)
        dest = _out_dir(args.out) / "sensitivity.csv" if args.out else None
        out.write(report_csv(rows, dest))
    elif cmd == "sweep-rho":
        table = sweep_rho(model, args.etas, args.points, (args.rho_min, args.rho_max))
        dest = emit_csv(table, _out_dir(args.out) / "sweep_rho.csv")
        _emit({"rows": len(table.rows), "csv": str(dest)}, args.format, out)
    elif cmd == "sweep-lambda":
        table = sweep_lambda(model, args.rhos, args.points, (args.lambda_min, args.lambda_max),
                             theta=None if args.fixed_p else args.theta, eta=model.eta, gamma=model.gamma)
        dest = emit_csv(table, _out_dir(args.out) / "sweep_lambda.csv")
        _emit({"rows": len(table.rows), "csv": str(dest)}, args.format, out)


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        _run(args, out)
    except OptdivError as exc:
        err.write(f"error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
