"""Parameter sweeps of the optimal strategy and their CSV output."""

from __future__ import annotations

import csv
import json
import os
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import __version__
from .closed_form import Solution, solve, solve_diffusion
from .errors import EmptyTable, IllPosed, InfeasibleC, NoCrossing, NoInteriorMax, UsageError
from .model import ValidatedModel, expected_value_premium

CSV_HEADER = ("varying", "series", "pi_star", "kappa_star", "xi_star", "feasible")
COLUMNS = ("pi_star", "kappa_star", "xi_star")
DEFAULT_POINTS = 200
RHO_RANGE = (-0.8, 0.8)
LAMBDA_RANGE = (0.01, 0.2)
DEFAULT_ETAS = (0.8, 1.0, 2.0, 5.0)
DEFAULT_RHOS = (-0.6, -0.2, 0.2, 0.6)


@dataclass(frozen=True)
class SweepRow:
    varying: float
    series: float
    pi_star: float | None
    kappa_star: float | None
    xi_star: float | None
    feasible: bool


@dataclass
class SweepTable:
    """Sweep output; ``point`` re-solves one (varying, series) pair when available."""

    varying_name: str
    series_name: str
    rows: list[SweepRow]
    parameters: dict = field(default_factory=dict)
    point: Callable[[float, float], Solution] | None = field(default=None, repr=False, compare=False)

    def series_values(self) -> list[float]:
        return sorted({row.series for row in self.rows})

    def column(self, series: float, column: str) -> tuple[np.ndarray, np.ndarray]:
        """Grid values and column values of the feasible rows of one series."""
        if column not in COLUMNS:
            raise UsageError(f"unknown column {column!r}")
        rows = [r for r in self.rows if r.series == series and r.feasible]
        return np.array([r.varying for r in rows]), np.array([getattr(r, column) for r in rows])


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 2:
        raise UsageError(f"a sweep needs at least 2 points, got {n}")
    if not lo < hi:
        raise UsageError(f"empty sweep range [{lo}, {hi}]")
    return np.linspace(lo, hi, n)


def _row(point, v: float, s: float) -> SweepRow:
    try:
        sol = point(v, s)
    except (InfeasibleC, IllPosed):
        return SweepRow(float(v), float(s), None, None, None, False)
    return SweepRow(float(v), float(s), sol.pi_star, sol.kappa_star, sol.xi_star, True)


def _sweep(varying, series_name, grid, series, point, parameters) -> SweepTable:
    rows = [_row(point, v, s) for v in grid for s in series]
    return SweepTable(varying, series_name, rows, parameters, point)


def sweep_rho(
    model: ValidatedModel,
    etas: Sequence[float] = DEFAULT_ETAS,
    n_points: int = DEFAULT_POINTS,
    rho_range: tuple[float, float] = RHO_RANGE,
) -> SweepTable:
    """Optimal no-jump strategy over a grid of correlations, one series per risk aversion."""
    if model.lam != 0:
        raise UsageError("the correlation sweep is defined without jumps (lambda = 0)")
    for eta in etas:
        if not eta > 0:
            raise UsageError(f"risk aversion must be > 0, got {eta}")

    def point(rho, eta):
        return solve_diffusion(model.replace(rho=rho, eta=eta))

    params = {"base": model.to_flat(), "etas": list(etas), "rho_range": list(rho_range), "n_points": n_points}
    return _sweep("rho", "eta", _grid(*rho_range, n_points), list(etas), point, params)


def sweep_lambda(
    model: ValidatedModel,
    rhos: Sequence[float] = DEFAULT_RHOS,
    n_points: int = DEFAULT_POINTS,
    lam_range: tuple[float, float] = LAMBDA_RANGE,
    theta: float | None = 0.5,
    eta: float = 2.0,
    gamma: float = 0.3,
) -> SweepTable:
    """Optimal strategy over jump intensities, one series per correlation.

    The premium follows the expected value principle with loading ``theta``
    at every intensity (``theta=None`` keeps the model's fixed ``p``).
    """

    def point(lam, rho):
        over = {"lam": lam, "rho": rho, "eta": eta, "gamma": gamma}
        if theta is not None:
            over["p"] = expected_value_premium(model.alpha, lam, gamma, theta)
        return solve(model.replace(**over))

    params = {
        "base": model.to_flat(),
        "rhos": list(rhos),
        "lambda_range": list(lam_range),
        "n_points": n_points,
        "premium_rule": "fixed_p" if theta is None else {"expected_value": theta},
        "eta": eta,
        "gamma": gamma,
    }
    return _sweep("lambda", "rho", _grid(*lam_range, n_points), list(rhos), point, params)


def _value(point, column, v, s) -> float:
    return getattr(point(v, s), column)


def find_threshold(
    table: SweepTable,
    series: float,
    column: str,
    kind: Literal["zero_crossing", "argmax", "argmin"],
    xtol: float = 1e-12,
) -> float:
    """Locate a sign change or an interior extremum of ``column`` along the varying axis.

    The table only brackets the feature; the returned value is refined on
    the solver itself.
    """
    if table.point is None:
        raise UsageError("table has no solver attached; thresholds need a fresh sweep")
    xs, ys = table.column(series, column)
    if len(xs) < 2:
        raise NoCrossing(f"fewer than two feasible points in series {series}")
    point = table.point
    if kind == "zero_crossing":
        signs = np.sign(ys)
        for i in range(len(xs) - 1):
            if signs[i] == 0:
                return float(xs[i])
            if signs[i] * signs[i + 1] < 0:
                return brentq(lambda v: _value(point, column, v, series), xs[i], xs[i + 1], xtol=xtol, rtol=1e-15)
        if signs[-1] == 0:
            return float(xs[-1])
        raise NoCrossing(f"{column} does not change sign in series {series}")
    if kind in ("argmax", "argmin"):
        sign = 1.0 if kind == "argmax" else -1.0
        ys = sign * ys
        i = int(np.argmax(ys))
        if i == 0 or i == len(xs) - 1 or not (ys[i] > ys[i - 1] or ys[i] > ys[i + 1]):
            word = "maximum" if kind == "argmax" else "minimum"
            raise NoInteriorMax(f"{column} has no interior {word} in series {series}")
        res = minimize_scalar(
            lambda v: -sign * _value(point, column, v, series),
            bracket=(xs[i - 1], xs[i], xs[i + 1]),
            method="golden",
            tol=1e-10,
        )
        return float(res.x)
    raise UsageError(f"unknown threshold kind {kind!r}")


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.12g}"


def emit_csv(
    table: SweepTable,
    destination: str | os.PathLike,
    feasible_only: bool = False,
    metadata: bool = True,
) -> Path:
    """Write the table (varying major, series minor) and optionally a ``.meta.json`` companion."""
    rows = [r for r in table.rows if r.feasible or not feasible_only]
    if not rows:
        raise EmptyTable("no rows to write")
    rows.sort(key=lambda r: (r.varying, r.series))
    dest = Path(destination)
    with dest.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [_fmt(r.varying), _fmt(r.series), _fmt(r.pi_star), _fmt(r.kappa_star), _fmt(r.xi_star),
                 "true" if r.feasible else "false"]
            )
    if metadata:
        meta = {
            "tool": "optdiv",
            "version": __version__,
            "varying": table.varying_name,
            "series": table.series_name,
            "parameters": table.parameters,
        }
        dest.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return dest


def read_csv(source: str | os.PathLike, varying_name: str = "varying", series_name: str = "series") -> SweepTable:
    with open(source, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise UsageError(f"unexpected header {header!r}")
        rows = []
        for rec in reader:
            def num(s):
                return float(s) if s != "" else None
            feasible = rec[5] == "true"
            rows.append(SweepRow(float(rec[0]), float(rec[1]), num(rec[2]), num(rec[3]), num(rec[4]), feasible))
    return SweepTable(varying_name, series_name, rows)


def is_strictly_monotone(values: np.ndarray, increasing: bool) -> bool:
    diffs = np.diff(values)
    return bool(np.all(diffs > 0) if increasing else np.all(diffs < 0))
