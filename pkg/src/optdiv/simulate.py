"""Wealth simulation and Monte Carlo estimates of the dividend objective.

Constant strategies are simulated exactly on the grid (wealth is an
exponential of Brownian and Poisson increments).  Arbitrary feedback
strategies go through an explicit Euler scheme with multiplicative jumps.
Random draws follow the substream layout documented in :mod:`optdiv.rng`,
so results depend only on ``(seed, path_index)`` and never on worker count.
"""

from __future__ import annotations

import csv
import math
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
from scipy.optimize import brentq

from . import rng
from .closed_form import ConstantStrategy, _check_kappa, discount_gap, drift_log
from .errors import DomainError, IllPosed, UsageError
from .model import ValidatedModel

WORKERS_ENV = "OPTDIV_WORKERS"
BLOCK_SIZE = 1024

# (t, wealth) -> (pi, kappa, dividend rate); arrays in, arrays out
Policy = Callable[[float, np.ndarray], tuple]


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise UsageError(f"horizon must be positive and finite, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise UsageError(f"steps must be a positive integer, got {self.steps}")

    @classmethod
    def from_step(cls, horizon: float, dt: float) -> TimeGrid:
        return cls(horizon, max(1, math.ceil(horizon / dt - 1e-9)))

    @property
    def h(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.h


@dataclass(frozen=True)
class Path:
    index: int
    times: np.ndarray
    wealth: np.ndarray
    jump_count: np.ndarray
    ruin_time: float | None = None


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate of the discounted utility of dividends.

    ``quadrature_bias`` is the Richardson estimate of the trapezoid error
    (``(I_h - I_2h) / 3``, zero when the step count is odd).  Euler-based
    estimates have no analytic tail bound and report ``nan`` there.
    """

    mean: float
    std_error: float
    n_paths: int
    horizon_tail_bound: float
    quadrature_bias: float = 0.0
    n_excluded: int = 0


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise UsageError(f"worker count must be >= 1, got {workers}")
    return workers


def _blocks(n_paths: int, block: int = BLOCK_SIZE) -> list[range]:
    return [range(s, min(s + block, n_paths)) for s in range(0, n_paths, block)]


def _map_blocks(fn, n_paths: int, workers: int | None):
    blocks = _blocks(n_paths)
    workers = min(resolve_workers(workers), len(blocks))
    if workers == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def exposures(model: ValidatedModel, pi: float, kappa: float) -> tuple[float, float]:
    """Loadings of relative wealth changes on the two Brownian motions."""
    m = model
    return m.sigma * pi - m.beta * m.rho * kappa, -m.beta * math.sqrt(1.0 - m.rho**2) * kappa


def _exact_block(model, u_c, grid, seed, indices):
    """Log-wealth increments relative to ``ln x`` and cumulative jumps, shape (paths, steps+1)."""
    m, h, n = model, grid.h, grid.steps
    f = drift_log(model, u_c.pi_c, u_c.kappa_c)
    a1, a2 = exposures(model, u_c.pi_c, u_c.kappa_c)
    sq = math.sqrt(h)
    logw = np.zeros((len(indices), n + 1))
    jumps = np.zeros((len(indices), n + 1), dtype=np.int64)
    jump_log = math.log1p(-m.gamma * u_c.kappa_c) if m.lam > 0 else 0.0
    for row, i in enumerate(indices):
        inc = (f - u_c.xi_c) * h + np.zeros(n)
        if a1 != 0.0:
            inc += a1 * sq * rng.normals(seed, i, rng.W1, n)
        if a2 != 0.0:
            inc += a2 * sq * rng.normals(seed, i, rng.W2, n)
        if m.lam > 0:
            dn = rng.poisson(seed, i, m.lam * h, n)
            if jump_log != 0.0:
                inc += jump_log * (dn - m.lam * h)
            np.cumsum(dn, out=jumps[row, 1:])
        np.cumsum(inc, out=logw[row, 1:])
    return logw, jumps


def _check_strategy(model: ValidatedModel, u_c: ConstantStrategy, x: float) -> None:
    if not x > 0:
        raise DomainError(f"initial wealth x={x} must be > 0")
    _check_kappa(model, u_c.kappa_c)


def exact_path(
    model: ValidatedModel, u_c: ConstantStrategy, x: float, grid: TimeGrid, seed: int, path_index: int = 0
) -> Path:
    _check_strategy(model, u_c, x)
    logw, jumps = _exact_block(model, u_c, grid, seed, [path_index])
    return Path(path_index, grid.times, x * np.exp(logw[0]), jumps[0])


def exact_wealth(
    model: ValidatedModel,
    u_c: ConstantStrategy,
    x: float,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    workers: int | None = None,
) -> np.ndarray:
    """Wealth of paths ``0..n_paths-1`` on the grid, shape ``(n_paths, steps+1)``."""
    _check_strategy(model, u_c, x)
    parts = _map_blocks(lambda b: _exact_block(model, u_c, grid, seed, b)[0], n_paths, workers)
    return x * np.exp(np.concatenate(parts))


def expected_wealth(model: ValidatedModel, u_c: ConstantStrategy, x: float, t):
    m = model
    rate = m.r + (m.mu - m.r) * u_c.pi_c + (m.p - m.alpha) * u_c.kappa_c - m.lam * m.gamma * u_c.kappa_c - u_c.xi_c
    return x * np.exp(rate * np.asarray(t))


def constant_policy(u_c: ConstantStrategy) -> Policy:
    """Feedback form of a constant strategy: dividend rate ``xi_c * wealth``."""

    def policy(t, wealth):
        return u_c.pi_c, u_c.kappa_c, u_c.xi_c * wealth

    return policy


def _euler_block(model, policy, x, grid, seed, indices, forced_jumps=None):
    m, h, n = model, grid.h, grid.steps
    k = len(indices)
    sq = math.sqrt(h)
    dw1 = np.stack([rng.normals(seed, i, rng.W1, n) for i in indices]) * sq
    dw2 = np.stack([rng.normals(seed, i, rng.W2, n) for i in indices]) * sq
    if forced_jumps is not None:
        dn = np.broadcast_to(np.asarray(forced_jumps, dtype=np.int64), (k, n))
    elif m.lam > 0:
        dn = np.stack([rng.poisson(seed, i, m.lam * h, n) for i in indices])
    else:
        dn = np.zeros((k, n), dtype=np.int64)
    times = grid.times
    wealth = np.empty((k, n + 1))
    wealth[:, 0] = x
    divs = np.zeros((k, n + 1))
    alive = np.ones(k, dtype=bool)
    ruin_step = np.full(k, -1)
    srho = math.sqrt(1.0 - m.rho**2)
    for j in range(n):
        xj = wealth[:, j]
        pi, kappa, dd = (np.broadcast_to(np.asarray(v, dtype=float), (k,)) for v in policy(times[j], xj))
        if np.any(kappa < 0) or np.any(kappa >= m.kappa_max) or np.any(dd < 0):
            raise DomainError(f"policy left the admissible set at t={times[j]}")
        dd = np.where(alive, dd, 0.0)
        divs[:, j] = dd
        drift = xj * (m.r + (m.mu - m.r) * pi + (m.p - m.alpha) * kappa) - dd
        diff = (m.sigma * pi - m.beta * m.rho * kappa) * xj * dw1[:, j] - m.beta * srho * kappa * xj * dw2[:, j]
        nxt = (xj + drift * h + diff) * (1.0 - m.gamma * kappa) ** dn[:, j]
        ruined = alive & (nxt <= 0)
        ruin_step[ruined] = j + 1
        alive &= ~ruined
        wealth[:, j + 1] = np.where(alive, nxt, 0.0)
    last = policy(times[n], wealth[:, n])[2]
    divs[:, n] = np.where(alive, np.broadcast_to(np.asarray(last, dtype=float), (k,)), 0.0)
    return wealth, np.cumsum(np.concatenate([np.zeros((k, 1), dtype=np.int64), dn], axis=1), axis=1), ruin_step, divs


def euler_path(
    model: ValidatedModel,
    policy: Policy,
    x: float,
    grid: TimeGrid,
    seed: int,
    path_index: int = 0,
    forced_jumps: Sequence[int] | None = None,
) -> Path:
    """One Euler path; ``forced_jumps`` (per-step counts) replaces the Poisson draws."""
    if not x > 0:
        raise DomainError(f"initial wealth x={x} must be > 0")
    if forced_jumps is not None and len(forced_jumps) != grid.steps:
        raise UsageError("forced_jumps needs one count per step")
    wealth, jumps, ruin_step, _ = _euler_block(model, policy, x, grid, seed, [path_index], forced_jumps)
    rs = int(ruin_step[0])
    return Path(path_index, grid.times, wealth[0], jumps[0], None if rs < 0 else float(grid.times[rs]))


def euler_wealth(
    model: ValidatedModel,
    policy: Policy,
    x: float,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    workers: int | None = None,
) -> np.ndarray:
    if not x > 0:
        raise DomainError(f"initial wealth x={x} must be > 0")
    parts = _map_blocks(lambda b: _euler_block(model, policy, x, grid, seed, b)[0], n_paths, workers)
    return np.concatenate(parts)


def _trapezoid(values: np.ndarray, h: float) -> np.ndarray:
    return h * (values[:, 1:-1].sum(axis=1) + 0.5 * (values[:, 0] + values[:, -1]))


def _integrals(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray | None]:
    fine = _trapezoid(values, h)
    steps = values.shape[1] - 1
    coarse = _trapezoid(values[:, ::2], 2 * h) if steps % 2 == 0 and steps >= 2 else None
    return fine, coarse


def _summarise(fine, coarse, tail, n_excluded=0) -> McEstimate:
    n = len(fine)
    if n < 2:
        raise UsageError("need at least two usable paths for a standard error")
    mean = float(np.mean(fine))
    se = float(np.std(fine, ddof=1) / math.sqrt(n))
    bias = float(np.mean(fine - coarse) / 3.0) if coarse is not None else 0.0
    return McEstimate(mean, se, n, tail, bias, n_excluded)


def _log_tail(a: float, b: float, delta: float, horizon: float) -> float:
    # monotone majorant of |int_T^inf e^{-delta t} (a + b t) dt|
    return math.exp(-delta * horizon) * ((abs(a) + abs(b) * horizon) / delta + abs(b) / delta**2)


def tail_bound(model: ValidatedModel, u_c: ConstantStrategy, horizon: float, x: float = 1.0) -> float:
    """Bound on the objective's contribution from ``[horizon, inf)`` under ``u_c``."""
    _check_strategy(model, u_c, x)
    eta, d = model.eta, model.delta
    if u_c.xi_c == 0:
        if eta < 1:
            return 0.0
        raise DomainError("xi_c = 0 pays no dividends; the objective is -inf")
    if eta == 1.0:
        a = math.log(u_c.xi_c * x)
        b = drift_log(model, u_c.pi_c, u_c.kappa_c) - u_c.xi_c
        return _log_tail(a, b, d, horizon)
    gap = discount_gap(model, u_c)
    if not gap > 0:
        raise IllPosed(f"discounted utility does not decay (rate {gap:.6g} <= 0)")
    k = 1.0 - eta
    scale = abs((u_c.xi_c * x) ** k / k)
    return scale * math.exp(-gap * horizon) / gap


def choose_horizon(
    model: ValidatedModel,
    u_c: ConstantStrategy,
    tail_tol: float,
    x: float = 1.0,
    granularity: float | None = 1.0,
) -> float:
    """Smallest horizon whose tail bound is at most ``tail_tol``.

    With ``granularity`` set the result is rounded up to a whole multiple of it.
    """
    if not tail_tol > 0:
        raise UsageError(f"tail_tol must be > 0, got {tail_tol}")
    bound0 = tail_bound(model, u_c, 0.0, x)
    if bound0 <= tail_tol:
        horizon = 0.0
    elif model.eta == 1.0:
        hi = 1.0
        while tail_bound(model, u_c, hi, x) > tail_tol:
            hi *= 2.0
        horizon = brentq(lambda t: tail_bound(model, u_c, t, x) - tail_tol, 0.0, hi, xtol=1e-12, rtol=1e-14)
    else:
        gap = discount_gap(model, u_c)
        horizon = math.log(bound0 / tail_tol) / gap
    if granularity:
        horizon = max(1, math.ceil(horizon / granularity - 1e-9)) * granularity
    return horizon


def _utility(eta: float, c: np.ndarray) -> np.ndarray:
    if eta == 1.0:
        return np.log(c)
    return c ** (1.0 - eta) / (1.0 - eta)


def mc_objective(
    model: ValidatedModel,
    u_c: ConstantStrategy,
    x: float,
    n_paths: int,
    grid: TimeGrid,
    seed: int,
    workers: int | None = None,
) -> McEstimate:
    """Estimate the objective of a constant strategy from exact paths on ``grid``."""
    _check_strategy(model, u_c, x)
    eta, d = model.eta, model.delta
    tail = tail_bound(model, u_c, grid.horizon, x)
    if u_c.xi_c == 0:
        zeros = np.zeros(max(n_paths, 2))
        return _summarise(zeros[:n_paths], zeros[:n_paths], tail)
    times = grid.times
    disc = np.exp(-d * times)
    log_xi_x = math.log(u_c.xi_c * x)

    def block(idx):
        logw, _ = _exact_block(model, u_c, grid, seed, idx)
        if eta == 1.0:
            vals = disc * (log_xi_x + logw)
        else:
            k = 1.0 - eta
            vals = disc * np.exp(k * (log_xi_x + logw)) / k
        return _integrals(vals, grid.h)

    parts = _map_blocks(block, n_paths, workers)
    fine = np.concatenate([p[0] for p in parts])
    coarse = np.concatenate([p[1] for p in parts]) if parts[0][1] is not None else None
    return _summarise(fine, coarse, tail)


def mc_objective_euler(
    model: ValidatedModel,
    policy: Policy,
    x: float,
    n_paths: int,
    grid: TimeGrid,
    seed: int,
    workers: int | None = None,
) -> McEstimate:
    """Objective estimate for a feedback policy over ``[0, horizon]`` from Euler paths.

    Ruined paths contribute zero utility afterwards when ``0 < eta < 1``.
    For log and ``eta > 1`` utility of a zero dividend is ``-inf``; such
    paths are dropped and counted in ``n_excluded``.
    """
    if not x > 0:
        raise DomainError(f"initial wealth x={x} must be > 0")
    eta, d = model.eta, model.delta
    disc = np.exp(-d * grid.times)

    def block(idx):
        _, _, ruin_step, divs = _euler_block(model, policy, x, grid, seed, idx)
        with np.errstate(divide="ignore"):
            util = _utility(eta, divs)
        ruined = ruin_step >= 0
        if eta < 1:
            util = np.where(divs > 0, util, 0.0)
            keep = np.ones(len(idx), dtype=bool)
        else:
            keep = ~ruined & np.all(np.isfinite(util), axis=1)
        fine, coarse = _integrals(disc * np.where(keep[:, None], util, 0.0), grid.h)
        return fine[keep], None if coarse is None else coarse[keep], int((~keep).sum())

    parts = _map_blocks(block, n_paths, workers)
    fine = np.concatenate([p[0] for p in parts])
    coarse = np.concatenate([p[1] for p in parts]) if parts[0][1] is not None else None
    return _summarise(fine, coarse, math.nan, sum(p[2] for p in parts))


def write_paths(paths: Sequence[Path], directory: str | os.PathLike) -> list[FsPath]:
    """Dump each path to ``path_<index>.csv`` with columns time, wealth, jumps."""
    out = FsPath(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for path in paths:
        target = out / f"path_{path.index:06d}.csv"
        with target.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["time", "wealth", "jumps"])
            for t, w, j in zip(path.times, path.wealth, path.jump_count):
                writer.writerow([f"{t:.12g}", f"{w:.12g}", int(j)])
        written.append(target)
    return written
