import csv
import math

import numpy as np
import pytest

from optdiv import rng
from optdiv.closed_form import ConstantStrategy, objective_constant, solve, value_function
from optdiv.errors import DomainError, UsageError
from optdiv.simulate import (
    BLOCK_SIZE,
    TimeGrid,
    choose_horizon,
    constant_policy,
    discount_gap,
    euler_path,
    euler_wealth,
    exact_path,
    exact_wealth,
    expected_wealth,
    mc_objective,
    mc_objective_euler,
    resolve_workers,
    tail_bound,
    write_paths,
)


def test_time_grid():
    g = TimeGrid.from_step(10.0, 0.05)
    assert g.steps == 200 and g.h == pytest.approx(0.05)
    assert g.times[-1] == pytest.approx(10.0)
    with pytest.raises(UsageError):
        TimeGrid(0.0, 10)
    with pytest.raises(UsageError):
        TimeGrid(1.0, 0)


def test_riskless_path_is_deterministic(diffusion_model):
    u = ConstantStrategy(0.0, 0.0, 0.04)
    grid = TimeGrid(5.0, 50)
    path = exact_path(diffusion_model, u, 2.0, grid, seed=1)
    np.testing.assert_allclose(path.wealth, 2.0 * np.exp((0.01 - 0.04) * grid.times), rtol=1e-14)


def test_substreams_are_stable():
    a = rng.normals(5, 17, rng.W1, 8)
    assert np.array_equal(a, rng.normals(5, 17, rng.W1, 8))
    assert not np.array_equal(a, rng.normals(5, 17, rng.W2, 8))
    assert not np.array_equal(a, rng.normals(5, 18, rng.W1, 8))
    # a longer draw extends the shorter one
    assert np.array_equal(rng.normals(5, 17, rng.W1, 20)[:8], a)


def test_paths_positive_with_jumps(jump_model):
    sol = solve(jump_model)
    w = exact_wealth(jump_model, sol.strategy, 1.0, TimeGrid(50.0, 500), seed=3, n_paths=200)
    assert np.all(w > 0)
    path = exact_path(jump_model, sol.strategy, 1.0, TimeGrid(50.0, 500), seed=3, path_index=5)
    assert path.jump_count[-1] > 0
    assert np.all(np.diff(path.jump_count) >= 0)
    np.testing.assert_array_equal(path.wealth, w[5])


def test_mean_wealth_on_grid(jump_model):
    u = solve(jump_model).strategy
    grid = TimeGrid(5.0, 20)
    w = exact_wealth(jump_model, u, 1.0, grid, seed=11, n_paths=20_000)
    se = w.std(axis=0, ddof=1) / math.sqrt(len(w))
    expect = expected_wealth(jump_model, u, 1.0, grid.times)
    assert np.all(np.abs(w.mean(axis=0) - expect) <= 4 * se + 1e-15)


def test_worker_count_does_not_change_results(jump_model):
    u = solve(jump_model).strategy
    grid = TimeGrid(2.0, 40)
    n = BLOCK_SIZE * 2 + 37
    one = exact_wealth(jump_model, u, 1.0, grid, seed=9, n_paths=n, workers=1)
    many = exact_wealth(jump_model, u, 1.0, grid, seed=9, n_paths=n, workers=4)
    assert np.array_equal(one, many)
    # a path does not depend on how many others were drawn
    assert np.array_equal(one[:10], exact_wealth(jump_model, u, 1.0, grid, seed=9, n_paths=10))
    e1 = mc_objective(jump_model, u, 1.0, n, grid, seed=9, workers=1)
    e3 = mc_objective(jump_model, u, 1.0, n, grid, seed=9, workers=3)
    assert e1 == e3


def test_workers_env(monkeypatch):
    monkeypatch.setenv("OPTDIV_WORKERS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    monkeypatch.setenv("OPTDIV_WORKERS", "many")
    with pytest.raises(UsageError):
        resolve_workers()
    with pytest.raises(UsageError):
        resolve_workers(0)


def test_euler_without_risk_is_compound_interest(diffusion_model):
    grid = TimeGrid(4.0, 40)
    path = euler_path(diffusion_model, constant_policy(ConstantStrategy(0.0, 0.0, 0.03)), 1.0, grid, seed=0)
    expect = (1 + (0.01 - 0.03) * grid.h) ** np.arange(41)
    np.testing.assert_allclose(path.wealth, expect, rtol=1e-14)
    assert path.ruin_time is None


def test_forced_jump_scales_wealth(jump_model):
    u = ConstantStrategy(0.3, 1.5, 0.1)
    grid = TimeGrid(2.0, 20)
    base = euler_path(jump_model, constant_policy(u), 1.0, grid, seed=4, forced_jumps=[0] * 20)
    jumps = [0] * 20
    jumps[7] = 1
    hit = euler_path(jump_model, constant_policy(u), 1.0, grid, seed=4, forced_jumps=jumps)
    np.testing.assert_allclose(hit.wealth[:8], base.wealth[:8], rtol=1e-15)
    np.testing.assert_allclose(hit.wealth[8:], base.wealth[8:] * (1 - 0.3 * 1.5), rtol=1e-13)
    assert hit.jump_count[-1] == 1
    with pytest.raises(UsageError):
        euler_path(jump_model, constant_policy(u), 1.0, grid, seed=4, forced_jumps=[0])


def test_euler_ruin_is_absorbing(diffusion_model):
    u = ConstantStrategy(0.0, 200.0, 0.0)
    grid = TimeGrid(1.0, 50)
    paths = [euler_path(diffusion_model, constant_policy(u), 1.0, grid, seed=2, path_index=i) for i in range(20)]
    ruined = [p for p in paths if p.ruin_time is not None]
    assert ruined
    for p in ruined:
        k = int(round(p.ruin_time / grid.h))
        assert np.all(p.wealth[k:] == 0) and np.all(p.wealth[:k] > 0)


def test_euler_weak_accuracy(jump_model):
    u = solve(jump_model).strategy
    grid = TimeGrid(2.0, 40)
    w = euler_wealth(jump_model, constant_policy(u), 1.0, grid, seed=8, n_paths=40_000)[:, -1]
    m = jump_model
    a = m.r + (m.mu - m.r) * u.pi_c + (m.p - m.alpha) * u.kappa_c - u.xi_c
    # the scheme's own mean: compound drift times the jump compensator
    euler_mean = (1 + a * grid.h) ** grid.steps * math.exp(-m.lam * m.gamma * u.kappa_c * grid.horizon)
    se = w.std(ddof=1) / math.sqrt(len(w))
    assert abs(w.mean() - euler_mean) < 4 * se
    exact = expected_wealth(m, u, 1.0, grid.horizon)
    assert abs(euler_mean - exact) < a * a * grid.h * grid.horizon


def test_euler_mc_matches_exact_mc(diffusion_model):
    u = solve(diffusion_model).strategy
    grid = TimeGrid(20.0, 400)
    e = mc_objective_euler(diffusion_model, constant_policy(u), 1.0, 4000, grid, seed=5)
    x = mc_objective(diffusion_model, u, 1.0, 4000, grid, seed=5)
    assert math.isnan(e.horizon_tail_bound)
    assert abs(e.mean - x.mean) < 4 * math.hypot(e.std_error, x.std_error)
    assert e.n_excluded == 0


def test_tail_bound_covers_truncation(diffusion_model):
    u = solve(diffusion_model).strategy
    full = objective_constant(diffusion_model, u, 1.0)
    for horizon in (5.0, 20.0):
        head = full * (1 - math.exp(-discount_gap(diffusion_model, u) * horizon))
        assert abs(full - head) <= tail_bound(diffusion_model, u, horizon) * (1 + 1e-12)


def test_choose_horizon_monotone_in_delta(diffusion_model):
    u = solve(diffusion_model).strategy
    horizons = [choose_horizon(diffusion_model.replace(delta=d), u, 1e-3) for d in (0.12, 0.15, 0.2, 0.3)]
    assert horizons == sorted(horizons, reverse=True)
    assert all(float(h).is_integer() for h in horizons)


def test_choose_horizon_exact_shift(jump_model):
    u = solve(jump_model).strategy
    t1 = choose_horizon(jump_model, u, 1e-3, granularity=None)
    t2 = choose_horizon(jump_model, u, 0.5e-3, granularity=None)
    assert t2 - t1 == pytest.approx(math.log(2) / discount_gap(jump_model, u), rel=1e-10)
    assert tail_bound(jump_model, u, t1) == pytest.approx(1e-3, rel=1e-10)


def test_choose_horizon_log(jump_model):
    m = jump_model.replace(eta=1.0)
    u = solve(m).strategy
    t = choose_horizon(m, u, 1e-4, granularity=None)
    assert tail_bound(m, u, t) == pytest.approx(1e-4, rel=1e-8)
    with pytest.raises(UsageError):
        choose_horizon(m, u, 0.0)


def test_standard_error_scales(jump_model):
    u = solve(jump_model).strategy
    grid = TimeGrid(10.0, 100)
    small = mc_objective(jump_model, u, 1.0, 5000, grid, seed=21)
    large = mc_objective(jump_model, u, 1.0, 10000, grid, seed=21)
    assert small.std_error / large.std_error == pytest.approx(math.sqrt(2), rel=0.05)


def test_log_riskless_objective(diffusion_model):
    m = diffusion_model.replace(eta=1.0)
    u = ConstantStrategy(0.0, 0.0, m.delta)
    horizon = choose_horizon(m, u, 1e-6)
    est = mc_objective(m, u, 1.0, 10, TimeGrid.from_step(horizon, 0.01), seed=0)
    assert est.std_error == pytest.approx(0.0, abs=1e-12)
    exact = objective_constant(m, u, 1.0)
    assert abs(est.mean - exact) <= est.horizon_tail_bound + 1e-5


def test_mc_small_sample_agrees(jump_model):
    sol = solve(jump_model)
    v = value_function(sol, 1.0)
    horizon = choose_horizon(jump_model, sol.strategy, 1e-4 * abs(v))
    est = mc_objective(jump_model, sol.strategy, 1.0, 10_000, TimeGrid.from_step(horizon, 0.05), seed=7)
    assert abs(est.mean - v) <= 4 * est.std_error + est.horizon_tail_bound
    assert abs(est.quadrature_bias) < 0.1 * est.std_error


def test_invalid_inputs(jump_model):
    u = ConstantStrategy(0.0, 1 / 0.3, 0.1)
    with pytest.raises(DomainError):
        exact_path(jump_model, u, 1.0, TimeGrid(1.0, 10), seed=0)
    with pytest.raises(DomainError):
        exact_path(jump_model, ConstantStrategy(0.0, 1.0, 0.1), -1.0, TimeGrid(1.0, 10), seed=0)


def test_write_paths(tmp_path, jump_model):
    u = solve(jump_model).strategy
    grid = TimeGrid(1.0, 10)
    paths = [exact_path(jump_model, u, 1.0, grid, seed=0, path_index=i) for i in (0, 12)]
    files = write_paths(paths, tmp_path / "out")
    assert [f.name for f in files] == ["path_000000.csv", "path_000012.csv"]
    with files[1].open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time", "wealth", "jumps"]
    assert len(rows) == 12
    assert float(rows[-1][1]) == pytest.approx(paths[1].wealth[-1], rel=1e-11)
