import numpy as np
import pytest

from ricciwave.errors import DivergenceError, DomainError
from ricciwave.grid import Grid, SpaceTimeField
from ricciwave.profiles import Constant, Gaussian, KernelSolution
from ricciwave import wave
from ricciwave.wave import (WaveProblem, WaveState, build_wave_problem, n_sweep, slice_hypersurface,
                            solve_backward_wave, step, travel_distance)

BASE = dict(family="euclid1", h="gaussian(0, 1)", t0=0.25, T=1.0, dx=0.05, dr=0.05)


def test_build_sizes_r_grid_around_slice_curve():
    p = build_wave_problem(dict(BASE, N=8))
    assert p.r_grid[0] <= 2.0
    assert p.r_grid[-1] >= 4.0 + 1.2 * travel_distance(8, 0.25, 1.0)
    assert p.r_grid[0] > 0


def test_paper_velocity_is_zero_on_flat_space():
    p = build_wave_problem(dict(BASE, N=8, terminal_velocity_mode="paper"))
    assert np.all(p.terminal.v == 0.0)


def test_heat_compatible_velocity_is_minus_second_derivative():
    p = build_wave_problem(dict(BASE, N=8))
    x = p.x_grid.axes[0]
    expect = -(4 * x**2 - 2) * np.exp(-x**2)
    assert np.allclose(p.terminal.v[:, 1:-1], expect[:, None], atol=1e-14)
    assert np.allclose(p.terminal.u, np.exp(-x**2)[:, None])


def test_sphere_paper_velocity_is_minus_curvature():
    p = build_wave_problem(dict(family="sphere2", h="constant(1)", t0=0.1, T=0.3, N=8,
                                terminal_velocity_mode="paper", sphere_cells=16))
    assert np.allclose(p.terminal.v[:, 1:-1], -2.0 / 0.4)


def test_step_trivial_states():
    p = build_wave_problem(dict(BASE, N=4, h="constant(0)"))
    zero = WaveState(p.T, np.zeros_like(p.terminal.u), np.zeros_like(p.terminal.v))
    out = step(p, zero)
    assert np.all(out.u == 0) and np.all(out.v == 0) and out.t < p.T
    const = WaveState(p.T, np.full_like(p.terminal.u, 3.0), np.zeros_like(p.terminal.v))
    out = step(p, const)
    assert np.allclose(out.u, 3.0, atol=1e-13) and np.allclose(out.v, 0.0, atol=1e-13)


def test_step_rejects_overshoot():
    p = build_wave_problem(dict(BASE, N=4))
    with pytest.raises(ValueError):
        step(p, p.terminal, dt=1.0)


def test_constant_data_preserved_at_every_level():
    p = build_wave_problem(dict(BASE, N=8, h="constant(2.5)", store_every=1))
    res = solve_backward_wave(p)
    assert np.max(np.abs(res.meta["levels"].values - 2.5)) < 1e-12
    assert np.max(np.abs(res.values - 2.5)) < 1e-12


def test_courant_rule_is_honoured():
    p = build_wave_problem(dict(BASE, N=16))
    res = solve_backward_wave(p)
    t_desc = res.times[::-1]
    dts = res.meta["dt_history"]
    assert np.allclose(t_desc[:-1] - t_desc[1:], dts)
    speed_after = np.sqrt(16 / (2 * t_desc[1:]))
    assert np.all(dts * speed_after <= p.dt_safety * min(0.05, p.dr) * (1 + 1e-12))


def test_sphere_courant_rule_includes_curvature_operator():
    p = build_wave_problem(dict(family="sphere2", h="constant(1)", t0=0.1, T=0.3, N=8, sphere_cells=64))
    res = solve_backward_wave(p)
    assert np.all(np.isfinite(res.values))
    t_desc = res.times[::-1]
    assert np.all(res.meta["dt_history"] * np.sqrt(8 / (2 * t_desc[1:])) <= 0.5 * p.dr * (1 + 1e-12))


def _linear_levels(N, times, r):
    grid = Grid((np.array([0.0, 1.0]), r), (1.0, r[1] - r[0]))
    vals = np.broadcast_to(r, (len(times), 2, len(r))).copy()
    return SpaceTimeField(np.asarray(times), grid, vals)


def test_slice_reads_expected_radius():
    r = np.linspace(0.5, 4.0, 36)
    out = slice_hypersurface(_linear_levels(2, [1.0, 0.25], r), 2)
    assert np.allclose(out.values[0], 2.0) and np.allclose(out.values[1], 1.0)


def test_slice_outside_grid_names_time():
    r = np.linspace(0.5, 1.5, 11)
    with pytest.raises(DomainError) as exc:
        slice_hypersurface(_linear_levels(2, [1.0], r), 2)
    assert exc.value.coordinate == "t"


def test_slicing_lifted_levels_recovers_base():
    w = KernelSolution(Gaussian(), 1.0)
    N = 8
    times = np.linspace(0.25, 1.0, 7)
    x = np.linspace(-2, 2, 9)
    r = np.arange(1.0, 4.3, 0.01)
    vals = np.array([w.value(r[None, :] ** 2 / (2 * N), x[:, None]) for _ in times])
    grid = Grid((x, r), (0.5, 0.01))
    out = slice_hypersurface(SpaceTimeField(times, grid, vals), N)
    exact = w.value(times[:, None], x[None, :])
    assert np.max(np.abs(out.values - exact)) < 1e-8


def test_problem_validation():
    p = build_wave_problem(dict(BASE, N=4))
    kw = dict(family="euclid1", h=Gaussian(), t0=0.25, T=1.0, x_grid=p.x_grid, r_grid=p.r_grid)
    with pytest.raises(ValueError):
        WaveProblem(N=1, **kw)
    with pytest.raises(ValueError):
        WaveProblem(N=4, terminal_velocity_mode="other", **kw)
    with pytest.raises(ValueError):
        WaveProblem(N=4, dt_safety=1.5, **kw)
    with pytest.raises(ValueError):
        WaveProblem(N=64, **kw)  # slice curve leaves the r grid
    with pytest.raises(ValueError, match="c_shift"):
        build_wave_problem(dict(family="sphere2", h="constant(1)", t0=0.1, T=0.3, N=4, c_shift=0.1))


def test_memory_budget_reports_required_radius():
    with pytest.raises(ValueError, match="r_max"):
        build_wave_problem(dict(BASE, N=64, max_cells=1000))


def test_c_shift_variant_runs_and_slows_waves():
    p0 = build_wave_problem(dict(BASE, N=8))
    p1 = build_wave_problem(dict(BASE, N=8, c_shift=0.5))
    assert p1.r_grid[-1] < p0.r_grid[-1]
    res = solve_backward_wave(p1)
    assert np.all(np.isfinite(res.values)) and res.times[0] == 0.25


def test_short_horizon_self_convergence():
    cps = [0.9, 0.95]
    runs = []
    for d in (0.08, 0.04, 0.01):
        p = build_wave_problem(dict(BASE, N=4, t0=0.85, dx=d, dr=d, checkpoints=cps))
        res = solve_backward_wave(p)
        x = res.grid.axes[0]
        rows = [res.values[np.argmin(np.abs(res.times - c))] for c in cps]
        runs.append((x, np.array(rows)))
    xc = runs[0][0][np.abs(runs[0][0]) <= 2]
    vals = [np.array([np.interp(xc, x, row) for row in rows]) for x, rows in runs]
    coarse = np.max(np.abs(vals[0] - vals[2]))
    fine = np.max(np.abs(vals[1] - vals[2]))
    assert coarse / fine >= 3.5


def test_sweep_with_constant_data_is_exact():
    table = n_sweep(dict(BASE, h="constant(1)", dx=0.1, dr=0.1), [4, 8, 16])
    assert np.all(table.column("e") < 1e-10)
    assert table.columns == ["N", "e", "dt_min", "runtime", "diverged"]


def test_sweep_validation():
    with pytest.raises(ValueError):
        n_sweep(BASE, [8, 8])
    with pytest.raises(ValueError):
        n_sweep(BASE, [1, 4])


def test_sweep_flags_divergence_and_continues(monkeypatch):
    real = wave.solve_backward_wave

    def flaky(problem):
        if problem.N == 8:
            raise DivergenceError(0.5, "forced")
        return real(problem)

    monkeypatch.setattr(wave, "solve_backward_wave", flaky)
    table = n_sweep(dict(BASE, h="constant(1)", dx=0.1, dr=0.1), [4, 8, 16])
    assert list(table.column("diverged")) == [0, 1, 0]
    assert np.isnan(table.column("e")[1]) and np.isfinite(table.column("e")[2])


def test_slice_lift_consistency_bound():
    """Lift-initialised runs should drift from the heat solution by at most C/N.

    C is measured at the smallest N and then held fixed.  Known to fail: the
    drift grows like (T - t)^2 with an N-independent leading coefficient.
    """
    cfg = dict(BASE, dx=0.04, dr=0.04, terminal_velocity_mode="lift")
    table = n_sweep(cfg, [8, 16, 32])
    e = table.column("e")
    C = 8 * e[0]
    assert np.all(e[1:] <= C / table.column("N")[1:])
