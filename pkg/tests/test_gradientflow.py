import numpy as np
import pytest

from ricciwave.grid import Grid
from ricciwave.gradientflow import (CoupledFlowState, coupled_flow, f_evolution, f_functional,
                                    f_series, monotonicity_check, reference_measure)


def test_flat_f_is_zero():
    f = f_evolution("euclid1", 1.0, Grid.line(-2, 2, 0.1), 0.5, 1e-2)
    assert np.all(f.values == 0.0)


def test_sphere_f_closed_form_and_terminal_row():
    T = 0.3
    f = f_evolution("sphere2", T, Grid.sphere(64), 0.1, 1e-3)
    assert np.all(f.values[-1] == 0.0)
    exact = np.log((1 - 2 * f.times) / (1 - 2 * T))
    assert np.max(np.abs(f.values - exact[:, None])) < 1e-5


def test_f_evolution_rejects_other_families():
    with pytest.raises(ValueError):
        f_evolution("euclid2", 1.0, Grid.box([(0, 1), (0, 1)], 0.5), 0.5, 1e-2)


def test_functional_examples():
    g = Grid.line(-1, 1, 0.1)
    dm = reference_measure("euclid1", g, 1.0)
    assert f_functional("euclid1", np.full(g.shape, 3.0), 0.5, dm, g) == 0.0
    s = Grid.sphere(2048)
    T, t = 0.2, 0.1
    dm = reference_measure("sphere2", s, T)
    F = f_functional("sphere2", np.zeros(s.shape), t, dm, s)
    assert np.isclose(F, 8 * np.pi * (1 - 2 * T) / (1 - 2 * t), rtol=1e-6)
    f = np.cos(s.axes[0])
    assert np.isclose(f_functional("sphere2", f + 4.0, t, dm, s), f_functional("sphere2", f, t, dm, s),
                      rtol=1e-14)


def test_functional_gradient_term():
    g = Grid.line(0, 1, 0.01)
    dm = np.ones(g.shape)
    # int_0^1 (2x)^2 dx = 4/3
    assert np.isclose(f_functional("euclid1", g.axes[0] ** 2, 0.0, dm, g), 4 / 3, rtol=1e-4)
    with pytest.raises(ValueError):
        f_functional("euclid1", np.zeros(5), 0.0, dm, g)


def test_flat_monotonicity_is_trivial():
    st = coupled_flow("euclid1", 1.0, 0.5, Grid.line(-2, 2, 0.1), 1e-2)
    lhs, rhs, drift = monotonicity_check(st)
    assert np.all(lhs == 0) and np.all(rhs == 0) and drift == 0.0


def test_sphere_monotonicity_coarse():
    T = 0.2
    st = coupled_flow("sphere2", T, 0.1, Grid.sphere(512), 1e-4)
    lhs, rhs, drift = monotonicity_check(st)
    t = st.f.times[1:-1]
    exact = 16 * np.pi * (1 - 2 * T) / (1 - 2 * t) ** 2
    assert np.max(np.abs(rhs / exact - 1)) < 1e-5
    assert np.max(np.abs(lhs / exact - 1)) < 1e-5
    assert np.all(np.diff(f_series(st)) > 0)
    assert drift < 1e-8


def test_f_time_derivative_is_minus_curvature():
    st = coupled_flow("sphere2", 0.3, 0.1, Grid.sphere(32), 1e-3)
    t, f = st.f.times, st.f.values[:, 0]
    ft = (f[2:] - f[:-2]) / (t[2:] - t[:-2])
    assert np.max(np.abs(ft + 2 / (1 - 2 * t[1:-1]))) < 1e-4


def test_state_requires_terminal_normalisation():
    st = coupled_flow("sphere2", 0.3, 0.1, Grid.sphere(16), 1e-2)
    bad = st.f.values.copy()
    bad[-1] = 1.0
    from ricciwave.grid import SpaceTimeField
    with pytest.raises(ValueError):
        CoupledFlowState("sphere2", SpaceTimeField(st.f.times, st.f.grid, bad), 0.3, st.dm_ref)
