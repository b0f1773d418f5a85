"""The coupled potential ``f``, the F-functional and its monotonicity along Ricci flow.

``f`` is the Radon-Nikodym potential of a fixed measure, ``dm = e^{-f} dmu(t)``,
normalised by ``f(T) = 0``; it evolves by ``f_t = -R - Delta_{g(t)} f``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, SpaceTimeField
from .heat import HeatProblem, solve_backward_heat
from .metrics import get_family
from .profiles import Constant

FAMILIES = ("euclid1", "sphere2")


@dataclass
class CoupledFlowState:
    family: object
    f: SpaceTimeField
    T: float
    dm_ref: np.ndarray

    def __post_init__(self):
        self.family = get_family(self.family)
        if not np.isclose(self.f.times[-1], self.T, rtol=0, atol=1e-12):
            raise ValueError("the last stored level must sit at T")
        if np.any(self.f.values[-1] != 0.0):
            raise ValueError("f must vanish at T")


def f_evolution(family, T: float, grid: Grid, t0: float, dt: float) -> SpaceTimeField:
    """Solve ``f_t + Delta_{g(t)} f = -R`` backward from ``f(T) = 0``."""
    family = get_family(family)
    if family.name not in FAMILIES:
        raise ValueError(f"f_evolution supports {FAMILIES}, got {family.name!r}")
    field = solve_backward_heat(HeatProblem(family, Constant(0.0), t0, T, grid, dt))
    values = field.values.copy()
    values[-1] = 0.0
    return SpaceTimeField(field.times, grid, values, field.meta)


def _weights(grid: Grid, family) -> np.ndarray:
    """Trapezoid weights for a 1-d grid.

    A sphere grid that stops one cell short of each pole is closed with pole
    nodes of zero weight (the density carries ``sin(theta)``), which leaves
    every stored node with the full cell width.  Sphere weights also carry the
    ``2 pi`` of the suppressed azimuthal angle.
    """
    if grid.ndim != 1:
        raise ValueError("quadrature is implemented on 1-d reduced grids")
    x, h = grid.axes[0], grid.steps[0]
    w = np.full(len(x), h)
    pole_closed = abs(x[0] - h) < 1e-9 * h and abs(x[-1] - (np.pi - h)) < 1e-9 * h
    if not pole_closed:
        w[0] = w[-1] = 0.5 * h
    if not get_family(family).is_flat:
        w *= 2.0 * np.pi
    return w


def reference_measure(family, grid: Grid, T: float) -> np.ndarray:
    """``dm_ref`` density on the grid: the volume weight at ``T``."""
    family = get_family(family)
    return np.asarray(family.vol_weight(T, grid.mesh()), dtype=float)


def _grad_sq(family, f_level, t, grid):
    if f_level.shape != grid.shape:
        raise ValueError(f"f has shape {f_level.shape}, grid has {grid.shape}")
    df = np.gradient(f_level, grid.steps[0], edge_order=2)
    return df**2 / family.scale(t)


def f_functional(family, f_level, t: float, dm_ref, grid: Grid) -> float:
    """``F = int (|grad f|^2_g + R) dm`` by the trapezoid rule against the fixed ``dm_ref``."""
    family = get_family(family)
    f_level = np.asarray(f_level, dtype=float)
    dm_ref = np.asarray(dm_ref, dtype=float)
    if dm_ref.shape != grid.shape:
        raise ValueError("dm_ref does not match the grid")
    integrand = _grad_sq(family, f_level, t, grid) + family.scalar_curvature(t, grid.mesh())
    val = float(np.sum(integrand * dm_ref * _weights(grid, family)))
    if not np.isfinite(val):
        raise ArithmeticError(f"non-finite F at t={t}")
    return val


def ricci_hess_sq(family, f_level, t: float, grid: Grid) -> np.ndarray:
    """``|Ric + Hess f|^2_g`` in an orthonormal frame."""
    family = get_family(family)
    if family.is_flat:
        d2 = np.gradient(np.gradient(f_level, grid.steps[0], edge_order=2), grid.steps[0], edge_order=2)
        return d2**2
    a = float(family.scale(t))
    theta = grid.axes[0]
    h = grid.steps[0]
    f1 = np.gradient(f_level, h, edge_order=2)
    f2 = np.gradient(f1, h, edge_order=2)
    K = 1.0 / a
    return (K + f2 / a) ** 2 + (K + f1 / (np.tan(theta) * a)) ** 2


def coupled_flow(family, T: float, t0: float, grid: Grid, dt: float) -> CoupledFlowState:
    family = get_family(family)
    f = f_evolution(family, T, grid, t0, dt)
    return CoupledFlowState(family, f, T, reference_measure(family, grid, T))


def f_series(state: CoupledFlowState) -> np.ndarray:
    fam, grid = state.family, state.f.grid
    return np.array([f_functional(fam, lvl, t, state.dm_ref, grid)
                     for t, lvl in zip(state.f.times, state.f.values)])


def monotonicity_check(state: CoupledFlowState):
    """``(lhs, rhs, rn_drift)`` on the interior stored times ``state.f.times[1:-1]``.

    ``lhs`` is the centered difference of F, ``rhs = 2 int |Ric + Hess f|^2 dm``
    and ``rn_drift`` the largest relative change of ``int e^{-f} dmu(t)``.
    """
    fam, field = state.family, state.f
    times, grid = field.times, field.grid
    if len(times) < 3:
        raise ValueError("need at least three stored levels")
    F = f_series(state)
    lhs = (F[2:] - F[:-2]) / (times[2:] - times[:-2])
    w = _weights(grid, fam)
    rhs = np.array([2.0 * np.sum(ricci_hess_sq(fam, lvl, t, grid) * state.dm_ref * w)
                    for t, lvl in zip(times[1:-1], field.values[1:-1])])
    mass = np.array([np.sum(np.exp(-lvl) * fam.vol_weight(t, grid.mesh()) * w)
                     for t, lvl in zip(times, field.values)])
    rn_drift = float(np.max(np.abs(mass / mass[-1] - 1.0)))
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs)) and np.isfinite(rn_drift)):
        raise ArithmeticError("non-finite quadrature in the monotonicity check")
    return lhs, rhs, rn_drift
