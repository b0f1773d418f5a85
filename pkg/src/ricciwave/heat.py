"""Crank-Nicolson solvers for the coupled backward heat equation.

The equation is ``u_t + Delta_{g(t)} u = -R`` with terminal data ``u(T) = h``,
marched from ``T`` down to ``t0``.  In the elapsed time ``s = T - t`` it reads
``u_s = Delta u + R``, which is what the scheme integrates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DivergenceError, UnsupportedProfileError
from .grid import Grid, SpaceTimeField
from .metrics import get_family, laplace_beltrami, laplacian_matrix
from .profiles import KernelSolution, heat_oracle


@dataclass
class HeatProblem:
    family: object
    h: object
    t0: float
    T: float
    grid: Grid
    dt: float
    bc: str = "auto"  # "auto", "oracle" or "neumann"
    store_every: int = 1


def gaussian_kernel_solution(h, t, x, T: float, n: int = 1):
    """Heat-kernel convolution of ``h`` over elapsed time ``T - t``, in closed form."""
    if np.any(np.asarray(t) > T):
        raise ValueError("kernel solution requires t <= T")
    return KernelSolution(h, T, n).value(t, x)


def _boundary_mask(shape):
    mask = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[axis] = 0
        mask[tuple(idx)] = True
        idx[axis] = -1
        mask[tuple(idx)] = True
    return mask.ravel()


def _resolve_bc(problem, family):
    oracle = heat_oracle(family, problem.h, problem.T)
    if not family.is_flat:
        # pole-excluded sphere grids close with the pole rule; nothing to pin
        return "pole", None
    if problem.bc == "neumann":
        return "neumann", None
    if problem.bc in ("auto", "oracle"):
        if oracle is not None:
            return "pinned", oracle
        if problem.bc == "oracle":
            raise UnsupportedProfileError(f"no oracle to pin boundaries for {problem.h!r}")
        return "neumann", None
    raise ValueError(f"unknown boundary condition {problem.bc!r}")


def solve_backward_heat(problem: HeatProblem) -> SpaceTimeField:
    """March ``u_t + Delta_{g(t)} u = -R`` from ``T`` down to ``t0``.

    Returns the field on ascending times.  Boundary values are pinned to the
    closed-form oracle when one exists (flat families), otherwise zero-Neumann;
    sphere grids use the pole rule.
    """
    family = get_family(problem.family)
    t0, T, grid = float(problem.t0), float(problem.T), problem.grid
    if not 0.0 < t0 < T:
        raise ValueError(f"need 0 < t0 < T, got t0={t0}, T={T}")
    family.check(T)
    family.check(t0)
    if not family.is_flat:
        family.check(T, grid.axes[0])
    if problem.dt <= 0 or problem.dt > (T - t0) / 10.0 + 1e-15:
        raise ValueError("dt must satisfy 0 < dt <= (T - t0) / 10")

    nsteps = int(np.ceil((T - t0) / problem.dt - 1e-9))
    dt = (T - t0) / nsteps
    times_desc = T - dt * np.arange(nsteps + 1)
    times_desc[-1] = t0

    kind, oracle = _resolve_bc(problem, family)
    mesh = grid.mesh()
    u = np.asarray(problem.h(mesh), dtype=float).ravel()
    if not np.all(np.isfinite(u)):
        raise ValueError("terminal data not finite on the grid")

    L0 = laplacian_matrix(family, grid, "pinned" if kind == "pinned" else kind)
    n = u.size
    eye = sp.identity(n, format="csc")
    pinned = _boundary_mask(grid.shape) if kind == "pinned" else None
    if pinned is not None:
        L0 = sp.diags((~pinned).astype(float)) @ L0
        flat_mesh = tuple(m.ravel()[pinned] for m in mesh)

    def curvature(t):
        return np.broadcast_to(family.scalar_curvature(t, mesh), grid.shape).ravel()

    store_every = max(1, int(problem.store_every))
    kept_t = [T]
    kept_u = [u.copy()]
    static = family.is_flat
    lu = splu((eye - 0.5 * dt * L0).tocsc()) if static else None
    for k in range(nsteps):
        t_n, t_next = times_desc[k], times_desc[k + 1]
        s_n = float(family.laplacian_scale(t_n))
        s_next = float(family.laplacian_scale(t_next))
        rhs = u + 0.5 * dt * s_n * (L0 @ u) + 0.5 * dt * (curvature(t_n) + curvature(t_next))
        if pinned is not None:
            rhs[pinned] = oracle.value(t_next, flat_mesh)
        if not static:
            lu = splu((eye - 0.5 * dt * s_next * L0).tocsc())
        u = lu.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise DivergenceError(t_next, "backward heat march")
        if (k + 1) % store_every == 0 or k + 1 == nsteps:
            kept_t.append(t_next)
            kept_u.append(u.copy())

    values = np.array(kept_u[::-1]).reshape((len(kept_u),) + grid.shape)
    return SpaceTimeField(
        np.array(kept_t[::-1]), grid, values, {"dt": dt, "boundary": kind, "family": family.name}
    )


def solve_forward_heat(problem: HeatProblem) -> SpaceTimeField:
    """Solve ``u_t - Delta u = 0`` forward from ``u(T) = h`` on ``[T, t0]`` with ``T < t0 < 0``.

    Implemented by reflecting time, ``t -> -t``, and calling the backward solver.
    Only flat families qualify: the reflection needs ``R = 0`` and a static metric.
    """
    family = get_family(problem.family)
    if not problem.T < problem.t0 < 0.0:
        raise ValueError(f"need T < t0 < 0, got T={problem.T}, t0={problem.t0}")
    if not family.is_flat:
        raise ValueError("forward heat reduction needs a flat static family")
    reflected = HeatProblem(
        family, problem.h, -problem.t0, -problem.T, problem.grid, problem.dt, problem.bc,
        problem.store_every,
    )
    back = solve_backward_heat(reflected)
    meta = dict(back.meta, reflected=True)
    return SpaceTimeField(-back.times[::-1], back.grid, back.values[::-1], meta)


def heat_residual(field: SpaceTimeField, family) -> np.ndarray:
    """Centered-difference residual of ``u_t + Delta u + R`` at interior times and nodes."""
    family = get_family(family)
    t = field.times
    if len(t) < 3:
        raise ValueError("need at least three time levels")
    grid = field.grid
    out = []
    interior = tuple(slice(1, -1) for _ in range(grid.ndim))
    mesh = grid.mesh()
    for k in range(1, len(t) - 1):
        ut = (field.values[k + 1] - field.values[k - 1]) / (t[k + 1] - t[k - 1])
        lap = laplace_beltrami(family, t[k], field.values[k], grid.step, origin=grid.axes[0][0])
        R = family.scalar_curvature(t[k], mesh)
        out.append((ut + lap + R)[interior])
    return np.array(out)
