"""Finite-N wave evolution in radial-in-y coordinates and its slice ``r = sqrt(2Nt)``.

The equation, marched backward from ``t = T``, is

    (2t/N + c) u_tt + (t R / N) u_t - Delta_{g(t)} u - (u_rr + (N-1)/r u_r) = R

on a product grid ``x_grid x r_grid``.  Time stepping is kick-drift-kick
(Stormer-Verlet) with a negative step; the damping term is split so the second
half-kick is solved exactly for the new velocity, which keeps the scheme
explicit in the spatial operator and second order overall.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import DivergenceError, DomainError, UnsupportedProfileError
from .grid import Grid, SpaceTimeField
from .metrics import get_family, laplace_beltrami, laplacian_matrix
from .profiles import Gaussian, KernelSolution, heat_oracle, parse_profile, reference_laplacian
from .stencils import apply_radial, radial_coefficients, radial_laplacian, spectral_bound
from .table import ResultTable

VELOCITY_MODES = ("paper", "heat_compatible", "lift")
PADDING_SLACK = 1.2


@dataclass
class WaveState:
    t: float
    u: np.ndarray  # shape x_grid.shape + (nr,)
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must share a shape")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise DivergenceError(self.t, "non-finite wave state")


@dataclass
class WaveProblem:
    family: object
    N: int
    h: object
    t0: float
    T: float
    x_grid: Grid
    r_grid: np.ndarray
    terminal_velocity_mode: str = "heat_compatible"
    c_shift: float = 0.0
    dt_safety: float = 0.5
    store_every: int = 0  # keep every K-th full level; 0 keeps none
    checkpoints: tuple = ()
    terminal: WaveState | None = field(default=None, repr=False)

    def __post_init__(self):
        self.family = get_family(self.family)
        if isinstance(self.h, str):
            self.h = parse_profile(self.h)
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        if self.N < 2:
            raise ValueError("fiber dimension N must be at least 2")
        if self.terminal_velocity_mode not in VELOCITY_MODES:
            raise ValueError(f"terminal_velocity_mode must be one of {VELOCITY_MODES}")
        if self.c_shift < 0:
            raise ValueError("c_shift must be nonnegative")
        if self.c_shift > 0 and not self.family.is_flat:
            raise ValueError("c_shift > 0 is only defined for flat families")
        if not 0.0 < self.dt_safety < 1.0:
            raise ValueError("dt_safety must lie in (0, 1)")
        if not 0.0 < self.t0 < self.T:
            raise ValueError(f"need 0 < t0 < T, got t0={self.t0}, T={self.T}")
        self.family.check(self.T)
        r = self.r_grid
        if r[0] <= 0 or not r[0] < slice_radius(self.N, self.t0) <= slice_radius(self.N, self.T) < r[-1]:
            raise ValueError(
                f"r grid [{r[0]:.4g}, {r[-1]:.4g}] must strictly contain the slice radii "
                f"[{slice_radius(self.N, self.t0):.4g}, {slice_radius(self.N, self.T):.4g}]"
            )
        if self.terminal is None:
            self.terminal = terminal_state(self)

    @property
    def dr(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    def a(self, t):
        return 2.0 * t / self.N + self.c_shift

    def speed(self, t):
        return 1.0 / np.sqrt(self.a(t))


def slice_radius(N, t):
    return np.sqrt(2.0 * N * np.asarray(t, dtype=float))


def travel_distance(N, t, T, c_shift=0.0):
    """``int_t^T ds / sqrt(2s/N + c)``: how far a signal moves between ``T`` and ``t``."""
    return N * (np.sqrt(2.0 * T / N + c_shift) - np.sqrt(2.0 * t / N + c_shift))


def _lift_terminal(problem):
    oracle = heat_oracle(problem.family, problem.h, problem.T)
    if oracle is None:
        raise UnsupportedProfileError(f"lift mode needs a closed-form heat solution for {problem.h!r}")
    # clamp the lift time inside the closed form's range; the clamp only acts
    # outside the region that can reach the slice curve
    if isinstance(oracle, KernelSolution):
        if isinstance(problem.h, Gaussian):
            cap = problem.T + problem.h.width**2 / 8.0
        else:
            cap = np.inf
    else:
        cap = 0.5 * (problem.T + 0.5)
    tl = np.minimum(problem.r_grid**2 / (2.0 * problem.N), cap)
    mesh = problem.x_grid.mesh()
    ex = tuple(m[..., None] for m in mesh)
    return np.asarray(oracle.value(tl, ex), dtype=float)


def terminal_state(problem: WaveProblem) -> WaveState:
    """``u(T) = h`` (or its lift) and the velocity chosen by ``terminal_velocity_mode``."""
    fam, grid = problem.family, problem.x_grid
    mesh = grid.mesh()
    nr = len(problem.r_grid)
    shape = grid.shape + (nr,)
    mode = problem.terminal_velocity_mode
    R = np.broadcast_to(fam.scalar_curvature(problem.T, mesh), grid.shape)
    if mode == "lift":
        return WaveState(problem.T, _lift_terminal(problem), np.zeros(shape))
    h = np.asarray(problem.h(mesh), dtype=float)
    u = np.broadcast_to(h[..., None], shape).copy()
    if mode == "paper":
        v = -R
    else:
        try:
            lap = reference_laplacian(problem.h, fam, problem.T, mesh)
        except (UnsupportedProfileError, AttributeError):
            origin = None if fam.is_flat else grid.axes[0][0]
            lap = laplace_beltrami(fam, problem.T, h, grid.step, origin=origin)
        v = -lap - R
    v = np.broadcast_to(np.asarray(v)[..., None], shape).copy()
    v[..., 0] = 0.0
    v[..., -1] = 0.0
    return WaveState(problem.T, u, v)


def build_wave_problem(config: Mapping) -> WaveProblem:
    """Size the ``(x, r)`` grids by the causal-padding rule and return the problem.

    Keys: ``family``, ``N``, ``h``, ``t0``, ``T``, ``dx``, ``dr``, ``dt_safety``,
    ``terminal_velocity_mode``, ``c_shift``, ``delta`` (probe margin in t),
    ``x_probe`` (probe half-width), ``sphere_cells``, ``store_every``,
    ``checkpoints``, ``max_cells`` (memory budget).
    """
    cfg = dict(config)
    family = get_family(cfg.get("family", "euclid1"))
    N = int(cfg["N"])
    if N < 2:
        raise ValueError("fiber dimension N must be at least 2")
    t0, T = float(cfg.get("t0", 0.25)), float(cfg.get("T", 1.0))
    family.check(T)
    family.check(t0)
    h = cfg.get("h", "gaussian(0, 1)")
    h = parse_profile(h) if isinstance(h, str) else h
    c_shift = float(cfg.get("c_shift", 0.0))
    dx, dr = float(cfg.get("dx", 0.02)), float(cfg.get("dr", 0.02))
    delta = float(cfg.get("delta", 0.1))
    t_lo = min(t0 + delta, T)
    reach = travel_distance(N, t0, T, c_shift)

    if family.is_flat:
        half = float(cfg.get("x_probe", 2.0)) + PADDING_SLACK * reach
        if isinstance(h, Gaussian):
            center = np.atleast_1d(np.asarray(h.center, dtype=float))
            spread = 6.0 * h.width + 4.0 * np.sqrt(T - t0)
            bounds = [(min(-half, c - spread), max(half, c + spread))
                      for c in np.broadcast_to(center, (family.spatial_dim,))]
        else:
            bounds = [(-half, half)] * family.spatial_dim
        x_grid = Grid.box(bounds, dx)
    else:
        x_grid = Grid.sphere(int(cfg.get("sphere_cells", 64)))

    r_hi = float(slice_radius(N, T)) + PADDING_SLACK * reach + 2.0 * dr
    inner = float(slice_radius(N, t_lo)) - PADDING_SLACK * travel_distance(N, t_lo, T, c_shift)
    r_lo = max(2.0 * dr, 0.8 * inner) if inner > 0 else 2.0 * dr
    r_grid = r_lo + dr * np.arange(int(np.ceil((r_hi - r_lo) / dr)) + 1)

    cells = int(np.prod(x_grid.shape)) * len(r_grid)
    budget = int(cfg.get("max_cells", 20_000_000))
    if cells > budget:
        raise ValueError(
            f"grid needs {cells} cells (r_max = {r_grid[-1]:.4g}) but the budget is {budget}"
        )
    return WaveProblem(
        family=family, N=N, h=h, t0=t0, T=T, x_grid=x_grid, r_grid=r_grid,
        terminal_velocity_mode=cfg.get("terminal_velocity_mode", "heat_compatible"),
        c_shift=c_shift, dt_safety=float(cfg.get("dt_safety", 0.5)),
        store_every=int(cfg.get("store_every", 0)),
        checkpoints=tuple(float(c) for c in cfg.get("checkpoints", ())),
    )


class _Operator:
    """Spatial pieces of the wave operator, assembled once per problem."""

    def __init__(self, problem: WaveProblem):
        fam = problem.family
        self.problem = problem
        bc = "neumann" if fam.is_flat else "onesided"
        self.Lx = laplacian_matrix(fam, problem.x_grid, bc).tocsr()
        self.Lr = radial_laplacian(problem.r_grid, problem.N).tocsr()
        self.lam_x = spectral_bound(self.Lx)
        self.lam_r = spectral_bound(self.Lr)
        self.nx = int(np.prod(problem.x_grid.shape))
        self.nr = len(problem.r_grid)
        # x operator on the flattened (x, r) array, r varying fastest; the radial
        # part is applied in flux form so constants are annihilated exactly
        self.Kx = sp.kron(self.Lx, sp.identity(self.nr), format="csr")
        self.rdn, self.rup = radial_coefficients(problem.r_grid, problem.N)
        self.static = fam.is_flat
        self.mesh = problem.x_grid.mesh()
        self.min_step = min(min(problem.x_grid.steps), problem.dr)

    def curvature(self, t):
        R = self.problem.family.scalar_curvature(t, self.mesh)
        return np.broadcast_to(R, self.problem.x_grid.shape).reshape(self.nx, 1)

    def force(self, t, u):
        """``Delta_{g(t)} u + Delta_r u + R`` with the r-end rows held at zero."""
        s = float(self.problem.family.laplacian_scale(t))
        out = (self.Kx @ u.ravel()).reshape(u.shape)
        if not self.static:
            out *= s
            out += self.curvature(t)
        out += apply_radial(self.rdn, self.rup, u)
        out[:, 0] = 0.0
        out[:, -1] = 0.0
        return out

    def damping(self, t):
        """``t R / N`` as a column (zero in flat families)."""
        return t * self.curvature(t) / self.problem.N

    def time_step(self, t):
        """Largest backward step from ``t`` meeting the Courant rule at ``t - dt``."""
        p = self.problem
        s = float(p.family.laplacian_scale(t))  # the sphere scale grows with t
        lam = s * self.lam_x + self.lam_r
        m = min(self.min_step, 2.0 / np.sqrt(lam)) if lam > 0 else self.min_step
        A = (p.dt_safety * m) ** 2
        dt = -A / p.N + np.sqrt((A / p.N) ** 2 + A * p.a(t))
        if not dt > 0:
            raise ValueError(f"Courant rule gives non-positive dt at t={t}")
        return float(dt)


def step(problem: WaveProblem, state: WaveState, dt: float | None = None, _op=None) -> WaveState:
    """One backward step ``t -> t - dt`` (``dt`` from the Courant rule when omitted)."""
    op = _op or _Operator(problem)
    if dt is None:
        dt = op.time_step(state.t)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.t - dt < problem.t0 - 1e-12:
        raise ValueError(f"step would pass t0: t={state.t}, dt={dt}")
    shape = state.u.shape
    u = state.u.reshape(op.nx, op.nr)
    v = state.v.reshape(op.nx, op.nr)
    hstep = -dt
    t, t1 = state.t, state.t - dt
    a0, a1 = problem.a(t), problem.a(t1)
    if op.static:
        # R = 0: no damping and no source
        v_half = v + (0.5 * hstep / a0) * op.force(t, u)
        u1 = u + hstep * v_half
        v1 = v_half + (0.5 * hstep / a1) * op.force(t1, u1)
    else:
        v_half = v + 0.5 * hstep * (op.force(t, u) - op.damping(t) * v) / a0
        u1 = u + hstep * v_half
        v1 = (v_half + 0.5 * hstep * op.force(t1, u1) / a1) / (1.0 + 0.5 * hstep * op.damping(t1) / a1)
    v1[:, 0] = 0.0
    v1[:, -1] = 0.0
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(v1))):
        raise DivergenceError(t1, "wave march")
    return WaveState(t1, u1.reshape(shape), v1.reshape(shape))


def _cubic_weights(r_grid, radius):
    """Indices and 4-point Lagrange weights for interpolation at ``radius``."""
    r0, dr, n = r_grid[0], r_grid[1] - r_grid[0], len(r_grid)
    pos = (radius - r0) / dr
    i = int(np.clip(np.floor(pos) - 1, 0, n - 4))
    xi = pos - i
    nodes = np.arange(4.0)
    w = np.ones(4)
    for j in range(4):
        for m in range(4):
            if m != j:
                w[j] *= (xi - nodes[m]) / (nodes[j] - nodes[m])
    return slice(i, i + 4), w


def _slice_row(u, r_grid, N, t):
    radius = float(slice_radius(N, t))
    if not r_grid[0] <= radius <= r_grid[-1]:
        raise DomainError("t", t, f"slice radius {radius:.6g} outside [{r_grid[0]:.6g}, {r_grid[-1]:.6g}]")
    idx, w = _cubic_weights(r_grid, radius)
    return u[..., idx] @ w


def slice_hypersurface(field3d: SpaceTimeField, N: int) -> SpaceTimeField:
    """Restrict stored ``(t, x, r)`` levels to ``r = sqrt(2Nt)`` by cubic interpolation in r.

    The last grid axis of ``field3d`` is ``r`` and must be uniform.
    """
    r_grid = np.asarray(field3d.grid.axes[-1], dtype=float)
    if len(r_grid) < 4:
        raise ValueError("need at least 4 radial nodes")
    rows = [_slice_row(level, r_grid, N, t) for t, level in zip(field3d.times, field3d.values)]
    xgrid = Grid(field3d.grid.axes[:-1], field3d.grid.steps[:-1])
    return SpaceTimeField(np.asarray(field3d.times), xgrid, np.array(rows), dict(field3d.meta, N=N))


def solve_backward_wave(problem: WaveProblem) -> SpaceTimeField:
    """March ``T -> t0`` and record the slice row at every step.

    ``meta`` carries ``dt_history``, ``max_abs_u`` and, when ``store_every > 0``,
    ``levels`` (a ``SpaceTimeField`` of full ``(x, r)`` levels).
    """
    op = _Operator(problem)
    state = problem.terminal
    targets = sorted({c for c in problem.checkpoints if problem.t0 < c < problem.T} | {problem.t0},
                     reverse=True)
    times, rows, dts = [state.t], [_slice_row(state.u, problem.r_grid, problem.N, state.t)], []
    max_u = float(np.max(np.abs(state.u)))
    keep_t, keep_u = [state.t], [state.u.copy()]
    K = int(problem.store_every)
    k = 0
    for target in targets:
        while state.t > target + 1e-13:
            dt = op.time_step(state.t)
            if state.t - dt < target + 1e-9 * dt:
                dt = state.t - target
            elif state.t - 2 * dt < target:
                # split the remainder evenly instead of leaving a sliver step
                dt = 0.5 * (state.t - target)
            state = step(problem, state, dt, _op=op)
            if abs(state.t - target) < 1e-12:
                state = WaveState(target, state.u, state.v)
            k += 1
            dts.append(dt)
            times.append(state.t)
            rows.append(_slice_row(state.u, problem.r_grid, problem.N, state.t))
            max_u = max(max_u, float(np.max(np.abs(state.u))))
            if K and k % K == 0:
                keep_t.append(state.t)
                keep_u.append(state.u.copy())
    meta = {"dt_history": np.array(dts), "max_abs_u": max_u, "N": problem.N,
            "family": problem.family.name, "mode": problem.terminal_velocity_mode}
    if K:
        rgrid = Grid(problem.x_grid.axes + (problem.r_grid,), problem.x_grid.steps + (problem.dr,))
        meta["levels"] = SpaceTimeField(np.array(keep_t[::-1]), rgrid, np.array(keep_u[::-1]))
    return SpaceTimeField(np.array(times[::-1]), problem.x_grid, np.array(rows[::-1]), meta)


def slice_error(result: SpaceTimeField, oracle, t_lo: float, t_hi: float, x_probe: float | None = None):
    """Max-abs slice error against ``oracle`` over ``[t_lo, t_hi]`` (and ``|x| <= x_probe``)."""
    sel = (result.times >= t_lo - 1e-12) & (result.times <= t_hi + 1e-12)
    if not np.any(sel):
        raise ValueError("probe window contains no stored time")
    mesh = result.grid.mesh()
    mask = np.ones(result.grid.shape, dtype=bool)
    if x_probe is not None:
        for m in mesh:
            mask &= np.abs(m) <= x_probe + 1e-12
    err = 0.0
    for t, row in zip(result.times[sel], result.values[sel]):
        err = max(err, float(np.max(np.abs(row - oracle.value(t, mesh))[mask])))
    return err


def sweep_oracle(problem: WaveProblem):
    oracle = heat_oracle(problem.family, problem.h, problem.T)
    if oracle is not None:
        return oracle
    from .heat import HeatProblem, solve_backward_heat
    from .lift import SampledField

    ref = solve_backward_heat(HeatProblem(
        problem.family, problem.h, problem.t0, problem.T, problem.x_grid,
        min(1e-3, (problem.T - problem.t0) / 10.0),
    ))
    return SampledField(ref)


def n_sweep(template: Mapping, Ns, delta: float = 0.1, x_probe: float | None = 2.0) -> ResultTable:
    """Solve, slice and compare for each ``N``; columns ``N, e, dt_min, runtime, diverged``.

    ``template`` holds the ``build_wave_problem`` keys except ``N``.  A member
    that diverges is recorded with ``e = nan`` and ``diverged = 1``.
    """
    Ns = [int(n) for n in Ns]
    if any(n < 2 for n in Ns) or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be strictly increasing and >= 2")
    table = ResultTable(["N", "e", "dt_min", "runtime", "diverged"])
    for N in Ns:
        cfg = dict(template, N=N, delta=delta)
        if x_probe is not None:
            cfg["x_probe"] = x_probe
        start = _time.perf_counter()
        problem = build_wave_problem(cfg)
        probe = x_probe if problem.family.is_flat else None
        try:
            result = solve_backward_wave(problem)
            e = slice_error(result, sweep_oracle(problem), problem.t0 + delta, problem.T - delta, probe)
            dt_min, diverged = float(np.min(result.meta["dt_history"])), 0.0
        except DivergenceError:
            e, dt_min, diverged = float("nan"), float("nan"), 1.0
        table.append([N, e, dt_min, _time.perf_counter() - start, diverged])
    return table
