"""The radial lift ``u~(x, y) = w(|y|^2 / 2N, x)`` and its almost-harmonicity."""
from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import Grid, SpaceTimeField
from .metrics import as_coords


class SampledField:
    """Cubic interpolation of a ``SpaceTimeField`` in ``(t, x)``."""

    def __init__(self, field: SpaceTimeField):
        self.field = field
        self._interp = RegularGridInterpolator(
            (field.times, *field.grid.axes), field.values, method="cubic"
        )

    def value(self, t, x):
        coords = as_coords(x)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(t.shape, *(np.shape(c) for c in coords))
        pts = np.stack([np.broadcast_to(t, shape).ravel()]
                       + [np.broadcast_to(c, shape).ravel() for c in coords], axis=-1)
        return self._interp(pts).reshape(shape)

    __call__ = value


class LiftedField:
    """``u~(x, r) = w(r^2 / (2N), x)``: radial in ``y`` by construction."""

    def __init__(self, base, N: int):
        if N < 1:
            raise ValueError("fiber dimension N must be positive")
        if isinstance(base, SpaceTimeField):
            base = SampledField(base)
        self.base = base
        self.N = int(N)

    def time_of(self, r):
        return np.asarray(r, dtype=float) ** 2 / (2.0 * self.N)

    def radius_of(self, t):
        return np.sqrt(2.0 * self.N * np.asarray(t, dtype=float))

    def __call__(self, x, r):
        return self.base.value(self.time_of(r), x)

    def at_point(self, x, y):
        """Evaluate at a full fiber point ``y`` (last axis of length ``N``)."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.N:
            raise ValueError(f"y must have {self.N} components")
        return self(x, np.linalg.norm(y, axis=-1))

    def slice(self, t, x):
        return self(x, self.radius_of(t))


def _radial_derivatives(w, N, t, x):
    r = np.sqrt(2.0 * N * t)
    wt = w.d_t(t, x)
    wtt = w.d_tt(t, x)
    u_r = (r / N) * wt
    u_rr = wt / N + (r / N) ** 2 * wtt
    return r, u_r, u_rr, wt, wtt


def dy_laplacian_of_lift(w, N: int, t, x):
    """Both sides of ``Delta_y u~ = w_t + (2t/N) w_tt`` on ``r = sqrt(2Nt)``.

    ``lhs`` is the radial Laplacian ``u~_rr + (N-1)/r u~_r`` built from the
    chain rule in ``r``; ``rhs`` is assembled from time derivatives of ``w``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("lift Laplacian needs t > 0 (r = 0 is singular)")
    r, u_r, u_rr, wt, wtt = _radial_derivatives(w, N, t, x)
    lhs = u_rr + (N - 1) / r * u_r
    rhs = wt + (2.0 * t / N) * wtt
    return lhs, rhs


def almost_harmonic_residual(w, N: int, times, grid: Grid, heat_tol: float = 1e-9) -> SpaceTimeField:
    """Full ``(x, y)`` Laplacian of the lift of a flat heat solution, sampled on ``times x grid``.

    Equals ``(2t/N) w_tt`` pointwise when ``w_t + Delta_x w = 0``; the expected
    field is returned in ``meta["expected"]``.
    """
    times = np.asarray(times, dtype=float)
    tt = times.reshape((-1,) + (1,) * grid.ndim)
    mesh = tuple(m[None] for m in grid.mesh())
    heat = w.d_t(tt, mesh) + w.lap_x(tt, mesh)
    scale = max(1.0, float(np.max(np.abs(w.d_t(tt, mesh)))))
    if np.max(np.abs(heat)) > heat_tol * scale:
        raise ValueError(
            f"base field is not a heat solution: max |w_t + Delta w| = {np.max(np.abs(heat)):.3e}"
        )
    lhs, _ = dy_laplacian_of_lift(w, N, tt, mesh)
    resid = w.lap_x(tt, mesh) + lhs
    expected = (2.0 * tt / N) * w.d_tt(tt, mesh)
    shape = (len(times),) + grid.shape
    return SpaceTimeField(
        times, grid, np.broadcast_to(resid, shape).copy(),
        {"N": N, "expected": np.broadcast_to(expected, shape).copy()},
    )


def _sphere_nodes(N: int, quadrature_points: int):
    if N == 2:
        phi = 2.0 * np.pi * np.arange(quadrature_points) / quadrature_points
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return nodes, np.full(len(phi), 1.0 / len(phi))
    m = int(np.ceil(np.sqrt(quadrature_points / 2.0)))
    z, wz = np.polynomial.legendre.leggauss(m)
    phi = 2.0 * np.pi * np.arange(2 * m) / (2 * m)
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1.0 - zz**2)
    nodes = np.stack([s * np.cos(pp), s * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    weights = np.repeat(wz / 2.0, 2 * m) / (2 * m)
    return nodes, weights


def symmetrize_small_N(f, N: int, quadrature_points: int):
    """Average of ``f`` over ``SO(N)`` orbits (spheres ``|y| = r``) for ``N`` in {2, 3}.

    ``f`` maps arrays of shape ``(..., N)`` to ``(...)``.  Returns a vectorised
    radial profile ``r -> mean of f on the sphere of radius r``.  ``N = 2`` uses
    the uniform rule on the circle; ``N = 3`` a Gauss-Legendre x uniform product
    rule with at least ``quadrature_points`` nodes.
    """
    if N not in (2, 3):
        raise ValueError("rotational averaging is implemented for N = 2 or 3 only")
    if quadrature_points < 8:
        raise ValueError("quadrature_points must be at least 8")
    nodes, weights = _sphere_nodes(N, quadrature_points)

    def profile(r):
        r = np.asarray(r, dtype=float)
        pts = r[..., None, None] * nodes
        return np.sum(np.asarray(f(pts)) * weights, axis=-1)

    profile.nodes = nodes
    profile.weights = weights
    return profile
