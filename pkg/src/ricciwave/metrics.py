"""Exact Ricci-flow metric families in reduced coordinates.

``euclid1`` / ``euclid2`` are flat static metrics on R^1 / R^2.  ``sphere2`` is
the shrinking round sphere ``g(t) = (1 - 2t) g_unit`` written in the polar angle
``theta`` for axisymmetric fields (the azimuth is integrated out, so only the
``theta theta`` component appears in the reduced metric).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .grid import Grid
from .stencils import apply_along, first_difference, second_difference

_INF = float("inf")


@dataclass(frozen=True)
class MetricFamily:
    name: str
    spatial_dim: int
    time_domain: tuple[float, float]
    x_domain: tuple[tuple[float, float], ...]

    @property
    def is_flat(self) -> bool:
        return self.name.startswith("euclid")

    def check(self, t, x=None) -> None:
        t_lo, t_hi = self.time_domain
        t_arr = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(t_arr)) or np.any(t_arr < t_lo) or np.any(t_arr >= t_hi):
            raise DomainError("t", t, f"[{t_lo}, {t_hi})")
        if x is None:
            return
        coords = as_coords(x)
        if len(coords) != self.spatial_dim:
            raise ValueError(f"{self.name} expects {self.spatial_dim} spatial coordinates")
        names = ("theta",) if self.name == "sphere2" else tuple(f"x{i + 1}" for i in range(self.spatial_dim))
        for name, xi, (lo, hi) in zip(names, coords, self.x_domain):
            xi = np.asarray(xi, dtype=float)
            if not np.all(np.isfinite(xi)) or np.any(xi <= lo) or np.any(xi >= hi):
                bad = xi[~((xi > lo) & (xi < hi))] if xi.ndim else xi
                raise DomainError(name, np.ravel(bad)[0] if np.size(bad) else xi, f"({lo}, {hi})")

    def scale(self, t):
        """Conformal factor ``a(t)`` with ``g(t) = a(t) g(0)``."""
        if self.is_flat:
            return np.ones_like(np.asarray(t, dtype=float))
        return 1.0 - 2.0 * np.asarray(t, dtype=float)

    def laplacian_scale(self, t):
        """``Delta_{g(t)} = laplacian_scale(t) * Delta_{g(0)}``."""
        return 1.0 / self.scale(t)

    def scalar_curvature(self, t, x=None):
        t = np.asarray(t, dtype=float)
        if x is not None:
            t = np.broadcast_to(t, np.broadcast_shapes(t.shape, *(np.shape(c) for c in as_coords(x))))
        if self.is_flat:
            return np.zeros_like(t, dtype=float)
        return 2.0 / (1.0 - 2.0 * t)

    def vol_weight(self, t, x):
        """Riemannian volume density in reduced coordinates."""
        coords = as_coords(x)
        if self.is_flat:
            return np.ones(np.broadcast_shapes(*(np.shape(c) for c in coords)))
        return (1.0 - 2.0 * np.asarray(t)) * np.sin(coords[0])


FAMILIES = {
    "euclid1": MetricFamily("euclid1", 1, (-_INF, _INF), ((-_INF, _INF),)),
    "euclid2": MetricFamily("euclid2", 2, (-_INF, _INF), ((-_INF, _INF), (-_INF, _INF))),
    "sphere2": MetricFamily("sphere2", 1, (-_INF, 0.5), ((0.0, np.pi),)),
}


def get_family(name) -> MetricFamily:
    if isinstance(name, MetricFamily):
        return name
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown metric family {name!r}; choose from {sorted(FAMILIES)}") from None


def as_coords(x) -> tuple:
    """Normalise a point or coordinate arrays to a tuple of per-axis arrays."""
    if isinstance(x, (tuple, list)):
        return tuple(x)
    return (x,)


@dataclass(frozen=True)
class MetricSample:
    g_inv: np.ndarray
    R: float
    dginv_dt: np.ndarray
    dginv_dx: np.ndarray  # dginv_dx[k] = d g^{ij} / d x^k
    tr_gdot: float
    vol_weight: float


def metric_at(family, t: float, x) -> MetricSample:
    """All closed-form metric quantities of ``family`` at ``(t, x)``."""
    family = get_family(family)
    coords = tuple(float(c) for c in np.ravel(np.asarray(as_coords(x), dtype=float)))
    family.check(t, coords)
    n = family.spatial_dim
    if family.is_flat:
        return MetricSample(
            g_inv=np.eye(n),
            R=0.0,
            dginv_dt=np.zeros((n, n)),
            dginv_dx=np.zeros((n, n, n)),
            tr_gdot=0.0,
            vol_weight=1.0,
        )
    a = 1.0 - 2.0 * t
    R = 2.0 / a
    return MetricSample(
        g_inv=np.array([[1.0 / a]]),
        R=R,
        dginv_dt=np.array([[2.0 / a**2]]),
        dginv_dx=np.zeros((1, 1, 1)),
        # trace of g^{-1} dg/dt over both sphere directions: -2 * 2 / a
        tr_gdot=-2.0 * R,
        vol_weight=a * np.sin(coords[0]),
    )


def _sphere_ends(theta: np.ndarray, step: float):
    tol = 1e-9 * max(1.0, step)
    left = "pole" if abs(theta[0] - step) < tol else "onesided"
    right = "pole" if abs(theta[-1] - (np.pi - step)) < tol else "onesided"
    return left, right


def axis_operator(family, points: np.ndarray, step: float, bc: str = "onesided"):
    """Sparse reference Laplacian along one axis: ``Delta_{g(t)} = laplacian_scale(t) * L``.

    For ``sphere2`` this is ``d2/dtheta2 + cot(theta) d/dtheta`` and the ends use
    the pole rule when the grid stops one cell short of a pole.
    """
    family = get_family(family)
    n = len(points)
    if family.is_flat:
        return second_difference(n, step, bc, bc)
    left, right = _sphere_ends(points, step)
    if bc == "pinned":
        left = right = "pinned"
    d2 = second_difference(n, step, left, right)
    d1 = first_difference(n, step, left, right)
    return (d2 + sp.diags(1.0 / np.tan(points)) @ d1).tocsr()


def laplacian_matrix(family, grid: Grid, bc: str = "onesided"):
    """Reference Laplacian on the flattened grid (Kronecker sum over axes)."""
    ops = [axis_operator(family, ax, h, bc) for ax, h in zip(grid.axes, grid.steps)]
    eyes = [sp.identity(len(ax), format="csr") for ax in grid.axes]
    total = None
    for k, op in enumerate(ops):
        factors = eyes[:k] + [op] + eyes[k + 1:]
        term = reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)
        total = term if total is None else total + term
    return total.tocsr()


def laplace_beltrami(family, t: float, field, spacing: float, origin: float | None = None):
    """Second-order Laplace-Beltrami of a uniformly sampled field.

    ``field`` has one axis per spatial dimension.  For ``sphere2`` the nodes are
    ``origin + k * spacing`` (default origin one cell off the north pole); ends
    that sit one cell from a pole use the pole rule, other ends one-sided stencils.
    """
    family = get_family(family)
    field = np.asarray(field, dtype=float)
    if field.ndim != family.spatial_dim:
        raise ValueError(f"{family.name} expects a {family.spatial_dim}-d field")
    if min(field.shape) < 3:
        raise ValueError("grid shorter than 3 points")
    if np.isnan(field).any():
        raise ValueError("field contains NaN")
    family.check(t)
    out = np.zeros_like(field)
    for axis, n in enumerate(field.shape):
        if family.is_flat:
            points = spacing * np.arange(n)
        else:
            start = spacing if origin is None else origin
            points = start + spacing * np.arange(n)
            family.check(t, points)
        out += apply_along(axis_operator(family, points, spacing), field, axis)
    return out * float(family.laplacian_scale(t))
