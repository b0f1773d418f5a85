"""Sparse second-order finite-difference operators on uniform 1-D grids.

Boundary kinds for the end rows:

``"pinned"``    row left empty; the caller overwrites the boundary value.
``"neumann"``   zero-slope mirror ghost ``u[-1] = u[1]``.
``"onesided"``  second-order one-sided stencil.
``"pole"``      even reflection through a pole one cell beyond the end node;
                the pole value is extrapolated as ``(4 u[0] - u[1]) / 3``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

BOUNDARY_KINDS = ("pinned", "neumann", "onesided", "pole")

_GHOSTS = {
    "neumann": {1: 1.0},
    "pole": {0: 4.0 / 3.0, 1: -1.0 / 3.0},
}
_D2_ONESIDED = {0: 2.0, 1: -5.0, 2: 4.0, 3: -1.0}
_D1_ONESIDED = {0: -1.5, 1: 2.0, 2: -0.5}


def _check(n, left, right):
    if n < 3:
        raise ValueError("grid shorter than 3 points")
    for kind in (left, right):
        if kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {kind!r}")


def second_difference(n: int, h: float, left: str = "onesided", right: str = "onesided"):
    """Matrix of ``u''`` on ``n`` nodes with spacing ``h``."""
    _check(n, left, right)
    m = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        m[i, i - 1] = 1.0
        m[i, i] = -2.0
        m[i, i + 1] = 1.0
    for end, kind, sign in ((0, left, 1), (n - 1, right, -1)):
        if kind == "pinned":
            continue
        if kind == "onesided":
            for off, c in _D2_ONESIDED.items():
                m[end, end + sign * off] += c
            continue
        m[end, end] += -2.0
        m[end, end + sign] += 1.0
        for k, g in _GHOSTS[kind].items():
            m[end, end + sign * k] += g
    return m.tocsr() / h**2


def first_difference(n: int, h: float, left: str = "onesided", right: str = "onesided"):
    """Matrix of ``u'`` on ``n`` nodes with spacing ``h``.

    Mirror ghosts sit on the far side of each end, so the right end sees them
    with the opposite orientation.
    """
    _check(n, left, right)
    m = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        m[i, i - 1] = -0.5
        m[i, i + 1] = 0.5
    for end, kind, sign in ((0, left, 1), (n - 1, right, -1)):
        if kind == "pinned":
            continue
        if kind == "onesided":
            for off, c in _D1_ONESIDED.items():
                m[end, end + sign * off] += sign * c
            continue
        m[end, end + sign] += 0.5 * sign
        for k, g in _GHOSTS[kind].items():
            m[end, end + sign * k] += -0.5 * sign * g
    return m.tocsr() / h


def radial_coefficients(r: np.ndarray, N: int):
    """Lower and upper flux weights ``(dn, up)`` of the radial operator on interior nodes.

    Fluxes through the faces ``r_i +- h/2`` are weighted by ``r_face^(N-1)`` and
    divided by the exact shell volume ``(r_+^N - r_-^N) / N``, which makes the
    operator exact on ``r^2`` for every ``N``.  Ratios are formed in log space so
    large ``N`` does not overflow.
    """
    r = np.asarray(r, dtype=float)
    if len(r) < 3:
        raise ValueError("grid shorter than 3 points")
    if r[0] <= 0:
        raise ValueError("radial grid must stay away from r = 0")
    h = r[1] - r[0]
    eps = 0.5 * h / r[1:-1]
    lp, lm = np.log1p(eps), np.log1p(-eps)
    # shell volume / (h r_i^(N-1)) = ((1+eps)^N - (1-eps)^N) / (2 N eps)
    shell = (np.exp(N * lp) - np.exp(N * lm)) / (2.0 * N * eps)
    up = np.exp((N - 1) * lp) / (shell * h**2)
    dn = np.exp((N - 1) * lm) / (shell * h**2)
    return dn, up


def apply_radial(dn, up, u):
    """Flux form ``up (u_+ - u) + dn (u_- - u)`` along the last axis; zero on constants.

    End columns are returned as zero (pinned).
    """
    out = np.zeros_like(u)
    mid = u[..., 1:-1]
    out[..., 1:-1] = up * (u[..., 2:] - mid) + dn * (u[..., :-2] - mid)
    return out


def radial_laplacian(r: np.ndarray, N: int):
    """Finite-volume ``r^(1-N) d/dr (r^(N-1) d/dr)`` on interior nodes of ``r``.

    Sparse form of :func:`radial_coefficients`; end rows are empty (pinned).
    """
    dn, up = radial_coefficients(r, N)
    n = len(r)
    idx = np.arange(1, n - 1)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx - 1, idx, idx + 1])
    vals = np.concatenate([dn, -(up + dn), up])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def spectral_bound(mat) -> float:
    """Upper bound on ``|lambda|`` for a tridiagonal-type operator.

    Gershgorin applied to the symmetrization ``sqrt(|a_ij a_ji|)``, which is a
    similarity transform whenever the off-diagonal products are positive.
    """
    m = sp.csr_matrix(mat)
    sym = m.multiply(m.T.tocsr()).tocsr()
    sym.data = np.sqrt(np.abs(sym.data))
    if m.shape[0] == 0:
        return 0.0
    return float(np.max(np.asarray(sym.sum(axis=1)).ravel()))


def apply_along(mat, arr: np.ndarray, axis: int) -> np.ndarray:
    """Apply a sparse ``(n, n)`` matrix along one axis of ``arr``."""
    moved = np.moveaxis(arr, axis, 0)
    shape = moved.shape
    out = mat @ moved.reshape(shape[0], -1)
    return np.moveaxis(np.asarray(out).reshape(shape), 0, axis)
