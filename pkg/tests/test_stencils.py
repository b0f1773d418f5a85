import numpy as np
import pytest

from ricciwave.grid import Grid, SpaceTimeField
from ricciwave.stencils import (apply_along, first_difference, radial_laplacian,
                                second_difference, spectral_bound)


def test_second_difference_exact_on_quadratics():
    x = np.linspace(0.0, 1.0, 11)
    d2 = second_difference(len(x), x[1] - x[0])
    assert np.allclose(d2 @ (3 * x**2 - x), 6.0, atol=1e-9)


def test_first_difference_exact_on_quadratics():
    x = np.linspace(-1.0, 2.0, 31)
    d1 = first_difference(len(x), x[1] - x[0])
    assert np.allclose(d1 @ x**2, 2 * x, atol=1e-10)


def test_neumann_keeps_constants_and_is_symmetric_in_spectrum():
    d2 = second_difference(20, 0.1, "neumann", "neumann")
    assert np.allclose(d2 @ np.ones(20), 0.0)
    assert np.max(np.linalg.eigvals(d2.toarray()).real) < 1e-10


def test_pole_ghost_preserves_constants():
    d1 = first_difference(12, 0.2, "pole", "pole")
    d2 = second_difference(12, 0.2, "pole", "pole")
    assert np.allclose(d1 @ np.ones(12), 0.0)
    assert np.allclose(d2 @ np.ones(12), 0.0)


def test_unknown_boundary_kind():
    with pytest.raises(ValueError):
        second_difference(5, 0.1, "periodic", "pinned")


@pytest.mark.parametrize("N", [2, 8, 64])
def test_radial_laplacian_of_r_squared(N):
    r = 1.0 + 0.01 * np.arange(200)
    out = radial_laplacian(r, N) @ r**2
    assert np.allclose(out[1:-1], 2 * N, rtol=1e-12)
    assert out[0] == 0.0 and out[-1] == 0.0


def test_radial_laplacian_second_order_on_smooth_radial_data():
    # exp(-r^2) in R^N: Laplacian (4 r^2 - 2N) exp(-r^2)
    N = 16
    errs = []
    for h in (0.02, 0.01):
        r = 0.8 + h * np.arange(int(2.0 / h))
        f = np.exp(-r**2)
        exact = (4 * r**2 - 2 * N) * f
        errs.append(np.max(np.abs((radial_laplacian(r, N) @ f - exact)[1:-1])))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_radial_laplacian_rejects_origin():
    with pytest.raises(ValueError):
        radial_laplacian(np.linspace(0.0, 1.0, 10), 4)


def test_spectral_bound_dominates_eigenvalues():
    r = 0.5 + 0.05 * np.arange(60)
    L = radial_laplacian(r, 16).toarray()[1:-1, 1:-1]
    lam = np.max(np.abs(np.linalg.eigvals(L)))
    assert spectral_bound(L) >= lam * (1 - 1e-12)


def test_apply_along_matches_dense():
    m = second_difference(6, 1.0)
    arr = np.arange(24.0).reshape(4, 6) ** 2
    assert np.allclose(apply_along(m, arr, 1), (m.toarray() @ arr.T).T)


def test_grid_and_field_shapes():
    g = Grid.box([(0, 1), (0, 2)], 0.5)
    assert g.shape == (3, 5)
    s = Grid.sphere(8)
    assert s.shape == (7,) and np.isclose(s.axes[0][0], np.pi / 8)
    f = SpaceTimeField(np.array([0.0, 1.0]), g, np.zeros((2, 3, 5)))
    assert f.level(1.0).shape == (3, 5)
    with pytest.raises(ValueError):
        SpaceTimeField(np.array([0.0]), g, np.zeros((2, 3, 5)))


def test_apply_radial_matches_matrix_and_kills_constants(rng):
    from ricciwave.stencils import apply_radial, radial_coefficients
    r = np.linspace(0.5, 3.0, 41)
    dn, up = radial_coefficients(r, 64)
    u = rng.normal(size=(3, len(r)))
    L = radial_laplacian(r, 64)
    assert np.allclose(apply_radial(dn, up, u), (L @ u.T).T, rtol=1e-12, atol=1e-9)
    assert np.all(apply_radial(dn, up, np.ones((2, len(r)))) == 0.0)
