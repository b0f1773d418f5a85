import numpy as np
import pytest

from ricciwave.errors import DomainError
from ricciwave.grid import Grid
from ricciwave.metrics import get_family, laplace_beltrami, laplacian_matrix, metric_at


def test_sphere_metric_sample():
    m = metric_at("sphere2", 0.25, 1.0)
    assert np.isclose(m.R, 4.0)
    assert np.allclose(m.g_inv, [[2.0]])
    assert np.allclose(m.dginv_dt, [[8.0]])
    assert np.isclose(m.tr_gdot, -2.0 * m.R)
    assert np.isclose(m.vol_weight, 0.5 * np.sin(1.0))


def test_flat_metric_is_static():
    m = metric_at("euclid2", 3.0, (1.0, -2.0))
    assert np.allclose(m.g_inv, np.eye(2)) and m.R == 0.0
    assert not np.any(m.dginv_dt) and not np.any(m.dginv_dx)


@pytest.mark.parametrize("t,x,name", [(0.5, 1.0, "t"), (0.7, 1.0, "t"), (0.1, 0.0, "theta"),
                                      (0.1, np.pi, "theta")])
def test_sphere_domain_errors_name_the_coordinate(t, x, name):
    with pytest.raises(DomainError) as exc:
        metric_at("sphere2", t, x)
    assert exc.value.coordinate == name


def test_unknown_family():
    with pytest.raises(ValueError):
        get_family("torus3")


def test_flat_laplacian_of_quadratic():
    x = np.linspace(-1, 1, 41)
    out = laplace_beltrami("euclid1", 0.0, x**2, x[1] - x[0])
    assert np.allclose(out, 2.0, atol=1e-9)


def test_sphere_laplacian_second_order_on_cos():
    errs = []
    for cells in (32, 64, 128):
        g = Grid.sphere(cells)
        th = g.axes[0]
        out = laplace_beltrami("sphere2", 0.25, np.cos(th), g.step)
        errs.append(np.max(np.abs(out - (-2.0 * np.cos(th) / 0.5))))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_laplacian_matrix_two_dimensional():
    g = Grid.box([(-1, 1), (-1, 1)], 0.1)
    X, Y = g.mesh()
    L = laplacian_matrix("euclid2", g)
    assert np.allclose(L @ (X**2 + 3 * Y**2).ravel(), 8.0, atol=1e-8)


def test_laplace_beltrami_input_checks():
    with pytest.raises(ValueError):
        laplace_beltrami("euclid1", 0.0, np.array([1.0, 2.0]), 0.1)
    with pytest.raises(ValueError):
        laplace_beltrami("euclid1", 0.0, np.array([1.0, np.nan, 2.0]), 0.1)
