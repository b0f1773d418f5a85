import numpy as np
import pytest

from ricciwave.errors import UnsupportedProfileError
from ricciwave.profiles import (Bump, Constant, CosTheta, Gaussian, KernelSolution,
                                SphereHeatSolution, heat_oracle, parse_profile, reference_laplacian)


def test_parse_profile_variants():
    assert parse_profile("gaussian(0, 1)") == Gaussian(0, 1)
    assert parse_profile("constant(c=2)") == Constant(2)
    assert parse_profile("cos_theta") == CosTheta()
    assert parse_profile("bump(radius=2)") == Bump(radius=2)
    for bad in ("nope(1)", "1 +", "gaussian[0]"):
        with pytest.raises(ValueError):
            parse_profile(bad)


@pytest.mark.parametrize("prof", [Gaussian(0.3, 0.8, 2.0), Bump(0.1, 1.5)])
def test_flat_laplacians_match_finite_differences(prof):
    x = np.linspace(-1.2, 1.2, 2401)
    h = x[1] - x[0]
    u = prof(x)
    fd = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    assert np.allclose(prof.flat_laplacian(x)[1:-1], fd, atol=1e-4)


def test_kernel_solution_solves_backward_heat():
    w = KernelSolution(Gaussian(), 1.0)
    t, x = np.linspace(0.2, 1.0, 5)[:, None], np.linspace(-3, 3, 7)[None, :]
    assert np.allclose(w.d_t(t, x) + w.lap_x(t, x), 0.0, atol=1e-13)
    assert np.allclose(w.value(1.0, x), np.exp(-x**2))
    # d_tt against a centered difference of d_t
    e = 1e-5
    assert np.allclose(w.d_tt(0.5, x), (w.d_t(0.5 + e, x) - w.d_t(0.5 - e, x)) / (2 * e), atol=1e-6)


def test_kernel_solution_two_dimensional():
    w = KernelSolution(Gaussian((0.0, 0.5)), 1.0, dim=2)
    X, Y = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(-2, 2, 5))
    assert np.allclose(w.d_t(0.3, (X, Y)) + w.lap_x(0.3, (X, Y)), 0.0, atol=1e-13)


def test_sphere_heat_solution_solves_coupled_equation():
    sol = SphereHeatSolution(CosTheta(0.7), 0.3)
    t, th = 0.1, np.linspace(0.2, 3.0, 9)
    R = 2 / (1 - 2 * t)
    assert np.allclose(sol.d_t(t, th) + sol.lap_x(t, th), -R)
    assert np.allclose(sol.value(0.3, th), 0.7 * np.cos(th))


def test_oracle_lookup_and_unsupported():
    assert heat_oracle("euclid1", Bump(), 1.0) is None
    assert isinstance(heat_oracle("sphere2", Constant(1.0), 0.2), SphereHeatSolution)
    with pytest.raises(UnsupportedProfileError):
        reference_laplacian(CosTheta(), "euclid1", 0.0, 1.0)
    with pytest.raises(UnsupportedProfileError):
        KernelSolution(Bump(), 1.0)
