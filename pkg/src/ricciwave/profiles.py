"""Terminal-data profiles and closed-form solutions of the coupled backward heat equation.

A profile ``h`` is the data ``u(T, .) = h``.  Analytic solutions expose the
value together with ``d_t``, ``d_tt`` and ``lap_x`` (the ``Delta_{g(t)}`` of the
family) so that lift identities can be checked without any discretisation.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnsupportedProfileError
from .metrics import MetricFamily, as_coords, get_family


def _sq_dist(coords, center):
    center = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)), (len(coords),))
    return sum((np.asarray(c, dtype=float) - c0) ** 2 for c, c0 in zip(coords, center))


@dataclass(frozen=True)
class Gaussian:
    """``amplitude * exp(-|x - center|^2 / width^2)``."""

    center: float | tuple = 0.0
    width: float = 1.0
    amplitude: float = 1.0

    def __call__(self, x):
        return self.amplitude * np.exp(-_sq_dist(as_coords(x), self.center) / self.width**2)

    def flat_laplacian(self, x):
        coords = as_coords(x)
        q = _sq_dist(coords, self.center) / self.width**2
        return self(x) * (4.0 * q - 2.0 * len(coords)) / self.width**2


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, x):
        shape = np.broadcast_shapes(*(np.shape(c) for c in as_coords(x)))
        return np.full(shape, float(self.value))

    def flat_laplacian(self, x):
        return self(x) * 0.0


@dataclass(frozen=True)
class CosTheta:
    """``amplitude * cos(theta)``, an l = 1 spherical harmonic."""

    amplitude: float = 1.0

    def __call__(self, x):
        return self.amplitude * np.cos(as_coords(x)[0])

    def flat_laplacian(self, x):
        # unit-sphere Laplace-Beltrami
        return -2.0 * self(x)


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported ``exp(-1 / (1 - q))`` with ``q = |x - c|^2 / radius^2``."""

    center: float | tuple = 0.0
    radius: float = 1.0
    amplitude: float = 1.0

    def _q(self, x):
        return _sq_dist(as_coords(x), self.center) / self.radius**2

    def __call__(self, x):
        q = self._q(x)
        inside = q < 1.0
        out = np.zeros(np.shape(q))
        out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
        return self.amplitude * out

    def flat_laplacian(self, x):
        coords = as_coords(x)
        q = np.asarray(self._q(x), dtype=float)
        f = self(x) / self.amplitude
        inside = q < 1.0
        fq = np.zeros_like(q)
        fqq = np.zeros_like(q)
        s = 1.0 - q[inside]
        fq[inside] = -f[inside] / s**2
        fqq[inside] = f[inside] * (2.0 * q[inside] - 1.0) / s**4
        n = len(coords)
        return self.amplitude * (fq * 2.0 * n + fqq * 4.0 * q) / self.radius**2


PROFILES = {"gaussian": Gaussian, "constant": Constant, "cos_theta": CosTheta, "bump": Bump}


def parse_profile(text: str):
    """Parse ``"gaussian(0, 1)"``, ``"constant(c=2)"``, ``"cos_theta"`` and friends."""
    text = text.strip()
    try:
        node = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise ValueError(f"cannot parse profile {text!r}") from exc
    if isinstance(node, ast.Name):
        name, args, kwargs = node.id, [], {}
    elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        args = [ast.literal_eval(a) for a in node.args]
        kwargs = {k.arg: ast.literal_eval(k.value) for k in node.keywords}
    else:
        raise ValueError(f"cannot parse profile {text!r}")
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    if name == "constant" and "c" in kwargs:
        kwargs["value"] = kwargs.pop("c")
    return PROFILES[name](*args, **kwargs)


def reference_laplacian(profile, family, t, x):
    """``Delta_{g(t)} h`` in closed form."""
    family = get_family(family)
    if family.is_flat and isinstance(profile, CosTheta):
        raise UnsupportedProfileError("cos_theta lives on sphere2")
    if not family.is_flat and not isinstance(profile, (Constant, CosTheta)):
        raise UnsupportedProfileError(f"no closed-form sphere Laplacian for {profile!r}")
    return family.laplacian_scale(t) * profile.flat_laplacian(x)


@dataclass(frozen=True)
class AnalyticField:
    """A field ``w(t, x)`` given by callables for its value and derivatives."""

    value: Callable
    d_t: Callable
    d_tt: Callable
    lap_x: Callable

    def __call__(self, t, x):
        return self.value(t, x)


class KernelSolution:
    """Euclidean backward heat solution ``u_t + Delta u = 0`` with Gaussian or constant data.

    For ``h = A exp(-|x - c|^2 / w^2)`` the convolution with the heat kernel of
    elapsed time ``T - t`` is ``A (w^2 / s)^(n/2) exp(-|x - c|^2 / s)`` with
    ``s = w^2 + 4 (T - t)``.  The formula is analytic for ``s > 0``, which also
    covers ``t`` slightly past ``T``.
    """

    def __init__(self, profile, T: float, dim: int = 1):
        if not isinstance(profile, (Gaussian, Constant)):
            raise UnsupportedProfileError(
                f"no closed-form kernel convolution for {profile!r}; use solve_backward_heat"
            )
        self.profile = profile
        self.T = float(T)
        self.dim = dim

    @property
    def valid_until(self) -> float:
        """Largest ``t`` at which the closed form is still defined."""
        if isinstance(self.profile, Constant):
            return np.inf
        return self.T + self.profile.width**2 / 4.0

    def _parts(self, t, x):
        p = self.profile
        coords = as_coords(x)
        s = p.width**2 + 4.0 * (self.T - np.asarray(t, dtype=float))
        q = _sq_dist(coords, p.center)
        u = p.amplitude * (p.width**2 / s) ** (self.dim / 2) * np.exp(-q / s)
        # derivatives with respect to s; d/dt = -4 d/ds
        g1 = q / s**2 - self.dim / (2.0 * s)
        u_s = u * g1
        u_ss = u * (g1**2 - 2.0 * q / s**3 + self.dim / (2.0 * s**2))
        return u, u_s, u_ss

    def value(self, t, x):
        if isinstance(self.profile, Constant):
            return self.profile(x) + 0.0 * np.asarray(t)
        return self._parts(t, x)[0]

    def d_t(self, t, x):
        if isinstance(self.profile, Constant):
            return 0.0 * self.value(t, x)
        return -4.0 * self._parts(t, x)[1]

    def d_tt(self, t, x):
        if isinstance(self.profile, Constant):
            return 0.0 * self.value(t, x)
        return 16.0 * self._parts(t, x)[2]

    def lap_x(self, t, x):
        if isinstance(self.profile, Constant):
            return 0.0 * self.value(t, x)
        return 4.0 * self._parts(t, x)[1]

    __call__ = value


class SphereHeatSolution:
    """Closed-form solution of ``u_t + Delta_{g(t)} u = -R`` on the shrinking sphere.

    Data ``h = c + A cos(theta)`` evolve as
    ``u = c + ln((1-2t)/(1-2T)) + A (1-2T)/(1-2t) cos(theta)``.
    """

    def __init__(self, profile, T: float):
        if isinstance(profile, Constant):
            self.c, self.A = float(profile.value), 0.0
        elif isinstance(profile, CosTheta):
            self.c, self.A = 0.0, float(profile.amplitude)
        else:
            raise UnsupportedProfileError(f"no closed-form sphere solution for {profile!r}")
        if not T < 0.5:
            raise ValueError("sphere2 flow is extinct at t = 1/2")
        self.profile = profile
        self.T = float(T)

    @property
    def valid_until(self) -> float:
        return 0.5

    def value(self, t, x):
        t = np.asarray(t, dtype=float)
        a = 1.0 - 2.0 * t
        b = 1.0 - 2.0 * self.T
        return self.c + np.log(a / b) + self.A * (b / a) * np.cos(as_coords(x)[0])

    def d_t(self, t, x):
        a = 1.0 - 2.0 * np.asarray(t, dtype=float)
        b = 1.0 - 2.0 * self.T
        return -2.0 / a + self.A * 2.0 * b / a**2 * np.cos(as_coords(x)[0])

    def d_tt(self, t, x):
        a = 1.0 - 2.0 * np.asarray(t, dtype=float)
        b = 1.0 - 2.0 * self.T
        return -4.0 / a**2 + self.A * 8.0 * b / a**3 * np.cos(as_coords(x)[0])

    def lap_x(self, t, x):
        a = 1.0 - 2.0 * np.asarray(t, dtype=float)
        b = 1.0 - 2.0 * self.T
        return -2.0 * self.A * (b / a**2) * np.cos(as_coords(x)[0])

    __call__ = value


def heat_oracle(family, profile, T: float):
    """Closed-form heat solution for ``(family, profile)``, or ``None`` if there is none."""
    family: MetricFamily = get_family(family)
    try:
        if family.is_flat:
            return KernelSolution(profile, T, family.spatial_dim)
        return SphereHeatSolution(profile, T)
    except UnsupportedProfileError:
        return None
