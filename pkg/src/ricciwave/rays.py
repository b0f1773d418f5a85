"""Principal symbol, Hamiltonian flow and null bicharacteristics of the finite-N wave operator.

Phase space is ``(t, x, y, tau, xi, eta)`` with ``x`` the reduced spatial
coordinates of the family and ``y`` in R^N.  The symbol is

    p = (2t/N) tau^2 - g^{ij}(t, x) xi_i xi_j - |eta|^2.

Internally a phase point is packed into one vector
``[t, x..., y..., tau, xi..., eta...]`` so many rays can be advanced at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .metrics import get_family, metric_at
from .table import ResultTable

CHARACTERISTIC_TOL = 1e-12
WF_EPS = 1e-6
WF_BOUND = 1e6


@dataclass
class PhasePoint:
    t: float
    x: np.ndarray
    y: np.ndarray
    tau: float
    xi: np.ndarray
    eta: np.ndarray
    N: int
    on_characteristic: bool = False

    def __post_init__(self):
        self.t = float(self.t)
        self.tau = float(self.tau)
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        self.y = np.broadcast_to(np.asarray(self.y, dtype=float), (self.N,)).copy()
        self.eta = np.broadcast_to(np.asarray(self.eta, dtype=float), (self.N,)).copy()
        if self.x.shape != self.xi.shape:
            raise ValueError("x and xi must have the same length")

    @property
    def dim(self) -> int:
        return len(self.x)

    def pack(self) -> np.ndarray:
        return np.concatenate([[self.t], self.x, self.y, [self.tau], self.xi, self.eta])

    @classmethod
    def unpack(cls, z, dim: int, N: int, **kw) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        half = 1 + dim + N
        return cls(z[0], z[1:1 + dim], z[1 + dim:half], z[half], z[half + 1:half + 1 + dim],
                   z[half + 1 + dim:], N, **kw)


def _split(z, dim, N):
    """Views of a packed ``(..., 2(1+dim+N))`` array."""
    half = 1 + dim + N
    return (z[..., 0], z[..., 1:1 + dim], z[..., 1 + dim:half],
            z[..., half], z[..., half + 1:half + 1 + dim], z[..., half + 1 + dim:])


def _conformal(family, t):
    """``g^{ij} = phi(t) delta^{ij}``: returns ``phi`` and ``d phi / dt``.

    Every shipped family is a time-dependent multiple of a flat reduced metric,
    so ``g^{ij}`` does not depend on ``x``.
    """
    a = family.scale(t)
    da = 0.0 if family.is_flat else -2.0
    return 1.0 / a, -da / a**2


def principal_symbol(point: PhasePoint, family) -> float:
    family = get_family(family)
    m = metric_at(family, point.t, tuple(point.x))
    return float((2.0 * point.t / point.N) * point.tau**2
                 - point.xi @ m.g_inv @ point.xi - point.eta @ point.eta)


def _symbol_packed(z, family, dim, N):
    t, _, _, tau, xi, eta = _split(z, dim, N)
    phi, _ = _conformal(family, t)
    return (2.0 * t / N) * tau**2 - phi * np.sum(xi**2, axis=-1) - np.sum(eta**2, axis=-1)


def hamiltonian_field(point: PhasePoint, family) -> PhasePoint:
    """``H_p = (dp/dtau, dp/dxi, dp/deta, -dp/dt, -dp/dx, -dp/dy)`` as a PhasePoint of rates."""
    family = get_family(family)
    m = metric_at(family, point.t, tuple(point.x))
    N = point.N
    xi = point.xi
    return PhasePoint(
        t=4.0 * point.t * point.tau / N,
        x=-2.0 * m.g_inv @ xi,
        y=-2.0 * point.eta,
        tau=-2.0 * point.tau**2 / N + xi @ m.dginv_dt @ xi,
        xi=np.einsum("kij,i,j->k", m.dginv_dx, xi, xi),
        eta=np.zeros(N),
        N=N,
    )


def _field_packed(z, family, dim, N):
    t, _, _, tau, xi, eta = _split(z, dim, N)
    phi, dphi = _conformal(family, t)
    out = np.empty_like(z)
    half = 1 + dim + N
    out[..., 0] = 4.0 * t * tau / N
    out[..., 1:1 + dim] = -2.0 * phi[..., None] * xi if np.ndim(phi) else -2.0 * phi * xi
    out[..., 1 + dim:half] = -2.0 * eta
    out[..., half] = -2.0 * tau**2 / N + dphi * np.sum(xi**2, axis=-1)
    out[..., half + 1:] = 0.0  # g^{ij} is x-independent and nothing depends on y
    return out


@dataclass
class RayTrajectory:
    """Samples of one ray; ``states`` rows are packed phase points."""

    s: np.ndarray
    states: np.ndarray
    dim: int
    N: int
    step: float
    exited: bool = False
    exit_reason: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.s) > 1 and np.any(np.diff(self.s) <= 0):
            raise ValueError("s must be strictly increasing")
        if not self.exited and not np.all(np.isfinite(self.states)):
            raise ValueError("non-finite samples in a trajectory not marked as exited")

    def point(self, k: int) -> PhasePoint:
        return PhasePoint.unpack(self.states[k], self.dim, self.N)

    @property
    def samples(self):
        return [(float(s), self.point(k)) for k, s in enumerate(self.s)]

    def component(self, name: str) -> np.ndarray:
        parts = dict(zip(("t", "x", "y", "tau", "xi", "eta"), _split(self.states, self.dim, self.N)))
        return parts[name]


def _rk4(z, family, dim, N, h):
    k1 = _field_packed(z, family, dim, N)
    k2 = _field_packed(z + 0.5 * h * k1, family, dim, N)
    k3 = _field_packed(z + 0.5 * h * k2, family, dim, N)
    k4 = _field_packed(z + h * k3, family, dim, N)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _inside(family, z, dim, N):
    t, x = z[..., 0], z[..., 1:1 + dim]
    ok = np.all(np.isfinite(z), axis=-1)
    lo, hi = family.time_domain
    ok &= (t >= lo) & (t < hi)
    for k, (xlo, xhi) in enumerate(family.x_domain):
        ok &= (x[..., k] > xlo) & (x[..., k] < xhi)
    return ok


def integrate_rays(points, family, s_max: float, step: float, keep_every: int = 1):
    """Advance a batch of rays (same ``N`` and dimension) with classical RK4.

    Rays leaving the metric domain are truncated at their last valid sample.
    """
    family = get_family(family)
    points = list(points)
    if not points:
        return []
    if step <= 0 or s_max < 0:
        raise ValueError("need step > 0 and s_max >= 0")
    dim, N = points[0].dim, points[0].N
    if any(p.dim != dim or p.N != N for p in points):
        raise ValueError("batched rays must share N and dimension")
    for p in points:
        family.check(p.t, tuple(p.x))
    nsteps = int(np.ceil(s_max / step - 1e-9))
    h = s_max / nsteps if nsteps else step
    z = np.array([p.pack() for p in points])
    alive = np.ones(len(points), dtype=bool)
    last = np.zeros(len(points), dtype=int)
    keep = [0]
    hist = [z.copy()]
    for n in range(1, nsteps + 1):
        znew = _rk4(z, family, dim, N, h)
        ok = _inside(family, znew, dim, N) & alive
        z = np.where(ok[:, None], znew, z)
        newly_dead = alive & ~ok
        alive &= ok
        if n % keep_every == 0 or n == nsteps or np.any(newly_dead):
            keep.append(n)
            hist.append(z.copy())
            last[alive] = len(keep) - 1
        if not np.any(alive):
            break
    s = np.array(keep) * h
    hist = np.array(hist)
    out = []
    for i in range(len(points)):
        n_i = last[i] + 1
        exited = not alive[i]
        out.append(RayTrajectory(
            s[:n_i], hist[:n_i, i], dim, N, h, exited,
            "left the metric domain" if exited else "",
        ))
    return out


def integrate_ray(point0: PhasePoint, family, s_max: float, step: float, keep_every: int = 1) -> RayTrajectory:
    """Classical RK4 integration of the Hamiltonian field from ``s = 0`` to ``s_max``."""
    if not np.all(np.isfinite(point0.pack())):
        raise ValueError("initial point must be finite")
    return integrate_rays([point0], family, s_max, step, keep_every)[0]


def euclid_ray_closed_form(point0: PhasePoint, s: float) -> PhasePoint:
    """Exact flat-space bicharacteristic through ``point0`` at parameter ``s``."""
    N, tau0 = point0.N, point0.tau
    if tau0 == 0.0:
        t, tau = point0.t, 0.0
    else:
        denom = 2.0 * s * tau0 + N
        if denom == 0.0:
            raise ValueError("closed form has a pole at 2 s tau0 + N = 0")
        tau = tau0 * N / denom
        t = 4.0 * tau0**2 * point0.t * (s / N + 1.0 / (2.0 * tau0)) ** 2
    return PhasePoint(t, point0.x - 2.0 * point0.xi * s, point0.y - 2.0 * point0.eta * s,
                      tau, point0.xi.copy(), point0.eta.copy(), N)


def characteristic_point(t, x, y, tau, xi_dir, eta_dir, N, family="euclid1") -> PhasePoint:
    """Scale ``(xi, eta)`` jointly so that the point lies on ``p = 0``."""
    family = get_family(family)
    xi_dir = np.atleast_1d(np.asarray(xi_dir, dtype=float))
    eta_dir = np.broadcast_to(np.asarray(eta_dir, dtype=float), (N,))
    m = metric_at(family, t, tuple(np.atleast_1d(x)))
    norm2 = xi_dir @ m.g_inv @ xi_dir + eta_dir @ eta_dir
    if norm2 == 0.0:
        raise ValueError("covector direction is zero")
    lam = np.sqrt((2.0 * t / N) * tau**2 / norm2)
    pt = PhasePoint(t, x, y, tau, lam * xi_dir, lam * eta_dir, N)
    pt.on_characteristic = abs(principal_symbol(pt, family)) < CHARACTERISTIC_TOL
    return pt


def random_characteristic_seeds(rng: np.random.Generator, count: int, dim: int = 1,
                                Ns=(2, 4, 8, 16), s_max: float = 10.0):
    """Random points on ``p = 0`` whose closed form stays pole-free on ``[0, s_max]``."""
    seeds = []
    for _ in range(count):
        N = int(rng.choice(Ns))
        t = rng.uniform(0.5, 2.0)
        tau = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        if tau < 0:
            # keep 2 s tau + N well away from zero over the whole parameter range
            tau = max(tau, -0.25 * N / s_max)
        x = rng.normal(size=dim)
        y = rng.normal(size=N)
        seeds.append(characteristic_point(t, x, y, tau, rng.normal(size=dim), rng.normal(size=N), N))
    return seeds


@dataclass
class WFClassification:
    label: str
    diagnostics: dict = field(default_factory=dict)


def classify_wf_infinity(point0: PhasePoint, family, Ns, s_probe: float,
                         eps: float = WF_EPS, bound: float = WF_BOUND, steps: int = 2000) -> WFClassification:
    """Decide which clause of the WF-at-infinity definition ``point0`` falls under.

    ``point0`` is a template: for each ``N`` its covector ``(xi, eta)`` is
    rescaled (direction kept) onto ``p^(N) = 0`` and the ray is followed to
    ``s = N * s_probe``, the parameter at which the normalised displacement
    ``(|x(s) - x(0)|^2 + |y(s) - y(0)|^2) / N`` is the same for every ``N``.
    """
    family = get_family(family)
    Ns = [int(n) for n in Ns]
    if len(Ns) < 2:
        raise ValueError("need at least two values of N")
    xi, eta = point0.xi, point0.eta
    if point0.tau == 0.0:
        if np.any(xi != 0) or np.any(eta != 0):
            return WFClassification("regular", {"reason": "tau = 0 forces xi = eta = 0 on p = 0"})
        traj = integrate_ray(point0, family, s_probe, s_probe / 10.0)
        frozen = (np.all(traj.component("t") == point0.t)
                  and np.all(traj.component("x") == point0.x))
        label = "terminal_stationary" if frozen else "indeterminate"
        return WFClassification(label, {"t": point0.t, "x": point0.x.tolist(), "frozen": bool(frozen)})
    if not (np.any(xi != 0) or np.any(eta != 0)):
        p = principal_symbol(point0, family)
        return WFClassification("regular", {"symbol": p, "reason": "no covector direction to rescale"})

    disp, ratios, drifts = [], [], []
    for N in Ns:
        eta_dir = np.broadcast_to(eta, (N,)) if eta.size in (1, N) else np.resize(eta, N)
        y0 = np.zeros(N)
        pt = characteristic_point(point0.t, point0.x, y0, point0.tau, xi, eta_dir, N, family)
        s_N = N * s_probe
        traj = integrate_ray(pt, family, s_N, s_N / steps, keep_every=steps)
        if traj.exited:
            return WFClassification("indeterminate", {"N": N, "reason": traj.exit_reason})
        end = traj.point(-1)
        d2 = float(np.sum((end.x - pt.x) ** 2) + np.sum((end.y - pt.y) ** 2))
        disp.append(d2)
        ratios.append(d2 / N)
        drifts.append(abs(_symbol_packed(traj.states[-1], family, pt.dim, N)))
    ratios = np.array(ratios)
    spread = float(np.max(np.abs(ratios - ratios[0])) / abs(ratios[0]))
    slope = float(np.polyfit(np.log(Ns), np.log(disp), 1)[0])
    # |displacement|^2 grows like N, so it passes any bound once N exceeds bound / ratio
    N_escape = bound / ratios[0]
    diag = {"Ns": Ns, "ratios": ratios.tolist(), "spread": spread, "slope": slope,
            "N_escape": float(N_escape), "symbol_drift": max(drifts)}
    if spread <= eps and abs(slope - 1.0) <= eps:
        return WFClassification("escapes_to_infinity", diag)
    return WFClassification("indeterminate", diag)


def trajectory_table(traj: RayTrajectory, family) -> ResultTable:
    """Columns ``s, t, x1.., |y|, tau, |xi|, |eta|, p`` for dumping."""
    family = get_family(family)
    t, x, y, tau, xi, eta = _split(traj.states, traj.dim, traj.N)
    cols = ["s", "t"] + [f"x{k + 1}" for k in range(traj.dim)] + ["|y|", "tau", "|xi|", "|eta|", "p"]
    p = _symbol_packed(traj.states, family, traj.dim, traj.N)
    data = np.column_stack([traj.s, t, x, np.linalg.norm(y, axis=1), tau,
                            np.linalg.norm(xi, axis=1), np.linalg.norm(eta, axis=1), p])
    return ResultTable(cols, data.tolist(), {"N": traj.N, "exited": traj.exited})


def check_domain(point: PhasePoint, family) -> None:
    """Raise ``DomainError`` if the point lies outside the family's domain."""
    get_family(family).check(point.t, tuple(point.x))


__all__ = [
    "PhasePoint", "RayTrajectory", "WFClassification", "DomainError",
    "principal_symbol", "hamiltonian_field", "integrate_ray", "integrate_rays",
    "euclid_ray_closed_form", "characteristic_point", "random_characteristic_seeds",
    "classify_wf_infinity", "trajectory_table", "check_domain",
]
