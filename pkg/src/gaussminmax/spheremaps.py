"""Maps from S^3 to S^2: Dirichlet energies, Moebius profiles and a Ginzburg-Landau energy.

Energies use ``E(u) = integral of |du|^2`` (no factor 1/2); the
Ginzburg-Landau energy keeps its factor 1/2.  Pointwise ``|du|^2`` is
obtained by complex-step differentiation of the map formulas, so every
evaluator below is written without ``abs`` or conjugation.

Singular maps are integrated after a Moebius change of variables chosen so
that the singular points land on the poles of the S^3 chart, where the chart
volume density cancels the singularity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate as sint

from . import algebra
from .errors import BadParameter, GridTooCoarse
from .grid import Grid, gl_axis, s3_grid, s3_points

STEP = 1e-30
SINGULAR_MIN_NODES = 64
KINDS = ("hopf", "pi", "v_b", "conjugation", "mobius_composite", "constant")


def _ball_map(a, z):
    """``(1 - |a|^2)(z - a)/|z - a|^2 - a``, complex-safe."""
    a = np.asarray(a, dtype=float)
    d = z - a
    dd = np.sum(d * d, axis=-1)[..., None]
    return (1 - a @ a) * d / dd - a


def _ball_factor(a, z):
    """Conformal factor ``(1 - |a|^2)/|z - a|^2`` of the same map."""
    a = np.asarray(a, dtype=float)
    d = z - a
    return (1 - a @ a) / np.sum(d * d, axis=-1)


def _sandwich(q, y):
    """Imaginary part of ``q y q*`` for a 3-vector ``y``."""
    return algebra.qmul(algebra.qmul(q, algebra.pure(y)), algebra.qconj(q))[..., 1:]


def _project(z):
    return z[..., :3] / np.sqrt(1 - z[..., 3] ** 2)[..., None]


@dataclass(frozen=True)
class MapField:
    """An S^2-valued map on S^3 given by a closed formula."""

    kind: str
    b: tuple | None = None
    a: tuple | None = None
    inner: "MapField | None" = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParameter("unknown map kind %r" % self.kind)
        for name in ("a", "b"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(x) for x in np.ravel(v)))
        if self.kind == "v_b" and (self.b is None or len(self.b) != 3):
            raise BadParameter("v_b needs a 3-vector b")
        if self.kind == "conjugation":
            if self.b is None or self.a is None or len(self.b) != 3 or len(self.a) != 4:
                raise BadParameter("conjugation needs b in B^3 and a in B^4")
            if np.linalg.norm(self.b) >= 1 or np.linalg.norm(self.a) >= 1:
                raise BadParameter("conjugation parameters must lie in the open balls")
        if self.kind == "mobius_composite":
            if self.inner is None or self.a is None or len(self.a) != 4:
                raise BadParameter("mobius_composite needs an inner map and a in B^4")
            if np.linalg.norm(self.a) >= 1:
                raise BadParameter("|a| must be < 1")

    def __call__(self, z):
        z = np.asarray(z)
        if self.kind == "hopf":
            return _sandwich(z, np.array([1.0, 0.0, 0.0]))
        if self.kind == "pi":
            return _project(z)
        if self.kind == "v_b":
            return -_sandwich(z, np.asarray(self.b))
        if self.kind == "constant":
            return np.zeros(z.shape[:-1] + (3,), dtype=z.dtype) + np.array([0.0, 0.0, 1.0])
        if self.kind == "conjugation":
            q = _ball_map(self.a, z)
            inner = _project(_ball_map(np.append(self.b, 0.0), z))
            return _sandwich(q, inner)
        return self.inner(_ball_map(self.a, z))

    @property
    def singular(self):
        if self.kind in ("pi", "conjugation"):
            return True
        return self.kind == "mobius_composite" and self.inner.singular

    def default_center(self):
        """Moebius center that moves the singular set (if any) to the chart poles."""
        # the inverse of the ball map attached to a is the one attached to -a
        if self.kind == "conjugation":
            return -np.append(self.b, 0.0)
        if self.kind == "mobius_composite":
            return -np.asarray(self.a)
        return np.zeros(4)


def hopf():
    return MapField("hopf")


def pi_projection():
    return MapField("pi")


def compose(inner: MapField, a) -> MapField:
    """``inner`` precomposed with the ball map attached to ``a``."""
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        return inner
    return MapField("mobius_composite", a=a, inner=inner)


def energy_density(m: MapField, z):
    """``|du|^2`` at unit vectors ``z[..., 4]`` by complex steps along the tangent projector."""
    z = np.asarray(z, dtype=float)
    P = np.eye(4) - z[..., :, None] * z[..., None, :]
    total = np.zeros(z.shape[:-1])
    for k in range(4):
        du = np.imag(m(z + 1j * STEP * P[..., :, k])) / STEP
        total += np.sum(du * du, axis=-1)
    return total


def _check_grid(m, grid):
    if m.singular and min(a.n for a in grid.axes[:2]) < SINGULAR_MIN_NODES:
        raise GridTooCoarse("singular maps need at least %d polar nodes" % SINGULAR_MIN_NODES)


def _pole_rotation(c):
    """Orthogonal matrix whose last column is ``c/|c|``."""
    m = np.eye(4)
    m[:, 0] = c / np.linalg.norm(c)
    q, _ = np.linalg.qr(m)
    q = q * np.sign(q[:, 0] @ m[:, 0])
    return np.roll(q, -1, axis=1)


def dirichlet_energy(m: MapField, grid: Grid | None = None, n: int = 64, center=None) -> float:
    """``integral over S^3 of |du|^2``, after the change of variables ``z = phi_center(w)``."""
    grid = s3_grid(n) if grid is None else grid
    _check_grid(m, grid)
    c = m.default_center() if center is None else np.asarray(center, dtype=float)
    w = s3_points(grid)
    if np.any(c) and not m.singular:
        # the transformed density peaks at c/|c|; rotate the chart so that it sits on a pole
        w = w @ _pole_rotation(c).T
    if np.any(c):
        z = np.real(_ball_map(c, w))
        z = z / algebra.norm(z)[..., None]
        jac = _ball_factor(c, w) ** 3
    else:
        z, jac = w, 1.0
    return float(np.sum(grid.weights * energy_density(m, z) * jac))


class ProfileRow(NamedTuple):
    a: tuple
    energy: float


def mobius_profile(m: MapField, a_list, grid: Grid | None = None, n: int = 64):
    """``E(m o phi_a)`` for each ``a``."""
    rows = []
    for a in a_list:
        a = np.asarray(a, dtype=float)
        if np.linalg.norm(a) > 0.95 + 1e-12:
            raise BadParameter("profile points need |a| <= 0.95")
        rows.append(ProfileRow(tuple(a), dirichlet_energy(compose(m, a), grid, n)))
    return rows


def hopf_profile_exact(a_norm):
    """Closed form ``16 pi^2 (1 - |a|^2)`` of the Hopf profile."""
    return 16 * np.pi ** 2 * (1 - np.asarray(a_norm) ** 2)


def _alpha(t):
    cosh = (1 + t * t) / (1 - t * t)
    tanh = 2 * t / (1 + t * t)
    return cosh, tanh


def _artanh_ratio(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.arctanh(x[nz]) / x[nz]
    return out


def reduced_integral(t: float) -> float:
    """``E(pi o phi_{t e1})`` by one-dimensional quadrature over the height of S^3."""
    t = float(t)
    if not 0 <= t <= 0.999:
        raise BadParameter("t must lie in [0, 0.999]")
    cosh, tanh = _alpha(t)
    val, _ = sint.quad(lambda psi: _artanh_ratio(tanh * np.sin(psi)), 0.0, np.pi,
                       points=[np.pi / 2], epsabs=1e-14, epsrel=1e-13, limit=200)
    return 8 * np.pi * val / cosh


def slice_reduction(t: float, n: int = 200) -> float:
    """``E(pi o phi_{t e1})`` as a two-variable integral over (height, z1) slices."""
    t = float(t)
    psi_ax, x_ax = gl_axis(n, 0.0, np.pi), gl_axis(n, -1.0, 1.0)
    psi, x = np.meshgrid(psi_ax.nodes, x_ax.nodes, indexing="ij")
    w = np.outer(psi_ax.weights, x_ax.weights)
    f = (1 - t * t) / (1 + t * t + 2 * t * np.sin(psi) * x)
    return float(4 * np.pi * np.sum(w * f))


class MonotonicityReport(NamedTuple):
    sigma: float
    min_slope_f: float
    max_slope_g: float
    f_at_infinity: float
    g_at_one: float
    g_at_end: float
    max_gprime_mismatch: float


def monotonicity_certificate(sigma: float, A_grid) -> MonotonicityReport:
    """Checks on a grid that ``f(A) = sqrt(A^2-1) log((A+s)/(A-s))`` increases and ``g`` decreases."""
    if not 0 < sigma < 1:
        raise BadParameter("sigma must lie in (0, 1)")
    A = np.sort(np.asarray(A_grid, dtype=float))
    if A[0] <= 1:
        raise BadParameter("grid must lie in (1, inf)")
    s = sigma
    f = np.sqrt(A * A - 1) * np.log((A + s) / (A - s))
    g = np.log((A + s) / (A - s)) - 2 * s * (A - 1 / A) / (A * A - s * s)
    gp = -2 * s * (3 * A * A - 2 * s * s * A * A - s * s) / (A * A * (A * A - s * s) ** 2)
    slope_f = np.diff(f) / np.diff(A)
    slope_g = np.diff(g) / np.diff(A)
    mid_gp = 0.5 * (gp[1:] + gp[:-1])
    mismatch = np.max(np.abs(slope_g - mid_gp) / np.maximum(np.abs(mid_gp), 1e-300))
    big = 1e6
    f_inf = np.sqrt(big * big - 1) * np.log1p(2 * s / (big - s))
    return MonotonicityReport(s, float(slope_f.min()), float(slope_g.max()), float(f_inf),
                              float(np.log((1 + s) / (1 - s))), float(g[-1]), float(mismatch))


def conjugation_family_energy(b, a, n: int = 64, grid: Grid | None = None) -> float:
    """Dirichlet energy of ``q -> phi_a(q) pi(phi_b(q)) phi_a(q)*``."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.linalg.norm(b) > 0.95 + 1e-12 or np.linalg.norm(a) > 0.95 + 1e-12:
        raise BadParameter("need |b|, |a| <= 0.95")
    return dirichlet_energy(MapField("conjugation", b=b, a=a), grid, n)


# ------------------------------------------------------------ Ginzburg-Landau

@dataclass(frozen=True)
class GLState:
    """R^3-valued field sampled on an S^3 grid, with the relaxation parameter ``eps``."""

    grid: Grid
    u: np.ndarray
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise BadParameter("eps must be positive")
        if self.u.shape != self.grid.shape + (3,):
            raise ValueError("u must have shape grid.shape + (3,)")


def _inverse_metric(grid):
    psi, theta, _ = grid.mesh
    sp2 = np.sin(psi) ** 2
    return (np.ones_like(psi), 1 / sp2, 1 / (sp2 * np.sin(theta) ** 2))


def gl_energy(s: GLState) -> float:
    """``(1/2) integral |du|^2 + (1/(2 eps^2)) integral (1 - |u|^2)^2``."""
    W = s.grid.weights
    ginv = _inverse_metric(s.grid)
    grad2 = sum(gi * np.sum(s.grid.d(s.u, k) ** 2, axis=-1) for k, gi in enumerate(ginv))
    pot = (1 - np.sum(s.u * s.u, axis=-1)) ** 2
    return float(0.5 * np.sum(W * grad2) + np.sum(W * pot) / (2 * s.eps ** 2))


def gl_gradient(s: GLState) -> np.ndarray:
    """Gradient of :func:`gl_energy` for the weighted inner product ``sum W u.v``.

    It is the discrete form of ``-Lap u - 2 u (1 - |u|^2) / eps^2``.
    """
    W = s.grid.weights
    ginv = _inverse_metric(s.grid)
    out = np.zeros_like(s.u)
    for k, gi in enumerate(ginv):
        D = s.grid.axes[k].diff
        flux = (W * gi)[..., None] * s.grid.d(s.u, k)
        out += np.moveaxis(np.tensordot(D.T, flux, axes=([1], [k])), 0, k)
    out /= W[..., None]
    return out - (2 / s.eps ** 2) * (1 - np.sum(s.u * s.u, axis=-1))[..., None] * s.u


def sample(m: MapField, grid: Grid) -> np.ndarray:
    """Values of ``m`` at the nodes of an S^3 grid."""
    return np.real(m(s3_points(grid)))
