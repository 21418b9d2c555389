"""Tensor-product parameter grids, spectral differentiation and quadrature.

Three axis kinds exist.  Periodic axes use equispaced nodes, trapezoid weights
and the trigonometric differentiation matrix.  ``gl`` axes use Gauss-Legendre
nodes (never the endpoints) and the barycentric polynomial differentiation
matrix on those nodes.  ``polar`` axes are the colatitude of a sphere chart:
half-offset equispaced nodes in (0, pi), Fejer weights, and derivatives taken
on the doubled (reflected) circle, which must be paired with a 2 pi periodic
azimuth as the next axis.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import GridTooCoarse

MIN_NODES = 8


@dataclass(frozen=True)
class Axis:
    kind: str
    n: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in ("periodic", "gl", "polar"):
            raise ValueError("axis kind must be 'periodic', 'gl' or 'polar'")
        if self.n < 1 or not self.hi > self.lo:
            raise ValueError("bad axis extent")

    @property
    def length(self):
        return self.hi - self.lo

    @cached_property
    def _table(self):
        L = self.length
        if self.kind == "periodic":
            x = self.lo + L * np.arange(self.n) / self.n
            w = np.full(self.n, L / self.n)
        elif self.kind == "polar":
            x = (np.arange(self.n) + 0.5) * np.pi / self.n
            w = _fejer(self.n) / np.sin(x)
        else:
            t, w = np.polynomial.legendre.leggauss(self.n)
            x = self.lo + 0.5 * L * (t + 1)
            w = 0.5 * L * w
        return x, w

    @property
    def nodes(self):
        return self._table[0]

    @property
    def weights(self):
        return self._table[1]

    @cached_property
    def diff(self):
        """Dense differentiation matrix acting on nodal values."""
        if self.n < MIN_NODES:
            raise GridTooCoarse("axis has %d nodes, need at least %d" % (self.n, MIN_NODES))
        if self.kind == "periodic":
            return _periodic_diff(self.n, self.length)
        if self.kind == "polar":
            return _periodic_diff(2 * self.n, 2 * np.pi)
        return _gl_diff(self.n, self.length)


def _fejer(n):
    """Fejer (first rule) weights on the nodes cos((j + 1/2) pi / n)."""
    theta = (np.arange(n) + 0.5) * np.pi / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2 * np.outer(theta, k)) / (4 * k ** 2 - 1)
    return (2.0 / n) * (1 - 2 * s.sum(axis=1))


def _periodic_diff(n, period):
    k = np.arange(n)
    d = k[:, None] - k[None, :]
    h = 2 * np.pi / n
    with np.errstate(divide="ignore", invalid="ignore"):
        if n % 2 == 0:
            D = 0.5 * (-1.0) ** d / np.tan(d * h / 2)
        else:
            D = 0.5 * (-1.0) ** d / np.sin(d * h / 2)
    D[k, k] = 0.0
    return D * (2 * np.pi / period)


def _gl_diff(n, length):
    t, w = np.polynomial.legendre.leggauss(n)
    # barycentric weights for Gauss-Legendre nodes
    bw = (-1.0) ** np.arange(n) * np.sqrt((1 - t ** 2) * w)
    d = t[:, None] - t[None, :]
    np.fill_diagonal(d, 1.0)
    D = (bw[None, :] / bw[:, None]) / d
    np.fill_diagonal(D, 0.0)
    D[np.arange(n), np.arange(n)] = -D.sum(axis=1)
    return D * (2.0 / length)


def apply_along(M, values, axis):
    """Apply matrix ``M`` to ``values`` along ``axis``."""
    out = np.tensordot(M, values, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid with an optional volume density on the nodes.

    ``density`` multiplies the coordinate weights in :func:`integrate`; it is
    the Riemannian volume density of the chart (``None`` means 1).
    """

    axes: tuple
    density: np.ndarray | None = field(default=None, compare=False, repr=False)
    name: str = ""

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.n for a in self.axes)

    @cached_property
    def mesh(self):
        return np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")

    @cached_property
    def coord_weights(self):
        w = np.ones(self.shape)
        for i, a in enumerate(self.axes):
            shape = [1] * self.ndim
            shape[i] = a.n
            w = w * a.weights.reshape(shape)
        return w

    @cached_property
    def weights(self):
        if self.density is None:
            return self.coord_weights
        return self.coord_weights * self.density

    def d(self, values, axis):
        """Derivative along ``axis`` of a field of point values."""
        values = np.asarray(values)
        ax = self.axes[axis]
        if ax.kind != "polar":
            return apply_along(ax.diff, values, axis)
        return self._restrict(apply_along(ax.diff, self.reflect(values, axis), axis), axis)

    def dd(self, values, axis):
        """Second derivative along ``axis``."""
        values = np.asarray(values)
        ax = self.axes[axis]
        if ax.kind != "polar":
            return self.d(self.d(values, axis), axis)
        ext = self.reflect(values, axis)
        return self._restrict(apply_along(ax.diff, apply_along(ax.diff, ext, axis), axis), axis)

    def reflect(self, values, axis=0):
        """Extend point values across the poles onto the doubled colatitude circle."""
        az = self.axes[axis + 1] if axis + 1 < self.ndim else None
        if az is None or az.kind != "periodic" or az.n % 2 or abs(az.length - 2 * np.pi) > 1e-12:
            raise ValueError("a polar axis must be followed by a 2 pi periodic azimuth with even size")
        mirrored = np.flip(np.roll(values, az.n // 2, axis=axis + 1), axis=axis)
        return np.concatenate([values, mirrored], axis=axis)

    def doubled(self):
        """The periodic grid on which :meth:`reflect` lives."""
        axes = list(self.axes)
        for i, a in enumerate(axes):
            if a.kind == "polar":
                axes[i] = Axis("periodic", 2 * a.n, 0.5 * np.pi / a.n, 0.5 * np.pi / a.n + 2 * np.pi)
        return Grid(tuple(axes), name=self.name + "-doubled")

    def _restrict(self, values, axis):
        return np.take(values, np.arange(self.axes[axis].n), axis=axis)


class SampledMap(NamedTuple):
    grid: Grid
    values: np.ndarray


class DegreeResult(NamedTuple):
    raw: float
    rounded: int
    residual: float


def _degree_result(raw):
    r = int(np.rint(raw))
    return DegreeResult(float(raw), r, float(abs(raw - r)))


def periodic_axis(n, period=2 * np.pi, lo=0.0):
    return Axis("periodic", n, lo, lo + period)


def gl_axis(n, lo, hi):
    return Axis("gl", n, lo, hi)


def torus_grid(n1, n2=None, periods=(2 * np.pi, 2 * np.pi)):
    n2 = n1 if n2 is None else n2
    return Grid((periodic_axis(n1, periods[0]), periodic_axis(n2, periods[1])), name="torus")


def polar_axis(n):
    return Axis("polar", n, 0.0, np.pi)


def sphere_grid(n_theta, n_phi=None):
    """Colatitude on a polar axis, azimuth periodic."""
    n_phi = 2 * n_theta if n_phi is None else n_phi
    axes = (polar_axis(n_theta), periodic_axis(n_phi))
    g = Grid(axes, name="sphere")
    theta = g.mesh[0]
    return Grid(axes, density=np.sin(theta), name="sphere")


def sphere_points(grid):
    theta, phi = grid.mesh
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)


def s3_grid(n_psi, n_theta=None, n_phi=None):
    """Chart (psi, theta, phi) of S^3 with z4 = -cos(psi).

    Both polar angles carry Gauss-Legendre nodes in (0, pi); the axis order
    is positively oriented with respect to the outward normal.
    """
    n_theta = n_psi if n_theta is None else n_theta
    n_phi = 2 * n_theta if n_phi is None else n_phi
    axes = (gl_axis(n_psi, 0.0, np.pi), gl_axis(n_theta, 0.0, np.pi), periodic_axis(n_phi))
    psi, theta, _ = Grid(axes).mesh
    return Grid(axes, density=np.sin(psi) ** 2 * np.sin(theta), name="s3")


def s3_points(grid):
    psi, theta, phi = grid.mesh
    sp = np.sin(psi)
    return np.stack([sp * np.sin(theta) * np.cos(phi), sp * np.sin(theta) * np.sin(phi),
                     sp * np.cos(theta), -np.cos(psi)], axis=-1)


def s3_frame(grid):
    """Orthonormal tangent frame (e_psi, e_theta, e_phi) at the nodes of an S^3 grid."""
    psi, theta, phi = grid.mesh
    cp, sp, ct, st, cf, sf = np.cos(psi), np.sin(psi), np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    e_psi = np.stack([cp * st * cf, cp * st * sf, cp * ct, sp], axis=-1)
    e_theta = np.stack([ct * cf, ct * sf, -st, np.zeros_like(psi)], axis=-1)
    e_phi = np.stack([-sf, cf, np.zeros_like(psi), np.zeros_like(psi)], axis=-1)
    return e_psi, e_theta, e_phi


def differentiate(f: SampledMap, axis: int) -> SampledMap:
    return SampledMap(f.grid, f.grid.d(f.values, axis))


def integrate(f: SampledMap) -> float:
    vals = np.asarray(f.values)
    if vals.shape != f.grid.shape:
        raise ValueError("integrate expects a scalar field on the grid")
    return float(np.sum(f.grid.weights * vals))


def degree_integral(f: SampledMap) -> DegreeResult:
    """Degree of a unit-vector field on a closed 2-parameter chart."""
    G = np.asarray(f.values)
    g1 = f.grid.d(G, 0)
    g2 = f.grid.d(G, 1)
    dens = np.sum(G * np.cross(g1, g2), axis=-1)
    raw = np.sum(f.grid.coord_weights * dens) / (4 * np.pi)
    return _degree_result(raw)


def degree_via_lift(n_map: SampledMap) -> DegreeResult:
    """``(1/pi^2) * integral of det(n, d1 n, d2 n, d3 n)`` over a 3-parameter chart."""
    n = np.asarray(n_map.values)
    m = np.stack([n] + [n_map.grid.d(n, k) for k in range(3)], axis=-2)
    dens = np.linalg.det(m)
    raw = np.sum(n_map.grid.coord_weights * dens) / np.pi ** 2
    return _degree_result(raw)


def export_csv(path, grid: Grid, fields: dict):
    """Write node coordinates followed by the named fields, one row per node."""
    coords = [m.ravel() for m in grid.mesh]
    names = ["x%d" % (i + 1) for i in range(grid.ndim)]
    cols = list(coords)
    for key, val in fields.items():
        val = np.asarray(val).reshape(int(np.prod(grid.shape)), -1)
        if val.shape[1] == 1:
            names.append(key)
            cols.append(val[:, 0])
        else:
            names.extend("%s_%d" % (key, j + 1) for j in range(val.shape[1]))
            cols.extend(val.T)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow(["%.17g" % v for v in row])
