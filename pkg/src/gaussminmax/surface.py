"""Sampled immersions of closed surfaces into S^3 and their Gauss maps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import algebra
from .errors import AmbiguousDegree, BadParameter, DegenerateGaussMetric, DegenerateMetric, NotMinimal
from .grid import DegreeResult, Grid, SampledMap, degree_integral, sphere_grid, torus_grid

MINIMAL_TOL = 1e-6
DEGREE_TOL = 1e-3


class ChartJet(NamedTuple):
    """Position and first/second partial derivatives of a chart."""

    Phi: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d11: np.ndarray
    d12: np.ndarray
    d22: np.ndarray


@dataclass(frozen=True)
class DiscreteImmersion:
    grid: Grid
    Phi: np.ndarray
    genus: int
    orientation: int = 1
    kind: str = "sampled"
    params: dict = field(default_factory=dict)
    chart: Callable | None = field(default=None, compare=False, repr=False)
    conformal: bool = False

    def __post_init__(self):
        if self.Phi.shape != self.grid.shape + (4,):
            raise ValueError("Phi must have shape grid.shape + (4,)")
        if np.max(np.abs(algebra.norm(self.Phi) - 1)) > 1e-12:
            raise ValueError("samples must lie on the unit sphere")

    def jet(self, x1, x2) -> ChartJet:
        if self.chart is None:
            raise ValueError("immersion has no analytic chart")
        return self.chart(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))

    @property
    def periods(self):
        return tuple(a.length if a.kind == "periodic" else None for a in self.grid.axes)


def _flat_torus_chart(r):
    s = np.sqrt(1 - r * r)

    def chart(u1, u2):
        c1, s1 = np.cos(u1 / r), np.sin(u1 / r)
        c2, s2 = np.cos(u2 / s), np.sin(u2 / s)
        z = np.zeros_like(c1 * c2)
        Phi = np.stack([r * c1 + z, r * s1 + z, s * c2 + z, s * s2 + z], axis=-1)
        d1 = np.stack([-s1 + z, c1 + z, z, z], axis=-1)
        d2 = np.stack([z, z, -s2 + z, c2 + z], axis=-1)
        d11 = np.stack([-c1 / r + z, -s1 / r + z, z, z], axis=-1)
        d22 = np.stack([z, z, -c2 / s + z, -s2 / s + z], axis=-1)
        return ChartJet(Phi, d1, d2, d11, np.zeros_like(Phi), d22)

    return chart


def _sphere_frame(axis):
    axis = np.asarray(axis, dtype=float)
    nrm = np.linalg.norm(axis)
    if not nrm > 0:
        raise BadParameter("axis must be nonzero")
    axis = axis / nrm
    q, _ = np.linalg.qr(np.column_stack([axis, np.eye(4)]))
    f = q[:, 1:4].T.copy()
    if np.linalg.det(np.vstack([f, axis])) < 0:
        f[0] = -f[0]
    return f


def _sphere_chart(frame):
    f1, f2, f3 = frame

    def chart(theta, phi):
        st, ct, sf, cf = np.sin(theta)[..., None], np.cos(theta)[..., None], np.sin(phi)[..., None], np.cos(phi)[..., None]
        Phi = st * cf * f1 + st * sf * f2 + ct * f3
        d1 = ct * cf * f1 + ct * sf * f2 - st * f3
        d2 = -st * sf * f1 + st * cf * f2
        d11 = -Phi
        d12 = -ct * sf * f1 + ct * cf * f2
        d22 = -st * cf * f1 - st * sf * f2
        return ChartJet(*np.broadcast_arrays(Phi, d1, d2, d11, d12, d22))

    return chart


def builtin_surface(kind: str, n: int = 128, r: float | None = None, axis=(0, 0, 0, 1)) -> DiscreteImmersion:
    """Closed-form test surfaces sampled on a spectral grid.

    ``flat_torus`` uses the unit-speed chart on [0, 2 pi r) x [0, 2 pi s) with
    s = sqrt(1 - r^2), so the chart is conformal with e^(2 lambda) = 1.  The
    geodesic sphere orthogonal to ``axis`` uses polar coordinates on a
    ``sphere_grid`` with n // 2 colatitudes and n azimuths.
    """
    if kind == "clifford":
        imm = builtin_surface("flat_torus", n=n, r=1 / np.sqrt(2))
        return DiscreteImmersion(imm.grid, imm.Phi, 1, kind="clifford", params={"r": 1 / np.sqrt(2)},
                                 chart=imm.chart, conformal=True)
    if kind == "flat_torus":
        if r is None or not 0 < r < 1:
            raise BadParameter("flat_torus needs 0 < r < 1")
        s = np.sqrt(1 - r * r)
        grid = torus_grid(n, n, periods=(2 * np.pi * r, 2 * np.pi * s))
        chart = _flat_torus_chart(r)
        Phi = chart(*grid.mesh).Phi
        return DiscreteImmersion(grid, Phi, 1, kind="flat_torus", params={"r": float(r)}, chart=chart, conformal=True)
    if kind == "geodesic_sphere":
        frame = _sphere_frame(axis)
        grid = sphere_grid(n // 2 if n >= 16 else n, n)
        chart = _sphere_chart(frame)
        Phi = chart(*grid.mesh).Phi
        return DiscreteImmersion(grid, Phi, 0, kind="geodesic_sphere", params={"axis": list(map(float, axis))},
                                 chart=chart, conformal=False)
    raise BadParameter("unknown surface kind %r" % kind)


class PointGeometry(NamedTuple):
    metric: np.ndarray
    sqrt_det: np.ndarray
    n: np.ndarray
    second: np.ndarray
    H: np.ndarray
    K_ext: np.ndarray
    A0sq: np.ndarray
    kappa: np.ndarray


def pointwise_geometry(jet: ChartJet, orientation: int = 1) -> PointGeometry:
    """Metric, unit normal and second fundamental form from a chart jet.

    The normal ``n`` is the unit vector with ``det(n, Phi, d1 Phi, d2 Phi) > 0``
    (reversed when ``orientation`` is -1).
    """
    Phi, d1, d2, d11, d12, d22 = jet
    g11 = algebra.dot(d1, d1)
    g12 = algebra.dot(d1, d2)
    g22 = algebra.dot(d2, d2)
    det = g11 * g22 - g12 * g12
    if np.any(det < 1e-12):
        raise DegenerateMetric("first fundamental form is degenerate")
    sq = np.sqrt(det)
    n = -orientation * algebra.triple_star(Phi, d1, d2) / sq[..., None]
    h11, h12, h22 = algebra.dot(d11, n), algebra.dot(d12, n), algebra.dot(d22, n)
    H = 0.5 * (g22 * h11 - 2 * g12 * h12 + g11 * h22) / det
    K_ext = (h11 * h22 - h12 * h12) / det
    disc = np.sqrt(np.maximum(H * H - K_ext, 0.0))
    A0sq = 2 * disc ** 2
    metric = np.stack([np.stack([g11, g12], -1), np.stack([g12, g22], -1)], -2)
    second = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)
    kappa = np.stack([H + disc, H - disc], axis=-1)
    return PointGeometry(metric, sq, n, second, H, K_ext, A0sq, kappa)


@dataclass(frozen=True)
class SurfaceGeometry:
    grid: Grid
    metric: np.ndarray
    sqrt_det: np.ndarray
    n: np.ndarray
    second: np.ndarray
    H: np.ndarray
    K_ext: np.ndarray
    K_int: np.ndarray
    A0sq: np.ndarray
    kappa: np.ndarray

    @property
    def dvol(self):
        """Area density with respect to the chart measure."""
        return self.sqrt_det

    @property
    def lam(self):
        """lambda with e^(2 lambda) = sqrt(det g); the conformal factor for conformal charts."""
        return 0.5 * np.log(self.sqrt_det)

    def area(self):
        return float(np.sum(self.grid.coord_weights * self.sqrt_det))


def grid_jet(imm: DiscreteImmersion) -> ChartJet:
    g = imm.grid
    d1 = g.d(imm.Phi, 0)
    d2 = g.d(imm.Phi, 1)
    return ChartJet(imm.Phi, d1, d2, g.dd(imm.Phi, 0), g.d(d1, 1), g.dd(imm.Phi, 1))


def _brioschi(grid, metric):
    E, F, G = metric[..., 0, 0], metric[..., 0, 1], metric[..., 1, 1]
    Eu, Ev = grid.d(E, 0), grid.d(E, 1)
    Fu, Fv = grid.d(F, 0), grid.d(F, 1)
    Gu, Gv = grid.d(G, 0), grid.d(G, 1)
    Evv = grid.d(Ev, 1)
    Guu = grid.d(Gu, 0)
    Fuv = grid.d(Fu, 1)
    m1 = np.stack([
        np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], -1),
        np.stack([Fv - 0.5 * Gu, E, F], -1),
        np.stack([0.5 * Gv, F, G], -1)], -2)
    m2 = np.stack([
        np.stack([np.zeros_like(E), 0.5 * Ev, 0.5 * Gu], -1),
        np.stack([0.5 * Ev, E, F], -1),
        np.stack([0.5 * Gu, F, G], -1)], -2)
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - F * F) ** 2


def geometry(imm: DiscreteImmersion) -> SurfaceGeometry:
    """Curvature data from spectral derivatives of the samples.

    The intrinsic curvature comes from the metric alone (Brioschi formula), so
    comparing it with ``K_ext + 1`` is a genuine test of the Gauss equation.
    """
    pg = pointwise_geometry(grid_jet(imm), imm.orientation)
    polar = [i for i, a in enumerate(imm.grid.axes) if a.kind == "polar"]
    if polar:
        # the metric is only smooth across the poles on the doubled chart
        big = imm.grid.doubled()
        Phi2 = imm.grid.reflect(imm.Phi, polar[0])
        d1, d2 = big.d(Phi2, 0), big.d(Phi2, 1)
        E, F, G = algebra.dot(d1, d1), algebra.dot(d1, d2), algebra.dot(d2, d2)
        metric2 = np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)
        K_int = _brioschi(big, metric2)[: imm.grid.shape[0]]
    else:
        K_int = _brioschi(imm.grid, pg.metric)
    return SurfaceGeometry(imm.grid, pg.metric, pg.sqrt_det, pg.n, pg.second, pg.H, pg.K_ext, K_int,
                           pg.A0sq, pg.kappa)


def area(imm: DiscreteImmersion, geom: SurfaceGeometry | None = None) -> float:
    geom = geometry(imm) if geom is None else geom
    return geom.area()


def willmore(imm: DiscreteImmersion, geom: SurfaceGeometry | None = None) -> float:
    geom = geometry(imm) if geom is None else geom
    return float(np.sum(imm.grid.coord_weights * (1 + geom.H ** 2) * geom.sqrt_det))


def gauss_bonnet(imm: DiscreteImmersion, geom: SurfaceGeometry | None = None) -> float:
    """``(1/2 pi) * integral of K_int``; equals the Euler characteristic."""
    geom = geometry(imm) if geom is None else geom
    return float(np.sum(imm.grid.coord_weights * geom.K_int * geom.sqrt_det) / (2 * np.pi))


def is_minimal(geom: SurfaceGeometry, tol: float = MINIMAL_TOL) -> bool:
    return float(np.max(np.abs(geom.H))) < tol


@dataclass(frozen=True)
class GaussMapField:
    grid: Grid
    plus: np.ndarray
    minus: np.ndarray
    metric: np.ndarray
    dvol: np.ndarray
    degree: DegreeResult

    def area(self):
        return float(np.sum(self.grid.coord_weights * self.dvol))

    def dirichlet_half(self):
        """``(1/2) * integral of |grad G|^2`` in chart coordinates."""
        return float(0.5 * np.sum(self.grid.coord_weights * (self.metric[..., 0, 0] + self.metric[..., 1, 1])))

    def negated(self) -> "GaussMapField":
        return gauss_field(self.grid, -self.plus, -self.minus)


def gauss_field(grid: Grid, plus, minus) -> GaussMapField:
    G = np.concatenate([plus, minus], axis=-1)
    G1, G2 = grid.d(G, 0), grid.d(G, 1)
    m11, m12, m22 = algebra.dot(G1, G1), algebra.dot(G1, G2), algebra.dot(G2, G2)
    metric = np.stack([np.stack([m11, m12], -1), np.stack([m12, m22], -1)], -2)
    dvol = np.sqrt(np.maximum(m11 * m22 - m12 * m12, 0.0))
    deg = degree_integral(SampledMap(grid, plus))
    return GaussMapField(grid, plus, minus, metric, dvol, deg)


def gauss_map(imm: DiscreteImmersion, geom: SurfaceGeometry | None = None) -> GaussMapField:
    geom = geometry(imm) if geom is None else geom
    gp = algebra.grass_point(imm.Phi, geom.n, check=False)
    return gauss_field(imm.grid, gp.plus, gp.minus)


def lagrangian_residual_pair(grid: Grid, a, b) -> float:
    """Sup norm of ``d1 a . d2 b - d2 a . d1 b`` over the nodes."""
    r = algebra.dot(grid.d(a, 0), grid.d(b, 1)) - algebra.dot(grid.d(a, 1), grid.d(b, 0))
    return float(np.max(np.abs(r)))


def lagrangian_residual(imm: DiscreteImmersion, geom: SurfaceGeometry | None = None) -> float:
    geom = geometry(imm) if geom is None else geom
    return lagrangian_residual_pair(imm.grid, imm.Phi, geom.n)


def lagrangian_jacobian(gm: GaussMapField) -> SampledMap:
    """Density C of the pullback of the area form of S^2 by G+ against the Gauss area."""
    dens = np.sum(gm.plus * np.cross(gm.grid.d(gm.plus, 0), gm.grid.d(gm.plus, 1)), axis=-1)
    if np.any(gm.dvol <= 1e-12):
        raise DegenerateGaussMetric("Gauss map area density vanishes")
    return SampledMap(gm.grid, dens / gm.dvol)


def a_functional(gm: GaussMapField) -> float:
    if gm.degree.residual >= DEGREE_TOL:
        raise AmbiguousDegree("degree %.6g is not close to an integer" % gm.degree.raw)
    return gm.area() + 8 * np.pi * gm.degree.rounded


def area_identity_check(imm: DiscreteImmersion, geom: SurfaceGeometry | None = None):
    """``(Area(G), 2 Area(Phi) + 2 Area(n))`` for a minimal immersion."""
    geom = geometry(imm) if geom is None else geom
    if not is_minimal(geom):
        raise NotMinimal("sup|H| = %.3g" % float(np.max(np.abs(geom.H))))
    gm = gauss_map(imm, geom)
    g = imm.grid
    n1, n2 = g.d(geom.n, 0), g.d(geom.n, 1)
    a11, a12, a22 = algebra.dot(n1, n1), algebra.dot(n1, n2), algebra.dot(n2, n2)
    area_n = float(np.sum(g.coord_weights * np.sqrt(np.maximum(a11 * a22 - a12 * a12, 0.0))))
    return gm.area(), 2 * geom.area() + 2 * area_n


def geometry_report(imm: DiscreteImmersion) -> dict:
    geom = geometry(imm)
    gm = gauss_map(imm, geom)
    rep = {
        "kind": imm.kind,
        "params": imm.params,
        "grid": list(imm.grid.shape),
        "area": geom.area(),
        "willmore": willmore(imm, geom),
        "sup_H": float(np.max(np.abs(geom.H))),
        "gauss_equation_residual": float(np.max(np.abs(geom.K_int - geom.K_ext - 1))),
        "euler_characteristic": gauss_bonnet(imm, geom),
        "lagrangian_residual": lagrangian_residual(imm, geom),
        "gauss_area": gm.area(),
        "degree": {"raw": gm.degree.raw, "rounded": gm.degree.rounded, "residual": gm.degree.residual},
    }
    if gm.degree.residual < DEGREE_TOL:
        rep["a_functional"] = a_functional(gm)
    return rep
