"""Moebius deformations of minimal surfaces and their Gauss maps.

For a minimal immersion the Gauss map of the deformed surface is described
pointwise by two scalars A (minus the mean curvature of the deformed surface)
and B (the deformed principal curvature), from which the Lagrangian Jacobian
C and the Gauss area density follow in closed form.  The closed forms are
cross-checked against direct spectral differentiation in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import algebra
from .errors import BadParameter, BoundaryParameter, ChartOverflow, NoUniqueProjection, NotMinimal
from .grid import DegreeResult, Grid, SampledMap, degree_via_lift, gl_axis, periodic_axis, s3_grid, s3_points
from .surface import (DiscreteImmersion, GaussMapField, SurfaceGeometry, gauss_field, geometry,
                      is_minimal, pointwise_geometry)

BOUNDARY_TOL = 1e-9
NEWTON_TOL = 1e-10
NEWTON_STEPS = 20
FOCAL_MARGIN = 1e-3


@dataclass(frozen=True)
class MobiusParam:
    """Point ``a`` of the open unit 4-ball, with the companion ``g = -2a/(1+|a|^2)``."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(4)
        object.__setattr__(self, "a", a)
        if not np.linalg.norm(a) < 1 - BOUNDARY_TOL:
            raise BoundaryParameter("|a| = %.12g is too close to the unit sphere" % np.linalg.norm(a))

    @classmethod
    def from_g(cls, g):
        g = np.asarray(g, dtype=float).reshape(4)
        gg = g @ g
        if not gg < 1:
            raise BoundaryParameter("|g| must be < 1")
        return cls(-g / (1 + np.sqrt(1 - gg)))

    @property
    def g(self):
        return -2 * self.a / (1 + self.a @ self.a)

    @property
    def root(self):
        """``sqrt(1 - |g|^2) = (1 - |a|^2) / (1 + |a|^2)``."""
        aa = self.a @ self.a
        return (1 - aa) / (1 + aa)


def _param(a) -> MobiusParam:
    return a if isinstance(a, MobiusParam) else MobiusParam(np.asarray(a, dtype=float))


def mobius(a, z):
    """Image of ``z`` under the conformal involution of S^3 attached to ``a`` and its conformal factor."""
    p = _param(a)
    z = np.asarray(z, dtype=float)
    d = z - p.a
    dd = algebra.dot(d, d)
    conf = (1 - p.a @ p.a) / dd
    return conf[..., None] * d - p.a, conf


def deformed_normal(p: MobiusParam, Phi, n):
    """Unit normal of the deformed surface, from the original position and normal."""
    g = p.g
    gn = algebra.dot(n, g)
    return n - (gn / (1 + algebra.dot(Phi, g)))[..., None] * (Phi - p.a)


def transform(imm: DiscreteImmersion, a, geom: SurfaceGeometry | None = None):
    """Deformed immersion and its normal field on the same grid."""
    p = _param(a)
    geom = geometry(imm) if geom is None else geom
    Phi_g, _ = mobius(p, imm.Phi)
    Phi_g = Phi_g / algebra.norm(Phi_g)[..., None]
    n_g = deformed_normal(p, imm.Phi, geom.n)
    out = DiscreteImmersion(imm.grid, Phi_g, imm.genus, imm.orientation, kind="mobius(%s)" % imm.kind,
                            params={"base": imm.kind, "a": p.a.tolist()})
    return out, SampledMap(imm.grid, n_g)


class CanonicalFields(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    mu: np.ndarray
    dvol_surface: np.ndarray
    dvol_gauss: np.ndarray
    pullback: np.ndarray


def _fields(p: MobiusParam, Phi, n, kappa, sqrt_det):
    g = p.g
    root = p.root
    conf = root / (1 + algebra.dot(Phi, g))
    A = -algebra.dot(g, n) / root
    B = -kappa / conf
    plus, minus = (1 + (A - B) ** 2), (1 + (A + B) ** 2)
    s = np.sqrt(plus * minus)
    dvol_surface = conf ** 2 * sqrt_det
    num = 1 + A * A - B * B
    return CanonicalFields(A, B, num / (2 * s), np.log(conf), dvol_surface, 2 * s * dvol_surface,
                           num * dvol_surface)


def _require_minimal(geom):
    if not is_minimal(geom):
        raise NotMinimal("sup|H| = %.3g; the closed forms need a minimal surface" % float(np.max(np.abs(geom.H))))


def _kappa(geom):
    return np.sqrt(0.5 * geom.A0sq)


def fields(imm: DiscreteImmersion, a, geom: SurfaceGeometry | None = None) -> CanonicalFields:
    """A, B, C, conformal exponent and densities of the deformed Gauss map at the grid nodes."""
    geom = geometry(imm) if geom is None else geom
    _require_minimal(geom)
    return _fields(_param(a), imm.Phi, geom.n, _kappa(geom), geom.sqrt_det)


def deformed_gauss_map(imm: DiscreteImmersion, a, geom: SurfaceGeometry | None = None) -> GaussMapField:
    """Gauss map of the deformed surface computed by spectral differentiation (no closed forms)."""
    imm_g, n_g = transform(imm, a, geom)
    gp = algebra.grass_point(imm_g.Phi, n_g.values, check=False)
    return gauss_field(imm.grid, gp.plus, gp.minus)


class FamilyScan(NamedTuple):
    a: np.ndarray
    g_norm: np.ndarray
    gauss_area: np.ndarray
    degree: np.ndarray
    A_functional: np.ndarray
    min_4C2: np.ndarray
    max_abs_C: np.ndarray

    def argmax(self):
        return int(np.argmax(self.A_functional))


def _scan_chunk(a_chunk, Phi, n, kappa, sqrt_det, w):
    aa = np.sum(a_chunk * a_chunk, axis=1)
    g = -2 * a_chunk / (1 + aa)[:, None]
    root = (1 - aa) / (1 + aa)
    conf = root[:, None] / (1 + Phi @ g.T).T
    A = -(n @ g.T).T / root[:, None]
    B = -kappa[None, :] / conf
    s = np.sqrt((1 + (A - B) ** 2) * (1 + (A + B) ** 2))
    dv = conf ** 2 * sqrt_det[None, :] * w[None, :]
    num = 1 + A * A - B * B
    C = num / (2 * s)
    area = np.sum(2 * s * dv, axis=1)
    deg = np.sum(num * dv, axis=1) / (4 * np.pi)
    return np.sqrt(np.sum(g * g, axis=1)), area, deg, np.min(4 * C * C, axis=1), np.max(np.abs(C), axis=1)


def family_scan(imm: DiscreteImmersion, a_grid, jobs: int = 1, chunk: int = 64,
                geom: SurfaceGeometry | None = None) -> FamilyScan:
    """``A`` of the deformed Gauss maps over a list of ball points."""
    geom = geometry(imm) if geom is None else geom
    _require_minimal(geom)
    a_grid = np.atleast_2d(np.asarray(a_grid, dtype=float))
    if np.any(np.linalg.norm(a_grid, axis=1) >= 1 - BOUNDARY_TOL):
        raise BoundaryParameter("scan points must lie in the open ball")
    Phi = imm.Phi.reshape(-1, 4)
    n = geom.n.reshape(-1, 4)
    kappa = _kappa(geom).ravel()
    sq = geom.sqrt_det.ravel()
    w = imm.grid.coord_weights.ravel()
    pieces = [a_grid[i:i + chunk] for i in range(0, len(a_grid), chunk)]
    if jobs == 1:
        parts = [_scan_chunk(c, Phi, n, kappa, sq, w) for c in pieces]
    else:
        from joblib import Parallel, delayed
        parts = Parallel(n_jobs=jobs)(delayed(_scan_chunk)(c, Phi, n, kappa, sq, w) for c in pieces)
    gn, area, deg, m4, mc = (np.concatenate(x) for x in zip(*parts))
    A_fun = area + 8 * np.pi * np.rint(deg)
    return FamilyScan(a_grid, gn, area, deg, A_fun, m4, mc)


def polar_a_grid(n_radii: int = 20, n_psi: int = 5, n_theta: int = 10, n_phi: int = 10, rho_max: float = 0.9):
    """Ball points ``rho * omega``: the origin, Gauss-Legendre radii in (0, rho_max) plus rho_max,
    times the nodes of a coarse S^3 grid."""
    rho = np.append(gl_axis(n_radii - 1, 0.0, rho_max).nodes, rho_max)
    omega = s3_points(s3_grid(n_psi, n_theta, n_phi)).reshape(-1, 4)
    pts = (rho[:, None, None] * omega[None, :, :]).reshape(-1, 4)
    return np.vstack([np.zeros((1, 4)), pts])


# ---------------------------------------------------------------- bubbles

class BubbleCoords(NamedTuple):
    x: np.ndarray
    t: float
    d: float
    g_norm: float


def _jet_geometry(imm, x):
    if imm.chart is None:
        raise BadParameter("this operation needs an immersion with an analytic chart")
    x = np.asarray(x, dtype=float)
    jet = imm.jet(x[..., 0], x[..., 1])
    return jet, pointwise_geometry(jet, imm.orientation)


def _wrap(imm, x):
    x = np.array(x, dtype=float)
    for i, ax in enumerate(imm.grid.axes):
        if ax.kind == "periodic":
            x[..., i] = ax.lo + np.mod(x[..., i] - ax.lo, ax.length)
    return x


def bubble_coords(imm: DiscreteImmersion, g, geom: SurfaceGeometry | None = None) -> BubbleCoords:
    """Nearest surface point to ``-g/|g|`` and the normal angle of ``-g`` seen from it."""
    g = np.asarray(g, dtype=float)
    gn = float(np.linalg.norm(g))
    if not 0 < gn < 1:
        raise BadParameter("need 0 < |g| < 1")
    p = -g / gn
    geom = geometry(imm) if geom is None else geom
    k = np.unravel_index(np.argmax(algebra.dot(imm.Phi, p)), imm.grid.shape)
    x = np.array([m[k] for m in imm.grid.mesh])
    for _ in range(NEWTON_STEPS):
        jet = imm.jet(x[0], x[1])
        F = np.array([p @ jet.d1, p @ jet.d2])
        if np.max(np.abs(F)) < NEWTON_TOL:
            break
        Hm = np.array([[p @ jet.d11, p @ jet.d12], [p @ jet.d12, p @ jet.d22]])
        try:
            x = x - np.linalg.solve(Hm, F)
        except np.linalg.LinAlgError:
            raise NoUniqueProjection("distance Hessian is singular; the nearest point is not unique")
    else:
        raise NoUniqueProjection("projection did not converge")
    x = _wrap(imm, x)
    jet, pg = _jet_geometry(imm, x)
    cphi, sn = float(p @ jet.Phi), float(p @ pg.n)
    if cphi <= 0:
        raise NoUniqueProjection("point is not in the tubular neighbourhood")
    t = float(np.arctan2(sn, cphi))
    kmax = float(np.max(np.abs(geom.kappa)))
    focal = np.arctan(1 / kmax) if kmax > 0 else np.pi / 2
    if abs(t) >= focal - FOCAL_MARGIN:
        raise NoUniqueProjection("angle %.6g reaches the focal distance %.6g" % (t, focal))
    return BubbleCoords(x, t, float(np.sqrt((1 - gn) + t * t)), gn)


def gauss_at(imm: DiscreteImmersion, a, x):
    """Deformed Gauss map and canonical fields at arbitrary chart points ``x[..., 2]``."""
    p = _param(a)
    jet, pg = _jet_geometry(imm, x)
    Phi_g, _ = mobius(p, jet.Phi)
    n_g = deformed_normal(p, jet.Phi, pg.n)
    gp = algebra.grass_point(Phi_g, n_g, check=False)
    fl = _fields(p, jet.Phi, pg.n, np.sqrt(0.5 * pg.A0sq), pg.sqrt_det)
    return gp, fl


def _conformal_scale(imm, x):
    jet, pg = _jet_geometry(imm, x)
    if not imm.conformal:
        raise BadParameter("bubble analysis needs a conformal chart")
    return float(np.sqrt(pg.metric[0, 0])), jet, pg


def local_disk(imm: DiscreteImmersion, center, radius, breaks=(), n_r=24, n_theta=64, grading=()):
    """Polar quadrature on the metric disk of ``radius`` around a chart point.

    Radial Gauss-Legendre panels split at ``breaks`` and at the geometric
    sequence ``grading``.  Returns chart points, metric radii and weights for
    the surface area element.
    """
    scale, _, _ = _conformal_scale(imm, center)
    cuts = sorted({0.0, float(radius)} | {float(b) for b in list(breaks) + list(grading) if 0 < b < radius})
    r_list, wr_list = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        ax = gl_axis(n_r, lo, hi)
        r_list.append(ax.nodes)
        wr_list.append(ax.weights)
    r = np.concatenate(r_list)
    wr = np.concatenate(wr_list)
    th = periodic_axis(n_theta).nodes
    R, T = np.meshgrid(r, th, indexing="ij")
    off = np.stack([R * np.cos(T), R * np.sin(T)], -1) / scale
    pts = _wrap(imm, np.asarray(center)[None, None, :] + off)
    w = (wr * r)[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None, :]
    return pts, R, w


def _cutoff(r, r0, r1):
    """Smooth step equal to 1 for r <= r0 and 0 for r >= r1."""
    s = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s > 0, np.exp(-1 / np.where(s > 0, s, 1)), 0.0)
        h = np.where(s < 1, np.exp(-1 / np.where(s < 1, 1 - s, 1)), 0.0)
    return h / (f + h)


def _metric_distance(imm, center, pts, scale):
    d = pts - np.asarray(center)
    for i, ax in enumerate(imm.grid.axes):
        if ax.kind == "periodic":
            d[..., i] = (d[..., i] + 0.5 * ax.length) % ax.length - 0.5 * ax.length
    return scale * np.sqrt(np.sum(d * d, axis=-1))


class NeckReport(NamedTuple):
    bubble_area: float
    neck_area: float
    bad_area: float
    total_area: float
    coords: BubbleCoords
    sup_bubble_defect: float


def neck_decomposition(imm: DiscreteImmersion, g, eta: float = 0.1, delta: float = 0.1,
                       inner_radius: float = 0.5, n_r: int = 24, n_theta: int = 96) -> NeckReport:
    """Gauss areas of the bubble, the neck and the set where ``4 C^2 < 1 - delta``.

    A polar grid around the concentration point resolves the small scales;
    the global grid covers the rest through a smooth partition of unity.
    """
    if not (0 < eta < 1 and 0 < delta < 1):
        raise BadParameter("need 0 < eta, delta < 1")
    geom = geometry(imm)
    _require_minimal(geom)
    p = MobiusParam.from_g(g)
    bc = bubble_coords(imm, g, geom)
    scale, _, _ = _conformal_scale(imm, bc.x)
    rb = bc.d / eta
    r0, r1 = 0.6 * inner_radius, inner_radius
    grading = [np.sqrt(1 - bc.g_norm) * 2.0 ** k for k in range(-3, 40)]
    grading += [bc.d * 2.0 ** k for k in range(-3, 40)]
    pts, R, w = local_disk(imm, bc.x, r1, breaks=(rb, eta, r0), n_r=n_r, n_theta=n_theta, grading=grading)
    _, fl = gauss_at(imm, p, pts)
    # the local area weights are metric; the field densities are per chart measure
    jac = scale ** 2
    dens_loc = fl.dvol_gauss / jac * w * _cutoff(R, r0, r1)
    glob = _fields(p, imm.Phi, geom.n, _kappa(geom), geom.sqrt_det)
    rg = _metric_distance(imm, bc.x, np.stack(imm.grid.mesh, -1), scale)
    dens_glob = glob.dvol_gauss * imm.grid.coord_weights * (1 - _cutoff(rg, r0, r1))
    bad_loc = 4 * fl.C ** 2 < 1 - delta
    bad_glob = 4 * glob.C ** 2 < 1 - delta
    bubble = float(np.sum(dens_loc[R <= rb]))
    neck = float(np.sum(dens_loc[(R > rb) & (R <= eta)]))
    bad = float(np.sum(dens_loc[bad_loc]) + np.sum(dens_glob[bad_glob]))
    total = float(np.sum(dens_loc) + np.sum(dens_glob))
    inside = R <= rb
    sup_def = float(np.max(np.abs(4 * fl.C[inside] ** 2 - 1))) if np.any(inside) else 0.0
    return NeckReport(bubble, neck, bad, total, bc, sup_def)


def bubble_limit_frame(alpha, Phi, n, e1, e2, X):
    """Limit Gauss map on a bubble, from the frame (Phi, n, e1, e2) at the concentration point."""
    X = np.asarray(X, dtype=float)
    Xq = X[..., 0, None] * e1 + X[..., 1, None] * e2
    r2 = np.sum(X * X, axis=-1)[..., None]
    lead = (1 - r2) / (1 + r2)
    c, s = np.cos(alpha), np.sin(alpha)
    plus = lead * algebra.left_coords(n, Phi) + 2 * c / (1 + r2) * algebra.left_coords(n, Xq) \
        + 2 * s / (1 + r2) * algebra.left_coords(Phi, Xq)
    minus = lead * algebra.right_coords(n, Phi) + 2 * c / (1 + r2) * algebra.right_coords(n, Xq) \
        + 2 * s / (1 + r2) * algebra.right_coords(Phi, Xq)
    return algebra.GrassPoint(plus, minus)


def surface_frame(imm: DiscreteImmersion, x):
    """``(Phi, n, e1, e2)`` at a chart point, with unit tangents along the chart axes."""
    jet, pg = _jet_geometry(imm, x)
    e1 = jet.d1 / algebra.norm(jet.d1)[..., None]
    e2 = jet.d2 - algebra.dot(jet.d2, e1)[..., None] * e1
    e2 = e2 / algebra.norm(e2)[..., None]
    return jet.Phi, pg.n, e1, e2


def bubble_limit(imm: DiscreteImmersion, alpha, x, X):
    if abs(alpha) > np.pi / 2 + 1e-12:
        raise BadParameter("|alpha| must be at most pi/2")
    return bubble_limit_frame(alpha, *surface_frame(imm, x), X)


def rescaled_gauss(imm: DiscreteImmersion, g, X, coords: BubbleCoords | None = None):
    """Deformed Gauss map read in blown-up coordinates around the concentration point.

    Returns the Grassmann point and the limiting angle alpha.
    """
    coords = bubble_coords(imm, g) if coords is None else coords
    X = np.asarray(X, dtype=float)
    s = np.sqrt(coords.t ** 2 + 2 - 2 * coords.g_norm)
    scale, _, _ = _conformal_scale(imm, coords.x)
    reach = float(np.max(np.linalg.norm(X.reshape(-1, 2), axis=1))) * s
    limit = 0.25 * min(a.length for a in imm.grid.axes) * scale
    if reach > limit:
        raise ChartOverflow("rescaled point leaves the chart (%.3g > %.3g)" % (reach, limit))
    pts = _wrap(imm, coords.x + X * s / scale)
    gp, _ = gauss_at(imm, MobiusParam.from_g(g), pts)
    alpha = float(np.arctan2(coords.t, np.sqrt(2 - 2 * coords.g_norm)))
    return gp, alpha


# ---------------------------------------------------------- polarization lifts

def boundary_lift_degree(n: int = 16):
    """SO(3) degree of ``g -> (y -> g* y g)`` over S^3, through the identity lift."""
    grid = s3_grid(n)
    return degree_via_lift(SampledMap(grid, s3_points(grid)))


def bubble_lift(imm: DiscreteImmersion, n_alpha: int = 16, geom: SurfaceGeometry | None = None) -> SampledMap:
    """``(alpha, x) -> cos(alpha) n(x) - sin(alpha) Phi(x)`` on a circle times the surface grid.

    The angle runs over a full turn, which covers the rotation loop twice;
    the sign of the angle fixes the orientation of the product.
    """
    geom = geometry(imm) if geom is None else geom
    ax = periodic_axis(n_alpha)
    grid = Grid((ax,) + tuple(imm.grid.axes))
    al = ax.nodes.reshape(-1, 1, 1, 1)
    return SampledMap(grid, np.cos(al) * geom.n[None] - np.sin(al) * imm.Phi[None])


def bubble_lift_degree(imm: DiscreteImmersion, n_alpha: int = 16):
    """SO(3) degree of the bubble polarization over S^1 x surface."""
    res = degree_via_lift(bubble_lift(imm, n_alpha))
    half = 0.5 * res.raw
    r = int(np.rint(half))
    return DegreeResult(half, r, abs(half - r))


def bubble_error(imm: DiscreteImmersion, g, X) -> tuple[float, BubbleCoords]:
    """Sup distance between the rescaled deformed Gauss map and its bubble limit at points ``X``."""
    coords = bubble_coords(imm, g)
    gp, alpha = rescaled_gauss(imm, g, X, coords)
    lim = bubble_limit(imm, alpha, coords.x, X)
    err = max(float(np.max(np.abs(gp.plus - lim.plus))), float(np.max(np.abs(gp.minus - lim.minus))))
    return err, coords
