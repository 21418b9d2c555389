"""Command-line front end: acceptance checks and plot-ready scans."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass
from functools import cache
from typing import Callable

import click
import numpy as np
import scipy

from . import __version__, canonical, minmax, spheremaps, surface
from .algebra import polar_bubble
from .errors import BadParameter, ConfigError, GaussMinmaxError
from .grid import s3_grid, s3_points

SCHEMA = "gaussminmax.report/1"
SCAN_SCHEMA = "gaussminmax.scan/1"
PROVENANCE = ("claimed", "trivial", "derived-oracle")
COMPARISONS = ("abs", "rel", "at_most", "at_least")
SUITES = ("surface", "canonical", "maps", "eigen", "ellipsoid")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    grid: int | None = None
    tol: float = minmax.GRAD_TOL
    out: str | None = None
    jobs: int = 1
    seed: int = 0
    fmt: str = "json"

    def validate(self):
        if self.grid is not None and (self.grid < 2 or self.grid & (self.grid - 1)):
            raise ConfigError("--grid must be a power of two, got %d" % self.grid)
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.jobs == 0 or self.jobs < -1:
            raise ConfigError("--jobs must be a positive integer or -1")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        return self

    def resolution(self, default):
        return default if self.grid is None else self.grid


def evaluate(expr: str) -> float:
    """Numeric value of a reference constant such as ``"8*pi^2"``."""
    names = {"pi": math.pi, "sqrt": math.sqrt, "log": math.log}
    try:
        return float(eval(expr.replace("^", "**"), {"__builtins__": {}}, names))
    except Exception as exc:
        raise ConfigError("cannot evaluate reference %r" % expr) from exc


@dataclass(frozen=True)
class Check:
    name: str
    compute: Callable[[], float]
    reference: str
    provenance: str
    tolerance: float
    comparison: str = "abs"

    def run(self) -> dict:
        ref = evaluate(self.reference)
        rec = {"name": self.name, "value": None, "reference": self.reference, "reference_value": ref,
               "provenance": self.provenance, "tolerance": self.tolerance, "comparison": self.comparison,
               "pass": False}
        try:
            value = float(self.compute())
        except GaussMinmaxError as exc:
            rec["error"] = "%s: %s" % (type(exc).__name__, exc)
            return rec
        rec["value"] = value
        rec["pass"] = bool(compare(value, ref, self.tolerance, self.comparison))
        return rec


def compare(value, ref, tol, how):
    if not np.isfinite(value):
        return False
    if how == "abs":
        return abs(value - ref) <= tol
    if how == "rel":
        return abs(value - ref) <= tol * abs(ref)
    if how == "at_most":
        return value <= ref + tol
    if how == "at_least":
        return value >= ref - tol
    raise ValueError("unknown comparison %r" % how)


# ---------------------------------------------------------------- suites

def surface_checks(cfg: RunConfig):
    n = cfg.resolution(128)

    @cache
    def built(kind):
        imm = surface.builtin_surface(kind, n)
        return imm, surface.geometry(imm)

    def gauss(kind):
        imm, geom = built(kind)
        return surface.gauss_map(imm, geom)

    def sup_4c2_defect():
        imm, geom = built("geodesic_sphere")
        return np.max(np.abs(4 * canonical.fields(imm, np.zeros(4), geom).C ** 2 - 1))

    def clifford_sup_c():
        imm, geom = built("clifford")
        return np.max(np.abs(canonical.fields(imm, np.zeros(4), geom).C))

    def non_lagrangian():
        imm, geom = built("clifford")
        u1 = imm.grid.mesh[0]
        b = geom.n + 0.1 * np.sin(u1)[..., None] * imm.grid.d(imm.Phi, 1)
        return surface.lagrangian_residual_pair(imm.grid, imm.Phi, b)

    def area_identity(kind):
        gauss_area, pieces = surface.area_identity_check(*built(kind))
        return gauss_area - pieces

    cl, sp = "clifford", "geodesic_sphere"
    return [
        Check("clifford_area", lambda: surface.area(*built(cl)), "2*pi^2", "claimed", 1e-8),
        Check("clifford_willmore", lambda: surface.willmore(*built(cl)), "2*pi^2", "claimed", 1e-8),
        Check("clifford_sup_mean_curvature", lambda: np.max(np.abs(built(cl)[1].H)), "0", "trivial", 1e-6),
        Check("sphere_sup_mean_curvature", lambda: np.max(np.abs(built(sp)[1].H)), "0", "trivial", 1e-6),
        Check("clifford_gauss_equation_residual",
              lambda: np.max(np.abs(built(cl)[1].K_int - built(cl)[1].K_ext - 1)), "0", "trivial", 1e-8),
        Check("sphere_gauss_equation_residual",
              lambda: np.max(np.abs(built(sp)[1].K_int - built(sp)[1].K_ext - 1)), "0", "trivial", 1e-6),
        Check("clifford_euler_characteristic", lambda: surface.gauss_bonnet(*built(cl)), "0", "trivial", 1e-6),
        Check("sphere_euler_characteristic", lambda: surface.gauss_bonnet(*built(sp)), "2", "trivial", 1e-6),
        Check("clifford_gauss_degree", lambda: gauss(cl).degree.raw, "0", "claimed", 1e-6),
        Check("sphere_gauss_degree", lambda: gauss(sp).degree.raw, "1", "claimed", 1e-6),
        Check("clifford_A_functional", lambda: surface.a_functional(gauss(cl)), "8*pi^2", "claimed", 1e-4),
        Check("sphere_A_functional", lambda: surface.a_functional(gauss(sp)), "16*pi", "claimed", 1e-4),
        Check("clifford_gauss_area_identity", lambda: area_identity(cl), "0", "derived-oracle", 1e-8),
        Check("sphere_gauss_area_identity", lambda: area_identity(sp), "0", "derived-oracle", 1e-8),
        Check("sphere_sup_4C2_defect", sup_4c2_defect, "0", "claimed", 1e-8),
        Check("clifford_sup_abs_C", clifford_sup_c, "1/2", "claimed", 1e-9, "at_most"),
        Check("clifford_lagrangian_residual", lambda: surface.lagrangian_residual(*built(cl)), "0", "claimed", 1e-9,
              "at_most"),
        Check("sphere_lagrangian_residual", lambda: surface.lagrangian_residual(*built(sp)), "0", "claimed", 1e-9,
              "at_most"),
        Check("non_lagrangian_pair_residual", non_lagrangian, "1e-3", "trivial", 0.0, "at_least"),
    ]


NECK_RAY = (1e-2, 1e-3, 1e-4)
NECK_POINT = (0.3, 0.7)


def neck_rows(imm, ray=NECK_RAY, eta=0.1, delta=0.1, x0=NECK_POINT):
    """Neck decomposition and rescaled error along ``g = -(1 - eps) Phi(x0)``."""
    Phi = imm.jet(*x0).Phi
    side = np.linspace(-3, 3, 13)
    X = np.stack(np.meshgrid(side, side, indexing="ij"), -1)
    rows = []
    for eps in ray:
        g = -(1 - eps) * Phi
        rep = canonical.neck_decomposition(imm, g, eta=eta, delta=delta)
        err, coords = canonical.bubble_error(imm, g, X)
        rows.append({"one_minus_g_norm": eps, "bubble_scale_d": coords.d, "bubble_area": rep.bubble_area,
                     "neck_area": rep.neck_area, "bad_set_area": rep.bad_area,
                     "total_gauss_area": rep.total_area, "sup_bubble_4C2_defect": rep.sup_bubble_defect,
                     "rescaled_sup_error": err})
    return rows


def convergence_rate(rows):
    """Smallest error reduction factor per decade of the bubble scale."""
    rates = []
    for a, b in zip(rows[:-1], rows[1:]):
        decades = math.log10(a["bubble_scale_d"] / b["bubble_scale_d"])
        rates.append((a["rescaled_sup_error"] / b["rescaled_sup_error"]) ** (1 / decades))
    return min(rates)


def canonical_checks(cfg: RunConfig):
    n = cfg.resolution(128)

    @cache
    def built(kind):
        return surface.builtin_surface(kind, n)

    @cache
    def scan():
        return canonical.family_scan(built("clifford"), canonical.polar_a_grid(), jobs=cfg.jobs)

    @cache
    def necks():
        return tuple(neck_rows(built("clifford")))

    def bad_decreasing():
        bad = [r["bad_set_area"] for r in necks()]
        return float(all(b < a for a, b in zip(bad[:-1], bad[1:])))

    def closes():
        imm = built("clifford")
        jet = imm.jet(0.3, 0.7)
        n_ = surface.pointwise_geometry(jet).n
        return np.max(np.abs(polar_bubble(-np.pi / 2, jet.Phi, n_) - polar_bubble(np.pi / 2, jet.Phi, n_)))

    return [
        Check("family_max_A_functional", lambda: np.max(scan().A_functional), "8*pi^2", "claimed", 1e-4, "at_most"),
        Check("family_argmax_norm", lambda: np.linalg.norm(scan().a[scan().argmax()]), "0", "claimed", 0.0),
        Check("family_sup_abs_C", lambda: np.max(scan().max_abs_C), "1/2", "claimed", 1e-9, "at_most"),
        Check("family_degree_residual", lambda: np.max(np.abs(scan().degree - np.rint(scan().degree))), "0",
              "derived-oracle", 1e-6, "at_most"),
        Check("boundary_polarization_degree", lambda: canonical.boundary_lift_degree().raw, "2", "claimed", 1e-6),
        Check("sphere_bubble_polarization_degree",
              lambda: canonical.bubble_lift_degree(surface.builtin_surface("geodesic_sphere", min(n, 64))).raw,
              "2", "claimed", 1e-6),
        Check("clifford_bubble_polarization_degree",
              lambda: canonical.bubble_lift_degree(surface.builtin_surface("clifford", min(n, 64))).raw,
              "0", "claimed", 1e-6),
        Check("bubble_polarization_closes", closes, "0", "claimed", 1e-12),
        Check("neck_bad_area_decreasing", bad_decreasing, "1", "claimed", 0.0),
        Check("neck_max_area", lambda: max(r["neck_area"] for r in necks()), "1.1*3*0.1^2", "claimed", 0.0,
              "at_most"),
        Check("bubble_error_reduction_per_decade", lambda: convergence_rate(necks()), "3", "claimed", 0.0,
              "at_least"),
    ]


def gl_gradient_error(n=16, eps=0.7, seed=0, directions=10, h=1e-5):
    """Largest relative mismatch between the GL gradient and central differences."""
    grid = s3_grid(n)
    rng = np.random.default_rng(seed)
    u = spheremaps.sample(spheremaps.hopf(), grid) + 0.3 * rng.standard_normal(grid.shape + (3,))
    G = spheremaps.gl_gradient(spheremaps.GLState(grid, u, eps))
    worst = 0.0
    for _ in range(directions):
        v = rng.standard_normal(u.shape)
        up = spheremaps.gl_energy(spheremaps.GLState(grid, u + h * v, eps))
        dn = spheremaps.gl_energy(spheremaps.GLState(grid, u - h * v, eps))
        an = float(np.sum(grid.weights[..., None] * G * v))
        worst = max(worst, abs((up - dn) / (2 * h) - an) / abs(an))
    return worst


PI_PROFILE_T = tuple(np.round(np.linspace(0.0, 0.95, 20), 10))
HOPF_PROFILE_A = (0.0, 0.3, 0.6, 0.9)


def maps_checks(cfg: RunConfig):
    n = cfg.resolution(64)

    @cache
    def grid():
        return s3_grid(n)

    def hopf_density():
        z = s3_points(grid())
        return np.max(np.abs(spheremaps.energy_density(spheremaps.hopf(), z) - 8))

    def pi_monotone():
        e = [spheremaps.reduced_integral(t) for t in PI_PROFILE_T]
        return float(all(b < a for a, b in zip(e[:-1], e[1:])))

    def hopf_profile_defect():
        worst = 0.0
        for r in HOPF_PROFILE_A:
            a = r * np.array([0.5, 0.5, 0.5, 0.5])
            e = spheremaps.dirichlet_energy(spheremaps.compose(spheremaps.hopf(), a), grid())
            worst = max(worst, abs(e - float(spheremaps.hopf_profile_exact(r))))
        return worst

    def gl_hopf():
        g = s3_grid(min(n, 32))
        return spheremaps.gl_energy(spheremaps.GLState(g, spheremaps.sample(spheremaps.hopf(), g), 0.1))

    def monotone_f():
        rep = spheremaps.monotonicity_certificate(0.5, np.geomspace(1.001, 1e3, 400))
        return float(rep.min_slope_f > 0 and rep.max_slope_g < 0)

    return [
        Check("E_hopf", lambda: spheremaps.dirichlet_energy(spheremaps.hopf(), grid()), "16*pi^2", "claimed", 1e-6),
        Check("hopf_density_deviation", hopf_density, "0", "claimed", 1e-10),
        Check("E_pi", lambda: spheremaps.dirichlet_energy(spheremaps.pi_projection(), grid()), "8*pi^2", "claimed",
              1e-3),
        Check("E_pi_reduced", lambda: spheremaps.reduced_integral(0.0), "8*pi^2", "claimed", 1e-8),
        Check("E_pi_slices", lambda: spheremaps.slice_reduction(0.0), "8*pi^2", "derived-oracle", 1e-8),
        Check("pi_profile_decreasing", pi_monotone, "1", "claimed", 0.0),
        Check("hopf_profile_closed_form_defect", hopf_profile_defect, "0", "derived-oracle", 1e-8),
        Check("E_constant", lambda: spheremaps.dirichlet_energy(spheremaps.MapField("constant"), grid()), "0",
              "trivial", 1e-12),
        Check("reduction_monotonicity", monotone_f, "1", "claimed", 0.0),
        Check("gl_energy_hopf", gl_hopf, "8*pi^2", "derived-oracle", 1e-8),
        Check("gl_gradient_relative_error", lambda: gl_gradient_error(seed=cfg.seed), "0", "derived-oracle", 1e-5,
              "at_most"),
    ]


def _eigen_levels(manifold, reports):
    vals, vecs = manifold.oracle()
    return minmax.eigenspaces(vals, vecs)[:len(reports)]


def nested_family_max(manifold, levels, samples=2000, seed=0):
    """Largest energy over random samples of the explicit nested family, minus its top eigenvalue."""
    groups = _eigen_levels(manifold, range(levels))
    bases = [b for _, b in groups]
    rng = np.random.default_rng(seed)
    rots = minmax.random_rotations([b.shape[1] for b in bases[1:-1]], samples, rng)
    t = rng.uniform(-1, 1, (samples, levels))
    F = minmax.eigen_nested_family(manifold, bases, t, rots)
    E = manifold.energy().value(F / np.sqrt(np.sum((F @ manifold.mass) * F, 1))[:, None])
    return float(np.max(E) - groups[-1][0])


def eigen_checks(cfg: RunConfig):
    n = cfg.resolution(128)
    man = minmax.circle(n)

    @cache
    def reports():
        return tuple(minmax.eigen_hierarchy(man, 3, seed=cfg.seed, tol=cfg.tol))

    def level_value(k):
        return _eigen_levels(man, reports())[k][0]

    def lower_dim(k):
        return sum(r.multiplicity for r in reports()[:k])

    out = []
    for k in range(3):
        out.append(Check("eigen_width_%d_relative_error" % (k + 1),
                         lambda k=k: abs(reports()[k].width - level_value(k)) / max(abs(level_value(k)), 1.0),
                         "0", "derived-oracle", 1e-6, "at_most"))
    for k in range(3):
        out.append(Check("eigen_morse_index_%d_excess" % (k + 1),
                         lambda k=k: (reports()[k].morse_index if reports()[k].morse_index is not None else math.inf)
                         - lower_dim(k), "0", "claimed", 0.0, "at_most"))
    out += [
        Check("eigen_widths_strictly_increasing",
              lambda: float(np.all(np.diff([r.width for r in reports()]) > 0)), "1", "claimed", 0.0),
        Check("eigen_nested_family_excess", lambda: nested_family_max(man, 3, seed=cfg.seed), "0",
              "derived-oracle", 1e-12, "at_most"),
        Check("eigen_deformation_violations", lambda: sum(r.violations for r in reports()), "0", "claimed", 0.0),
    ]
    return out


DEFAULT_ELLIPSOID = (1.0, 1.2, 1.5)


def ellipsoid_checks(cfg: RunConfig, axes=DEFAULT_ELLIPSOID):
    n = cfg.resolution(128)
    spec = minmax.EllipsoidSpec(*axes)

    @cache
    def reports():
        return tuple(minmax.ellipsoid_widths(spec, n=n, tol=cfg.tol))

    oracle = minmax.principal_perimeters(spec)
    out = [Check("ellipsoid_width_%d" % (k + 1), lambda k=k: reports()[k].width, repr(oracle[k]),
                 "derived-oracle", 5e-3, "rel") for k in range(3)]
    out += [
        Check("ellipsoid_widths_strictly_increasing",
              lambda: float(np.all(np.diff([r.width for r in reports()]) > 0)), "1", "claimed", 0.0),
        Check("ellipsoid_deformation_violations", lambda: sum(r.violations for r in reports()), "0", "claimed", 0.0),
    ]
    return out


SUITE_CHECKS = {"surface": surface_checks, "canonical": canonical_checks, "maps": maps_checks,
                "eigen": eigen_checks, "ellipsoid": ellipsoid_checks}


def environment():
    return {"package": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def run_suite(suite: str, cfg: RunConfig, timing: bool = False) -> dict:
    names = SUITES if suite == "all" else (suite,)
    records, times = [], {}
    for name in names:
        t0 = time.perf_counter()
        records += [c.run() for c in SUITE_CHECKS[name](cfg)]
        times[name] = time.perf_counter() - t0
    failed = sum(not r["pass"] for r in records)
    report = {"schema": SCHEMA, "command": "verify", "suite": suite,
              "config": {k: v for k, v in asdict(cfg).items() if k not in ("out", "fmt")},
              "environment": environment(), "records": records,
              "summary": {"total": len(records), "passed": len(records) - failed, "failed": failed},
              "pass": failed == 0}
    if timing:
        report["timing_seconds"] = times
    return report


# ---------------------------------------------------------------- output

RECORD_COLUMNS = ("name", "value", "reference", "reference_value", "provenance", "tolerance", "comparison", "pass",
                  "error")


def _cell(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError("cannot serialize %r" % type(v))


def emit(text: str, path: str | None):
    if path is None:
        click.echo(text, nl=False)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise click.FileError(path, hint=str(exc))


# ---------------------------------------------------------------- scans

FAMILY_COLUMNS = ("a_1", "a_2", "a_3", "a_4", "g_norm", "gauss_area", "gauss_degree", "A_functional",
                  "min_4C_squared", "max_abs_C")
FAMILY_REFERENCE = {"clifford": "8*pi^2", "geodesic_sphere": "16*pi"}


def scan_family(cfg, surface_kind, rho_max):
    imm = surface.builtin_surface(surface_kind, cfg.resolution(128))
    fs = canonical.family_scan(imm, canonical.polar_a_grid(rho_max=rho_max), jobs=cfg.jobs)
    rows = [dict(zip(FAMILY_COLUMNS, (*a, g, ar, d, A, m4, mc)))
            for a, g, ar, d, A, m4, mc in zip(fs.a, fs.g_norm, fs.gauss_area, fs.degree, fs.A_functional,
                                             fs.min_4C2, fs.max_abs_C)]
    i = fs.argmax()
    ref = FAMILY_REFERENCE[surface_kind]
    summary = {"surface": surface_kind, "points": len(rows), "max_A_functional": float(fs.A_functional[i]),
               "argmax_a": fs.a[i].tolist(), "reference": ref, "reference_value": evaluate(ref),
               "sup_abs_C": float(np.max(fs.max_abs_C))}
    return rows, FAMILY_COLUMNS, summary


NECK_COLUMNS = ("one_minus_g_norm", "bubble_scale_d", "bubble_area", "neck_area", "bad_set_area", "total_gauss_area",
                "sup_bubble_4C2_defect", "rescaled_sup_error")


def scan_neck(cfg, ray, eta, delta):
    imm = surface.builtin_surface("clifford", cfg.resolution(128))
    rows = neck_rows(imm, ray, eta, delta)
    bad = [r["bad_set_area"] for r in rows]
    summary = {"eta": eta, "delta": delta, "neck_area_bound": "1.1*3*eta^2",
               "max_neck_area": max(r["neck_area"] for r in rows),
               "bad_area_decreasing": all(b < a for a, b in zip(bad[:-1], bad[1:])),
               "error_reduction_per_decade": convergence_rate(rows) if len(rows) > 1 else None}
    return rows, NECK_COLUMNS, summary


def scan_profile(cfg, map_kind, points):
    n = cfg.resolution(64)
    grid = s3_grid(n)
    rows = []
    if map_kind == "pi":
        cols = ("t", "energy_reduced", "energy_slices", "energy_3d")
        for t in np.linspace(0.0, 0.95, points):
            m = spheremaps.compose(spheremaps.pi_projection(), [t, 0, 0, 0])
            rows.append({"t": float(t), "energy_reduced": spheremaps.reduced_integral(t),
                         "energy_slices": spheremaps.slice_reduction(t),
                         "energy_3d": spheremaps.dirichlet_energy(m, grid)})
        key, ref = "energy_reduced", "8*pi^2"
    else:
        cols = ("a_norm", "energy_3d", "energy_closed_form")
        for r in np.linspace(0.0, 0.9, points):
            m = spheremaps.compose(spheremaps.hopf(), [r, 0, 0, 0])
            rows.append({"a_norm": float(r), "energy_3d": spheremaps.dirichlet_energy(m, grid),
                         "energy_closed_form": float(spheremaps.hopf_profile_exact(r))})
        key, ref = "energy_3d", "16*pi^2"
    e = [r[key] for r in rows]
    summary = {"map": map_kind, "value_at_zero": e[0], "reference_at_zero": ref, "reference_value": evaluate(ref),
               "decreasing": all(b < a for a, b in zip(e[:-1], e[1:])), "argmax": int(np.argmax(e))}
    return rows, cols, summary


WIDTH_COLUMNS = ("level", "width", "oracle_width", "relative_error", "morse_index", "nullity", "multiplicity",
                 "iterations", "grad_norm", "grad_tol", "accepted_steps", "violations", "worst_path_ratio")
TRACE_COLUMNS = ("level", "iteration", "max_width")


def _report_json(rep: minmax.MinmaxReport):
    return {"width": rep.width, "energy": rep.energy, "argmax": rep.argmax.tolist(), "grad_norm": rep.grad_norm,
            "grad_tol": rep.grad_tol, "morse_index": rep.morse_index, "nullity": rep.nullity,
            "iterations": rep.iterations, "accepted_steps": rep.accepted_steps, "violations": rep.violations,
            "worst_path_ratio": rep.worst_ratio, "multiplicity": rep.multiplicity,
            "constraint_residual": rep.candidate.residual}


def scan_widths(cfg, ellipsoid, manifold, levels):
    if ellipsoid is not None:
        spec = minmax.EllipsoidSpec(*ellipsoid)
        reports = minmax.ellipsoid_widths(spec, n=cfg.resolution(128), tol=cfg.tol)
        oracle = minmax.principal_perimeters(spec)
        setting = {"ellipsoid": list(spec.axes)}
    else:
        man = minmax.circle(cfg.resolution(128)) if manifold == "circle" else minmax.flat_torus(cfg.resolution(32))
        reports = minmax.eigen_hierarchy(man, levels, seed=cfg.seed, tol=cfg.tol)
        oracle = [v for v, _ in _eigen_levels(man, reports)]
        setting = {"manifold": manifold, "n": man.n}
    rows, trace = [], []
    for k, (rep, orc) in enumerate(zip(reports, oracle), 1):
        rows.append({"level": k, "width": rep.width, "oracle_width": float(orc),
                     "relative_error": abs(rep.width - orc) / max(abs(orc), 1.0), "morse_index": rep.morse_index,
                     "nullity": rep.nullity, "multiplicity": rep.multiplicity, "iterations": rep.iterations,
                     "grad_norm": rep.grad_norm, "grad_tol": rep.grad_tol, "accepted_steps": rep.accepted_steps,
                     "violations": rep.violations, "worst_path_ratio": rep.worst_ratio})
        trace += [{"level": k, "iteration": i, "max_width": w} for i, w in enumerate(rep.trace)]
    summary = dict(setting, reports=[_report_json(r) for r in reports],
                   strictly_increasing=bool(np.all(np.diff([r.width for r in reports]) > 0)))
    return rows, WIDTH_COLUMNS, summary, trace


# ---------------------------------------------------------------- click glue

def _common(f):
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
                     help="Output format.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized checks.")(f)
    f = click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes (-1 for all).")(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")(f)
    f = click.option("--tol", type=float, default=minmax.GRAD_TOL, show_default=True,
                     help="Gradient tolerance of the minmax solvers.")(f)
    f = click.option("--grid", type=int, default=None, help="Main resolution (power of two).")(f)
    return f


def _config(command, grid, tol, out, jobs, seed, fmt):
    try:
        return RunConfig(command, grid, tol, out, jobs, seed, fmt).validate()
    except ConfigError as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
@click.version_option(__version__)
def main():
    """Numerical checks for Gauss maps of surfaces in S^3 and minmax widths."""


@main.command()
@click.argument("suite", type=click.Choice(("all",) + SUITES), default="all")
@click.option("--timing", is_flag=True, help="Include wall-clock times (makes output run-dependent).")
@_common
def verify(suite, timing, grid, tol, out, jobs, seed, fmt):
    """Run the acceptance checks of SUITE and report each one."""
    cfg = _config("verify", grid, tol, out, jobs, seed, fmt or "json")
    report = run_suite(suite, cfg, timing)
    if cfg.fmt == "csv":
        emit(to_csv(report["records"], RECORD_COLUMNS), out)
    else:
        emit(to_json(report), out)
    for r in report["records"]:
        if not r["pass"]:
            click.echo("FAIL %s: value=%s reference=%s %s" % (r["name"], r["value"], r["reference"],
                                                             r.get("error", "")), err=True)
    sys.exit(EXIT_PASS if report["pass"] else EXIT_FAIL)


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers")


@main.command()
@click.argument("kind", type=click.Choice(["family", "neck", "profile", "widths"]))
@click.option("--surface", "surface_kind", type=click.Choice(["clifford", "geodesic_sphere"]), default="clifford",
              show_default=True)
@click.option("--rho-max", type=float, default=0.9, show_default=True, help="Largest |a| of the family grid.")
@click.option("--ray", default="1e-2,1e-3,1e-4", show_default=True, help="Values of 1-|g| for the neck scan.")
@click.option("--eta", type=float, default=0.1, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--map", "map_kind", type=click.Choice(["pi", "hopf"]), default="pi", show_default=True)
@click.option("--points", type=int, default=20, show_default=True, help="Profile sample count.")
@click.option("--ellipsoid", default=None, help="Semi-axes a,b,c with a <= b <= c.")
@click.option("--manifold", type=click.Choice(["circle", "torus"]), default="circle", show_default=True)
@click.option("--levels", type=int, default=3, show_default=True)
@click.option("--summary", type=click.Path(dir_okay=False), default=None,
              help="Summary JSON path (default: next to --out, else stderr).")
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="CSV of the per-iteration maximal width (widths scan).")
@_common
def scan(kind, surface_kind, rho_max, ray, eta, delta, map_kind, points, ellipsoid, manifold, levels, summary, trace,
         grid, tol, out, jobs, seed, fmt):
    """Write a plot-ready table for KIND and a JSON summary."""
    cfg = _config("scan", grid, tol, out, jobs, seed, fmt or "csv")
    trace_rows = None
    try:
        if kind == "family":
            rows, cols, summ = scan_family(cfg, surface_kind, rho_max)
        elif kind == "neck":
            rows, cols, summ = scan_neck(cfg, _floats(ray), eta, delta)
        elif kind == "profile":
            if points < 2:
                raise ConfigError("--points must be at least 2")
            rows, cols, summ = scan_profile(cfg, map_kind, points)
        else:
            axes = _floats(ellipsoid) if ellipsoid else None
            if axes is not None and len(axes) != 3:
                raise ConfigError("--ellipsoid needs three semi-axes")
            rows, cols, summ, trace_rows = scan_widths(cfg, axes, manifold, levels)
    except (ConfigError, BadParameter) as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(EXIT_CONFIG)
    except GaussMinmaxError as exc:
        click.echo("error: %s: %s" % (type(exc).__name__, exc), err=True)
        sys.exit(EXIT_FAIL)
    doc = {"schema": SCAN_SCHEMA, "command": "scan", "kind": kind,
           "config": {k: v for k, v in asdict(cfg).items() if k not in ("out", "fmt")},
           "environment": environment(), "columns": list(cols), "summary": summ}
    if cfg.fmt == "json":
        doc["rows"] = rows
        emit(to_json(doc), out)
    else:
        emit(to_csv(rows, cols), out)
        text = to_json(doc)
        path = summary or (out.rsplit(".", 1)[0] + ".summary.json" if out else None)
        if path is None:
            click.echo(text, err=True, nl=False)
        else:
            emit(text, path)
    if trace is not None and trace_rows is not None:
        emit(to_csv(trace_rows, TRACE_COLUMNS), trace)
