"""Acceptance criteria 1 to 14, one PASS/FAIL line per criterion.

Each test records its parts in ``RESULTS``; ``conftest.py`` prints the
per-criterion lines in the terminal summary.  Run directly with
``python3 tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from gaussminmax import canonical, cli, minmax, spheremaps, surface
from gaussminmax.grid import s3_grid, s3_points

EIGHT_PI2 = 8 * np.pi ** 2
RESULTS = {}

TITLES = {
    1: "Clifford torus area and Willmore energy",
    2: "Gauss map degrees",
    3: "A-functional ground states",
    4: "Lagrangian Jacobian C",
    5: "canonical family bound",
    6: "polarization degrees",
    7: "map energies",
    8: "Moebius profiles",
    9: "eigen hierarchy on the circle",
    10: "ellipsoid widths",
    11: "neck and bubble",
    12: "deformation estimate",
    13: "GL gradient check",
    14: "Lagrangian residual",
}


def record(criterion, parts):
    """Store ``(label, value, ok)`` parts and fail the test if any part fails."""
    RESULTS.setdefault(criterion, []).extend(parts)
    bad = [label for label, _, ok in parts if not ok]
    assert not bad, "failed: %s" % ", ".join(bad)


def summary_lines():
    lines = []
    for k in sorted(RESULTS):
        parts = RESULTS[k]
        ok = all(p[2] for p in parts)
        detail = "; ".join("%s=%s%s" % (label, _fmt(v), "" if good else " (FAIL)") for label, v, good in parts)
        lines.append("criterion %2d %s: %s  [%s]" % (k, "PASS" if ok else "FAIL", TITLES[k], detail))
    return lines


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return "%.6g" % v
    return str(v)


@pytest.fixture(scope="module")
def built():
    out = {}
    for kind in ("clifford", "geodesic_sphere"):
        imm = surface.builtin_surface(kind, 128)
        out[kind] = (imm, surface.geometry(imm))
    return out


@pytest.fixture(scope="module")
def clifford_scan(built):
    t0 = time.perf_counter()
    fs = canonical.family_scan(built["clifford"][0], canonical.polar_a_grid(), jobs=-1)
    return fs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sphere_scan():
    imm = surface.builtin_surface("geodesic_sphere", 64)
    return canonical.family_scan(imm, canonical.polar_a_grid(6, 3, 4, 4))


@pytest.fixture(scope="module")
def circle_run():
    man = minmax.circle(128)
    return man, minmax.eigen_hierarchy(man, 3, seed=0)


@pytest.fixture(scope="module")
def ellipsoid_run():
    spec = minmax.EllipsoidSpec(1.0, 1.2, 1.5)
    t0 = time.perf_counter()
    reports = minmax.ellipsoid_widths(spec)
    return spec, reports, time.perf_counter() - t0


def test_criterion_01_clifford_area_willmore():
    t0 = time.perf_counter()
    imm = surface.builtin_surface("clifford", 128)
    geom = surface.geometry(imm)
    area, will = surface.area(imm, geom), surface.willmore(imm, geom)
    dt = time.perf_counter() - t0
    ref = 2 * np.pi ** 2
    record(1, [("area_err", abs(area - ref), abs(area - ref) < 1e-8),
               ("willmore_err", abs(will - ref), abs(will - ref) < 1e-8),
               ("seconds", dt, dt < 1.0)])


def test_criterion_02_gauss_degrees(built):
    cl = surface.gauss_map(*built["clifford"]).degree
    sp = surface.gauss_map(*built["geodesic_sphere"]).degree
    record(2, [("clifford_degree", cl.rounded, cl.rounded == 0), ("clifford_residual", cl.residual, cl.residual < 1e-6),
               ("sphere_degree", sp.rounded, sp.rounded == 1), ("sphere_residual", sp.residual, sp.residual < 1e-6)])


def test_criterion_03_a_functional(built):
    sp = surface.a_functional(surface.gauss_map(*built["geodesic_sphere"]))
    cl = surface.a_functional(surface.gauss_map(*built["clifford"]))
    record(3, [("sphere_err", abs(sp - 16 * np.pi), abs(sp - 16 * np.pi) < 1e-4),
               ("clifford_err", abs(cl - EIGHT_PI2), abs(cl - EIGHT_PI2) < 1e-4)])


def test_criterion_04_sphere_and_bound(built, clifford_scan, sphere_scan):
    imm, geom = built["geodesic_sphere"]
    C = canonical.fields(imm, np.zeros(4), geom).C
    defect = np.max(np.abs(4 * C ** 2 - 1))
    sup_c = max(np.max(clifford_scan[0].max_abs_C), np.max(sphere_scan.max_abs_C))
    record(4, [("sphere_4C2_defect", defect, defect < 1e-8), ("scans_sup_abs_C", sup_c, sup_c <= 0.5 + 1e-9)])


@pytest.mark.xfail(strict=True, reason="C vanishes identically on the Clifford torus; see the decisions ledger")
def test_criterion_04_clifford_4c2(built):
    imm, geom = built["clifford"]
    C = canonical.fields(imm, np.zeros(4), geom).C
    defect = np.max(np.abs(4 * C ** 2 - 1))
    record(4, [("clifford_4C2_defect", defect, defect < 1e-8)])


def test_criterion_05_family_bound(clifford_scan):
    fs, dt = clifford_scan
    top = np.max(fs.A_functional)
    arg = np.linalg.norm(fs.a[fs.argmax()])
    record(5, [("grid_points", len(fs.a), len(fs.a) >= 10 ** 4), ("max_minus_8pi2", top - EIGHT_PI2,
                                                                   top <= EIGHT_PI2 + 1e-4),
               ("argmax_norm", arg, arg == 0.0), ("seconds", dt, dt < 60)])


def test_criterion_06_polarization_degrees():
    parts = []
    for label, d, want in (("boundary", canonical.boundary_lift_degree(), 2),
                           ("sphere", canonical.bubble_lift_degree(surface.builtin_surface("geodesic_sphere", 64)), 2),
                           ("torus", canonical.bubble_lift_degree(surface.builtin_surface("clifford", 64)), 0)):
        parts.append((label + "_degree", d.rounded, d.rounded == want and d.residual < 1e-6))
    record(6, parts)


def test_criterion_07_map_energies():
    grid = s3_grid(64)
    eh = spheremaps.dirichlet_energy(spheremaps.hopf(), grid)
    dens = np.max(np.abs(spheremaps.energy_density(spheremaps.hopf(), s3_points(grid)) - 8))
    ep = spheremaps.dirichlet_energy(spheremaps.pi_projection(), grid)
    er = spheremaps.reduced_integral(0.0)
    record(7, [("hopf_err", abs(eh - 16 * np.pi ** 2), abs(eh - 16 * np.pi ** 2) < 1e-6),
               ("hopf_density_dev", dens, dens < 1e-10),
               ("pi_3d_err", abs(ep - EIGHT_PI2), abs(ep - EIGHT_PI2) < 1e-3),
               ("pi_reduced_err", abs(er - EIGHT_PI2), abs(er - EIGHT_PI2) < 1e-8)])


def test_criterion_08_pi_profile():
    t = np.linspace(0.0, 0.95, 20)
    e = np.array([spheremaps.reduced_integral(x) for x in t])
    record(8, [("pi_decreasing", bool(np.all(np.diff(e) < 0)), bool(np.all(np.diff(e) < 0))),
               ("pi_max_err", abs(e.max() - EIGHT_PI2), abs(e.max() - EIGHT_PI2) < 1e-8 and e.argmax() == 0)])


@pytest.mark.xfail(strict=True, reason="the Hopf profile is 16 pi^2 (1 - |a|^2), not constant; see the decisions ledger")
def test_criterion_08_hopf_constant():
    grid = s3_grid(64)
    vals = [spheremaps.dirichlet_energy(spheremaps.compose(spheremaps.hopf(), r * np.full(4, 0.5)), grid)
            for r in (0.0, 0.3, 0.6, 0.9)]
    spread = max(vals) - min(vals)
    record(8, [("hopf_profile_spread", spread, spread < 1e-4)])


def test_criterion_09_eigen_hierarchy(circle_run):
    man, reports = circle_run
    vals, vecs = man.oracle()
    groups = minmax.eigenspaces(vals, vecs)
    rel = max(abs(r.width - lam) / max(abs(lam), 1.0) for r, (lam, _) in zip(reports, groups))
    excess = cli.nested_family_max(man, 3, samples=10000)
    widths = [r.width for r in reports]
    lower = np.cumsum([0] + [r.multiplicity for r in reports[:-1]])
    index_ok = all(r.morse_index <= n for r, n in zip(reports, lower))
    record(9, [("width_rel_err", rel, rel < 1e-6), ("nested_excess", excess, excess <= 1e-12),
               ("strictly_increasing", bool(np.all(np.diff(widths) > 0)), bool(np.all(np.diff(widths) > 0))),
               ("morse_indices", [r.morse_index for r in reports], index_ok)])


def test_criterion_10_ellipsoid(ellipsoid_run):
    spec, reports, dt = ellipsoid_run
    oracle = minmax.principal_perimeters(spec)
    widths = [r.width for r in reports]
    rel = max(abs(w - o) / o for w, o in zip(widths, oracle))
    record(10, [("max_rel_err", rel, rel < 5e-3),
                ("strictly_ordered", bool(np.all(np.diff(widths) > 0)), bool(np.all(np.diff(widths) > 0))),
                ("seconds", dt, dt < 300)])


def test_criterion_11_neck_bubble(built):
    rows = cli.neck_rows(built["clifford"][0], eta=0.1, delta=0.1)
    bad = [r["bad_set_area"] for r in rows]
    neck = max(r["neck_area"] for r in rows)
    rate = cli.convergence_rate(rows)
    record(11, [("bad_area_decreasing", bool(np.all(np.diff(bad) < 0)), bool(np.all(np.diff(bad) < 0))),
                ("max_neck_area", neck, neck <= 1.1 * 3 * 0.1 ** 2),
                ("error_reduction_per_decade", rate, rate >= 3)])


def test_criterion_12_deformation_estimate(circle_run, ellipsoid_run):
    v_eig = sum(r.violations for r in circle_run[1])
    v_ell = sum(r.violations for r in ellipsoid_run[1])
    steps = sum(r.accepted_steps for r in circle_run[1]) + sum(r.accepted_steps for r in ellipsoid_run[1])
    record(12, [("eigen_violations", v_eig, v_eig == 0), ("ellipsoid_violations", v_ell, v_ell == 0),
                ("accepted_steps", steps, steps > 0)])


def test_criterion_13_gl_gradient():
    err = cli.gl_gradient_error(directions=10)
    record(13, [("max_rel_err", err, err < 1e-5)])


def test_criterion_14_lagrangian(built):
    cl = surface.lagrangian_residual(*built["clifford"])
    sp = surface.lagrangian_residual(*built["geodesic_sphere"])
    imm, geom = built["clifford"]
    b = geom.n + 0.1 * np.sin(imm.grid.mesh[0])[..., None] * imm.grid.d(imm.Phi, 1)
    neg = surface.lagrangian_residual_pair(imm.grid, imm.Phi, b)
    record(14, [("clifford_residual", cl, cl <= 1e-9), ("sphere_residual", sp, sp <= 1e-9),
                ("non_lagrangian_residual", neg, neg > 1e-3)])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
