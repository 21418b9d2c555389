import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussminmax import algebra as al
from gaussminmax import surface
from gaussminmax.errors import AmbiguousDegree, BadParameter, DegenerateMetric, NotMinimal
from gaussminmax.grid import torus_grid

TWO_PI2 = 2 * np.pi ** 2


def flat_torus_mean_curvature(r):
    # principal curvatures -s/r and r/s of the product of circles of radii r, s
    s = np.sqrt(1 - r * r)
    return (1 - 2 * r * r) / (2 * r * s)


def flat_torus_willmore(r):
    # area 4 pi^2 r s times 1 + H^2, which simplifies since 4 r^2 s^2 + (1 - 2 r^2)^2 = 1
    return np.pi ** 2 / (r * np.sqrt(1 - r * r))


def sheared_clifford(n=64):
    """The Clifford torus in the non-conformal chart (u, v) -> (u, u + v)."""
    g = torus_grid(n)
    u, v = g.mesh
    Phi = np.stack([np.cos(u), np.sin(u), np.cos(u + v), np.sin(u + v)], -1) / np.sqrt(2)
    return surface.DiscreteImmersion(g, Phi, 1)


def test_clifford_area_and_willmore(clifford):
    imm, geom = clifford
    assert abs(surface.area(imm, geom) - TWO_PI2) < 1e-10
    assert abs(surface.willmore(imm, geom) - TWO_PI2) < 1e-8


def test_sphere_area_and_willmore(sphere):
    imm, geom = sphere
    assert abs(surface.area(imm, geom) - 4 * np.pi) < 1e-8
    assert abs(surface.willmore(imm, geom) - 4 * np.pi) < 1e-8


def test_flat_torus_samples_are_unit():
    imm = surface.builtin_surface("flat_torus", 32, r=0.3)
    assert np.max(np.abs(al.norm(imm.Phi) - 1)) < 1e-15


@pytest.mark.parametrize("r", [0.2, 0.3, 0.5, 0.6, 0.8])
def test_flat_torus_mean_curvature(r):
    imm = surface.builtin_surface("flat_torus", 32, r=r)
    geom = surface.geometry(imm)
    assert np.max(np.abs(np.abs(geom.H) - abs(flat_torus_mean_curvature(r)))) < 1e-9
    assert np.max(np.abs(geom.K_int)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(0.15, 0.85))
def test_willmore_of_flat_tori(r):
    imm = surface.builtin_surface("flat_torus", 32, r=r)
    w = surface.willmore(imm)
    assert abs(w - flat_torus_willmore(r)) < 1e-7 * w
    assert w >= TWO_PI2 - 1e-8


def test_flat_torus_willmore_exceeds_minimum():
    assert surface.willmore(surface.builtin_surface("flat_torus", 64, r=0.6)) > TWO_PI2


def test_bad_parameters():
    with pytest.raises(BadParameter):
        surface.builtin_surface("flat_torus", 32, r=1.2)
    with pytest.raises(BadParameter):
        surface.builtin_surface("klein_bottle", 32)


def test_degenerate_metric_raises():
    g = torus_grid(16)
    Phi = np.broadcast_to([1.0, 0, 0, 0], g.shape + (4,)).copy()
    with pytest.raises(DegenerateMetric):
        surface.geometry(surface.DiscreteImmersion(g, Phi, 1))


def test_clifford_curvatures(clifford):
    _, geom = clifford
    assert np.max(np.abs(geom.H)) < 1e-8
    assert np.max(np.abs(geom.K_int)) < 1e-8
    assert np.max(np.abs(np.sort(geom.kappa, -1) - [-1, 1])) < 1e-8


def test_sphere_curvatures(sphere):
    _, geom = sphere
    assert np.max(np.abs(geom.H)) < 1e-8
    assert np.max(np.abs(geom.K_int - 1)) < 1e-6


@pytest.mark.parametrize("which", ["clifford", "sphere"])
def test_normal_is_orthogonal(which, request):
    imm, geom = request.getfixturevalue(which)
    d1, d2 = imm.grid.d(imm.Phi, 0), imm.grid.d(imm.Phi, 1)
    for v in (imm.Phi, d1, d2):
        assert np.max(np.abs(al.dot(geom.n, v))) < 1e-10
    assert np.max(np.abs(al.norm(geom.n) - 1)) < 1e-12


@pytest.mark.parametrize("which, tol", [("clifford", 1e-8), ("sphere", 5e-6)])
def test_gauss_equation(which, tol, request):
    _, geom = request.getfixturevalue(which)
    assert np.max(np.abs(geom.K_int - geom.K_ext - 1)) < tol


def test_gauss_equation_on_flat_torus():
    geom = surface.geometry(surface.builtin_surface("flat_torus", 64, r=0.3))
    assert np.max(np.abs(geom.K_int - geom.K_ext - 1)) < 5e-6


@pytest.mark.parametrize("which, chi", [("clifford", 0), ("sphere", 2)])
def test_gauss_bonnet(which, chi, request):
    assert abs(surface.gauss_bonnet(*request.getfixturevalue(which)) - chi) < 1e-6


@pytest.mark.parametrize("which, degree", [("clifford", 0), ("sphere", 1)])
def test_gauss_map_degree(which, degree, request):
    gm = surface.gauss_map(*request.getfixturevalue(which))
    assert gm.degree.rounded == degree
    assert gm.degree.residual < 1e-6
    assert np.max(np.abs(al.norm(gm.plus) - 1)) < 1e-12
    assert np.max(np.abs(al.norm(gm.minus) - 1)) < 1e-12


def test_reversed_orientation_flips_degree():
    imm = surface.builtin_surface("geodesic_sphere", 32)
    rev = surface.DiscreteImmersion(imm.grid, imm.Phi, 0, orientation=-1)
    assert surface.gauss_map(rev).degree.rounded == -1


def test_clifford_gauss_map_is_conformal(clifford):
    gm = surface.gauss_map(*clifford)
    m = gm.metric
    assert np.max(np.abs(m[..., 0, 1])) < 1e-8
    assert np.max(np.abs(m[..., 0, 0] - m[..., 1, 1])) < 1e-8
    assert abs(gm.area() - gm.dirichlet_half()) < 1e-8


def test_gauss_area_below_dirichlet_on_flat_torus():
    gm = surface.gauss_map(surface.builtin_surface("flat_torus", 64, r=0.3))
    assert gm.area() < gm.dirichlet_half()


@pytest.mark.parametrize("which", ["clifford", "sphere"])
def test_lagrangian_residual(which, request):
    assert surface.lagrangian_residual(*request.getfixturevalue(which)) <= 1e-9


def test_non_lagrangian_pair(clifford):
    imm, geom = clifford
    u1 = imm.grid.mesh[0]
    b = geom.n + 0.1 * np.sin(u1)[..., None] * imm.grid.d(imm.Phi, 1)
    assert surface.lagrangian_residual_pair(imm.grid, imm.Phi, b) > 1e-3


def test_lagrangian_jacobian_bound(clifford, sphere):
    for imm, geom in (clifford, sphere):
        C = surface.lagrangian_jacobian(surface.gauss_map(imm, geom)).values
        assert np.max(np.abs(C)) <= 0.5 + 1e-8


def test_sphere_gauss_map_is_conformal_plus(sphere):
    C = surface.lagrangian_jacobian(surface.gauss_map(*sphere)).values
    assert np.max(np.abs(4 * C ** 2 - 1)) < 1e-8


def test_a_functional_ground_states(clifford, sphere):
    assert abs(surface.a_functional(surface.gauss_map(*sphere)) - 16 * np.pi) < 1e-4
    assert abs(surface.a_functional(surface.gauss_map(*clifford)) - 8 * np.pi ** 2) < 1e-4


def test_a_functional_vanishes_on_negated_sphere(sphere):
    assert abs(surface.a_functional(surface.gauss_map(*sphere).negated())) < 1e-8


def test_a_functional_is_four_times_area_when_minimal(clifford, sphere):
    for imm, geom in (clifford, sphere):
        assert abs(surface.a_functional(surface.gauss_map(imm, geom)) - 4 * geom.area()) < 1e-8


def test_ambiguous_degree_raises():
    gm = surface.gauss_map(surface.builtin_surface("clifford", 16))
    bad = surface.GaussMapField(gm.grid, gm.plus, gm.minus, gm.metric, gm.dvol, gm.degree._replace(residual=0.4))
    with pytest.raises(AmbiguousDegree):
        surface.a_functional(bad)


def test_area_identity(clifford, sphere):
    lhs, rhs = surface.area_identity_check(*clifford)
    assert abs(lhs - 8 * np.pi ** 2) < 1e-8 and abs(rhs - 8 * np.pi ** 2) < 1e-8
    lhs, rhs = surface.area_identity_check(*sphere)
    assert abs(lhs - 8 * np.pi) < 1e-8 and abs(rhs - 8 * np.pi) < 1e-8


def test_area_identity_needs_minimal():
    with pytest.raises(NotMinimal):
        surface.area_identity_check(surface.builtin_surface("flat_torus", 32, r=0.3))


def test_reparametrization_invariance():
    imm = sheared_clifford()
    geom = surface.geometry(imm)
    assert abs(surface.area(imm, geom) - TWO_PI2) < 1e-10
    assert abs(surface.willmore(imm, geom) - TWO_PI2) < 1e-8
    gm = surface.gauss_map(imm, geom)
    assert gm.degree.rounded == 0
    assert abs(surface.a_functional(gm) - 8 * np.pi ** 2) < 1e-6


def test_geodesic_sphere_axis_is_arbitrary():
    imm = surface.builtin_surface("geodesic_sphere", 32, axis=(1, 1, 0, 0))
    geom = surface.geometry(imm)
    assert np.max(np.abs(al.dot(imm.Phi, [1, 1, 0, 0]))) < 1e-14
    assert abs(surface.a_functional(surface.gauss_map(imm, geom)) - 16 * np.pi) < 1e-6


def test_geometry_report_keys(clifford):
    rep = surface.geometry_report(surface.builtin_surface("clifford", 32))
    assert rep["degree"]["rounded"] == 0
    assert abs(rep["a_functional"] - 8 * np.pi ** 2) < 1e-8
