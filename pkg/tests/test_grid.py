import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from gaussminmax import grid as gr
from gaussminmax.errors import GridTooCoarse


def test_periodic_derivative_of_sine():
    ax = gr.periodic_axis(64)
    g = gr.Grid((ax,))
    assert np.max(np.abs(g.d(np.sin(ax.nodes), 0) - np.cos(ax.nodes))) < 1e-12


def test_derivative_of_constant_is_zero():
    for ax in (gr.periodic_axis(16), gr.gl_axis(16, -1, 2)):
        g = gr.Grid((ax,))
        assert np.max(np.abs(g.d(np.full(16, 3.7), 0))) < 1e-13


def test_complex_exponential_derivative():
    ax = gr.periodic_axis(16)
    f = np.exp(2j * ax.nodes)
    assert np.max(np.abs(gr.Grid((ax,)).d(f, 0) - 2j * f)) < 1e-12


@settings(max_examples=30)
@given(st.integers(0, 15), st.floats(0, 2 * np.pi))
def test_periodic_derivative_exact_below_nyquist(k, shift):
    ax = gr.periodic_axis(32)
    x = ax.nodes
    err = gr.Grid((ax,)).d(np.cos(k * x + shift), 0) + k * np.sin(k * x + shift)
    assert np.max(np.abs(err)) < 1e-11


@settings(max_examples=30)
@given(st.integers(0, 15))
def test_gauss_legendre_derivative_exact_on_polynomials(p):
    ax = gr.gl_axis(16, -1.0, 3.0)
    x = ax.nodes
    exact = p * x ** (p - 1) if p else np.zeros_like(x)
    err = gr.Grid((ax,)).d(x ** p, 0) - exact
    assert np.max(np.abs(err)) < 1e-9 * 3.0 ** p


@settings(max_examples=30)
@given(st.integers(0, 31))
def test_gauss_legendre_quadrature_exact_on_polynomials(p):
    ax = gr.gl_axis(16, 0.0, 2.0)
    exact = 2.0 ** (p + 1) / (p + 1)
    assert np.isclose(np.sum(ax.weights * ax.nodes ** p), exact, rtol=1e-12)


@settings(max_examples=30)
@given(st.integers(-31, 31))
def test_trapezoid_exact_on_trig_polynomials(k):
    ax = gr.periodic_axis(32)
    exact = 2 * np.pi if k == 0 else 0.0
    assert abs(np.sum(ax.weights * np.cos(k * ax.nodes)) - exact) < 1e-12


def test_axis_weights_sum_to_measure():
    assert np.isclose(gr.periodic_axis(10, 3.0).weights.sum(), 3.0, rtol=0, atol=1e-12)
    assert np.isclose(gr.gl_axis(10, -2, 5).weights.sum(), 7.0, rtol=0, atol=1e-12)


def test_coarse_axis_raises():
    g = gr.Grid((gr.periodic_axis(4),))
    with pytest.raises(GridTooCoarse):
        g.d(np.zeros(4), 0)


def test_torus_chart_measure():
    g = gr.torus_grid(8, 12)
    assert abs(gr.integrate(gr.SampledMap(g, np.ones(g.shape))) - 4 * np.pi ** 2) < 1e-12


def test_sphere_grid_area():
    g = gr.sphere_grid(32)
    assert abs(gr.integrate(gr.SampledMap(g, np.ones(g.shape))) - 4 * np.pi) < 1e-12


def test_s3_volume():
    g = gr.s3_grid(32)
    assert abs(gr.integrate(gr.SampledMap(g, np.ones(g.shape))) - 2 * np.pi ** 2) < 1e-8


def test_s3_singular_weight():
    g = gr.s3_grid(256, 8, 8)
    z4 = gr.s3_points(g)[..., 3]
    assert abs(gr.integrate(gr.SampledMap(g, 2 / (1 - z4 ** 2))) - 8 * np.pi ** 2) < 1e-3


def test_s3_singular_weight_against_one_dimensional_oracle():
    # volume of the z4 = s slice is 4 pi (1 - s^2); the reduced integral is 8 pi int ds / sqrt(1-s^2)
    oracle, _ = sint.quad(lambda s: 4 * np.pi * (1 - s * s) * 2 / (1 - s * s) / np.sqrt(1 - s * s), -1, 1)
    g = gr.s3_grid(256, 8, 8)
    z4 = gr.s3_points(g)[..., 3]
    assert abs(gr.integrate(gr.SampledMap(g, 2 / (1 - z4 ** 2))) - oracle) < 1e-3


def test_s3_points_and_frame_orthonormal():
    g = gr.s3_grid(8)
    z = gr.s3_points(g)
    frame = gr.s3_frame(g)
    vecs = [z] + list(frame)
    gram = np.einsum("...ai,...bi->...ab", np.stack(vecs, -2), np.stack(vecs, -2))
    assert np.max(np.abs(gram - np.eye(4))) < 1e-14


def test_polar_axis_derivative_across_poles():
    g = gr.sphere_grid(16)
    theta, phi = g.mesh
    f = np.sin(theta) * np.cos(phi) + np.cos(theta) ** 3
    df = np.cos(theta) * np.cos(phi) - 3 * np.cos(theta) ** 2 * np.sin(theta)
    assert np.max(np.abs(g.d(f, 0) - df)) < 1e-12


def test_degree_of_identity_and_antipodal_maps():
    g = gr.sphere_grid(16)
    p = gr.sphere_points(g)
    assert gr.degree_integral(gr.SampledMap(g, p)).rounded == 1
    assert gr.degree_integral(gr.SampledMap(g, -p)).rounded == -1
    assert gr.degree_integral(gr.SampledMap(g, p)).residual < 1e-10


def test_degree_of_flat_torus_gauss_map_is_zero():
    g = gr.torus_grid(32)
    u, v = g.mesh
    # first self-dual component of the plane spanned by the flat torus normals
    G = np.stack([np.zeros_like(u), np.cos(u + v), np.sin(u + v)], -1)
    assert abs(gr.degree_integral(gr.SampledMap(g, G)).raw) < 1e-12


def rational_power(points, k):
    """Stereographic w -> w^k (w -> conj(w)^|k| for k < 0) pulled back to the unit sphere."""
    w = (points[..., 0] + 1j * points[..., 1]) / (1 - points[..., 2])
    w = w ** k if k >= 0 else np.conj(w) ** (-k)
    r2 = np.abs(w) ** 2
    return np.stack([2 * w.real, 2 * w.imag, r2 - 1], -1) / (1 + r2)[..., None]


@settings(max_examples=10, deadline=None)
@given(st.integers(-3, 3))
def test_degree_of_rational_maps(k):
    g = gr.sphere_grid(32)
    d = gr.degree_integral(gr.SampledMap(g, rational_power(gr.sphere_points(g), k)))
    assert d.rounded == k and d.residual < 1e-6


def test_degree_is_stable_under_refinement():
    for n in (16, 32):
        g = gr.sphere_grid(n)
        assert gr.degree_integral(gr.SampledMap(g, gr.sphere_points(g))).rounded == 1


def test_lift_degree_constant_and_identity():
    g = gr.s3_grid(16)
    z = gr.s3_points(g)
    assert abs(gr.degree_via_lift(gr.SampledMap(g, np.broadcast_to([1.0, 0, 0, 0], z.shape))).raw) < 1e-12
    d = gr.degree_via_lift(gr.SampledMap(g, z))
    assert d.rounded == 2 and d.residual < 1e-6


def test_export_csv(tmp_path):
    g = gr.torus_grid(8)
    path = tmp_path / "f.csv"
    gr.export_csv(path, g, {"f": np.ones(g.shape), "v": np.zeros(g.shape + (2,))})
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,f,v_1,v_2"
    assert len(lines) == 65
