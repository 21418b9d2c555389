import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussminmax import algebra as al
from gaussminmax.errors import NonOrthonormalInput, NonUnitQuaternion

from conftest import random_frame

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec4 = arrays(np.float64, 4, elements=finite)
biv = arrays(np.float64, 6, elements=finite)
E = np.eye(4)


def levi_civita_hodge(B):
    """Hodge star from the full antisymmetric matrix and the permutation sign."""
    M = np.zeros((4, 4))
    for (i, j), b in zip(al.PAIRS, B):
        M[i, j], M[j, i] = b, -b
    out = np.zeros((4, 4))
    for p in itertools.permutations(range(4)):
        sign = np.linalg.det(E[list(p)])
        i, j, k, l = p
        out[k, l] += 0.5 * sign * M[i, j]
    return np.array([out[i, j] for i, j in al.PAIRS])


def test_quaternion_units():
    assert np.allclose(al.qmul(al.I, al.J), al.K)
    assert np.allclose(al.qmul(al.J, al.K), al.I)
    assert np.allclose(al.qmul(al.K, al.I), al.J)
    assert np.allclose(al.qmul(al.I, al.I), -al.ONE)


@given(vec4, vec4)
def test_quaternion_norm_is_multiplicative(p, q):
    assert np.isclose(al.norm(al.qmul(p, q)), al.norm(p) * al.norm(q), rtol=1e-12, atol=1e-12)


@given(vec4)
def test_quaternion_times_conjugate_is_norm_squared(q):
    assert np.allclose(al.qmul(q, al.qconj(q)), al.dot(q, q) * al.ONE, atol=1e-12 * (1 + al.dot(q, q)))


def test_wedge_basis_and_antisymmetry():
    assert np.array_equal(al.wedge(E[0], E[1]), [1, 0, 0, 0, 0, 0])
    a = np.array([0.3, -1.0, 2.0, 0.5])
    assert np.allclose(al.wedge(a, a), 0)


@given(vec4, vec4)
def test_wedge_norm_identity(a, b):
    lhs = np.sum(al.wedge(a, b) ** 2)
    rhs = al.dot(a, a) * al.dot(b, b) - al.dot(a, b) ** 2
    assert np.isclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_wedge_of_random_orthonormal_pairs_is_unit():
    a, b = random_frame(np.random.default_rng(1), (1000,))
    assert np.allclose(np.linalg.norm(al.wedge(a, b), axis=-1), 1, atol=1e-13)


def test_hodge_basis_pairs():
    e = np.eye(6)
    assert np.array_equal(al.hodge(e[0]), e[5])
    assert np.array_equal(al.hodge(e[1]), -e[4])
    assert np.array_equal(al.hodge(e[2]), e[3])


@given(biv)
def test_hodge_is_involution(B):
    assert np.array_equal(al.hodge(al.hodge(B)), B)


@given(biv)
def test_hodge_matches_levi_civita(B):
    assert np.allclose(al.hodge(B), levi_civita_hodge(B), atol=1e-12)


def test_hodge_of_position_normal_is_tangent_plane(clifford64):
    imm, geom = clifford64
    t1 = imm.grid.d(imm.Phi, 0)
    t2 = imm.grid.d(imm.Phi, 1)
    t1 = t1 / al.norm(t1)[..., None]
    t2 = t2 / al.norm(t2)[..., None]
    assert np.max(np.abs(al.hodge(al.wedge(imm.Phi, geom.n)) - al.wedge(t1, t2))) < 1e-12


def test_grass_point_basis_cases():
    gp = al.grass_point(E[0], E[1])
    assert np.array_equal(gp.plus, [1, 0, 0]) and np.array_equal(gp.minus, [1, 0, 0])
    gp = al.grass_point(E[2], E[3])
    assert np.array_equal(gp.plus, [1, 0, 0]) and np.array_equal(gp.minus, [-1, 0, 0])


def test_grass_point_unit_over_random_frames():
    a, b = random_frame(np.random.default_rng(2), (10000,))
    gp = al.grass_point(a, b)
    assert np.max(np.abs(al.norm(gp.plus) - 1)) < 1e-12
    assert np.max(np.abs(al.norm(gp.minus) - 1)) < 1e-12


def test_grass_point_is_isometric_on_planes():
    # distance between two nearby planes: Frobenius norm of the bivector difference
    rng = np.random.default_rng(3)
    a, b = random_frame(rng, (200,))
    c, d = random_frame(rng, (200,))
    p, q = al.grass_point(a, b), al.grass_point(c, d)
    lhs = np.sum((p.plus - q.plus) ** 2, -1) + np.sum((p.minus - q.minus) ** 2, -1)
    rhs = 2 * np.sum((al.wedge(a, b) - al.wedge(c, d)) ** 2, -1)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_grass_point_rejects_non_orthonormal():
    with pytest.raises(NonOrthonormalInput):
        al.grass_point(E[0], E[0] + 1e-6 * E[1])
    with pytest.raises(NonOrthonormalInput):
        al.grass_point(2 * E[0], E[1])


@settings(max_examples=50)
@given(arrays(np.float64, 4, elements=st.floats(-1, 1)).filter(lambda q: np.linalg.norm(q) > 0.1))
def test_polar_boundary_is_rotation(q):
    R = al.polar_boundary(q / np.linalg.norm(q))
    assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(R) - 1) < 1e-12


def test_polar_boundary_rejects_non_unit():
    with pytest.raises(NonUnitQuaternion):
        al.polar_boundary([1.0, 0.1, 0, 0])


def test_polar_boundary_is_a_double_cover():
    q = np.array([0.5, 0.5, -0.5, 0.5])
    assert np.allclose(al.polar_boundary(q), al.polar_boundary(-q))
    assert np.allclose(al.polar_boundary(al.ONE), np.eye(3))


def test_polar_bubble_is_rotation():
    rng = np.random.default_rng(4)
    Phi, n = random_frame(rng, (50,))
    R = al.polar_bubble(rng.uniform(-np.pi / 2, np.pi / 2, 50), Phi, n)
    assert np.max(np.abs(np.einsum("...ji,...jk->...ik", R, R) - np.eye(3))) < 1e-12
    assert np.max(np.abs(np.linalg.det(R) - 1)) < 1e-12


def test_left_and_right_coordinates_of_basis():
    assert np.allclose(al.left_coords(al.I, al.ONE), [1, 0, 0])
    assert np.allclose(al.right_coords(al.K, al.ONE), [0, 0, 1])
    # i j = k but j i = -k
    assert np.allclose(al.left_coords(al.K, al.J), [1, 0, 0])
    assert np.allclose(al.right_coords(al.K, al.J), [-1, 0, 0])
