"""Quaternions, bivectors of R^4 and the two polarization maps.

Quaternions and vectors of R^4 share one layout: ``(w, x, y, z)`` is the
vector ``(x1, x2, x3, x4)``, so i, j, k sit in slots 1..3 of the last axis.
Every function is vectorised over leading axes and avoids ``abs``/``conj`` so
that complex-step differentiation passes through unchanged.

Bivectors use the basis order e12, e13, e14, e23, e24, e34.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NonOrthonormalInput, NonUnitQuaternion

ORTHO_TOL = 1e-10
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])


class GrassPoint(NamedTuple):
    """Oriented 2-plane of R^4 as a pair of unit vectors of S^2 x S^2."""

    plus: np.ndarray
    minus: np.ndarray


def qmul(p, q):
    p = np.asarray(p)
    q = np.asarray(q)
    pw, px, py, pz = (p[..., i] for i in range(4))
    qw, qx, qy, qz = (q[..., i] for i in range(4))
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def qconj(q):
    q = np.asarray(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def norm(a):
    return np.sqrt(dot(a, a))


def pure(v3):
    """Imaginary quaternion with vector part ``v3``."""
    v3 = np.asarray(v3)
    return np.concatenate([np.zeros(v3.shape[:-1] + (1,), dtype=v3.dtype), v3], axis=-1)


def conjugate_by(q, y):
    """``q* y q`` for an imaginary quaternion ``y`` given as a 3-vector."""
    return qmul(qmul(qconj(q), pure(y)), q)[..., 1:]


def wedge(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.stack([a[..., i] * b[..., j] - a[..., j] * b[..., i] for i, j in PAIRS], axis=-1)


def hodge(B):
    B = np.asarray(B)
    b12, b13, b14, b23, b24, b34 = (B[..., i] for i in range(6))
    return np.stack([b34, -b24, b23, b14, -b13, b12], axis=-1)


def self_dual_parts(B):
    """Coordinates of ``B + *B`` and ``B - *B`` in the normalised +-1 eigenbases.

    The returned vectors are scaled so that a unit simple bivector yields two
    unit 3-vectors.
    """
    B = np.asarray(B)
    b12, b13, b14, b23, b24, b34 = (B[..., i] for i in range(6))
    plus = np.stack([b12 + b34, b13 - b24, b14 + b23], axis=-1)
    minus = np.stack([b12 - b34, b13 + b24, b14 - b23], axis=-1)
    return plus, minus


def triple_star(a, b, c):
    """The vector ``v`` with ``v . x = det(x, a, b, c)``."""
    m = np.stack(np.broadcast_arrays(np.asarray(a), np.asarray(b), np.asarray(c)), axis=-2)
    cols = []
    for l in range(4):
        keep = [i for i in range(4) if i != l]
        minor = m[..., :, keep]
        det3 = (minor[..., 0, 0] * (minor[..., 1, 1] * minor[..., 2, 2] - minor[..., 1, 2] * minor[..., 2, 1])
                - minor[..., 0, 1] * (minor[..., 1, 0] * minor[..., 2, 2] - minor[..., 1, 2] * minor[..., 2, 0])
                + minor[..., 0, 2] * (minor[..., 1, 0] * minor[..., 2, 1] - minor[..., 1, 1] * minor[..., 2, 0]))
        cols.append((-1) ** l * det3)
    return np.stack(cols, axis=-1)


def _check_frame(a, b, tol=ORTHO_TOL):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    bad = (np.abs(dot(a, a) - 1) > tol) | (np.abs(dot(b, b) - 1) > tol) | (np.abs(dot(a, b)) > tol)
    if np.any(bad):
        raise NonOrthonormalInput("pair is not orthonormal within %.0e" % tol)
    return a, b


def grass_point(a, b, check=True) -> GrassPoint:
    """Point of S^2 x S^2 representing the oriented plane spanned by (a, b)."""
    if check:
        a, b = _check_frame(a, b)
    plus, minus = self_dual_parts(wedge(a, b))
    return GrassPoint(plus, minus)


def polar_boundary(g, check=True):
    """Rotation matrix of ``y -> g* y g`` in the (i, j, k) basis."""
    g = np.asarray(g, dtype=float)
    if check and np.any(np.abs(dot(g, g) - 1) > ORTHO_TOL):
        raise NonUnitQuaternion("|g| must be 1")
    cols = [conjugate_by(g, e) for e in np.eye(3)]
    return np.stack(cols, axis=-1)


def polar_bubble(alpha, Phi, n):
    Phi, n = _check_frame(Phi, n)
    alpha = np.asarray(alpha, dtype=float)[..., None]
    return polar_boundary(np.cos(alpha) * n + np.sin(alpha) * Phi, check=False)


def left_coords(u, v):
    """``(<u, i v>, <u, j v>, <u, k v>)``."""
    return np.stack([dot(u, qmul(e, v)) for e in (I, J, K)], axis=-1)


def right_coords(u, v):
    """``(<u, v i>, <u, v j>, <u, v k>)``."""
    return np.stack([dot(u, qmul(v, e)) for e in (I, J, K)], axis=-1)
