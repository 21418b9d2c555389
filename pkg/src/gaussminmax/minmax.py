"""Finite-dimensional sweepout minmax: pseudo-gradient deformation, widths and Morse indices.

Two problems share one interface.  ``RayleighEnergy`` is the Dirichlet energy
of a discrete Laplacian on the unit sphere of its mass matrix.
``CurveEnergy`` is ``2 pi * integral |u'|^2`` for closed polygons whose
vertices lie on an ellipsoid; for a uniformly parametrized polygon its square
root is the length.

A deformation step moves every free slice of a sweepout along a preconditioned
projected gradient, weighted by a smooth cutoff that vanishes below a given
energy.  A step of size ``tau`` is accepted only if the energy drops by at
least ``|dx|^2 / (4 tau)``, measured in the H^1 metric of the problem.  Summed
along a trajectory this gives

    path length <= 2 sqrt(elapsed time) * sqrt(energy drop),

which is checked after every accepted step and logged.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import integrate as sint
from scipy import linalg as sla
from scipy.special import ellipeinc
from scipy.stats import special_ortho_group

from .errors import (BadEigenbasis, BadLevel, BadParameter, CurveCollapse, NoConvergence, NotCritical,
                     StepRejected)

GRAD_TOL = 1e-8
CRITICAL_TOL = 1e-6
NULL_TOL = 1e-8
CUTOFF_FRACTION = 0.1
TAU_START = 0.5
TAU_MAX = 4.0
TAU_MIN = 1e-14
RESIDUAL_TOL = 1e-10


def smooth_weight(E, low, high):
    """0 below ``low``, 1 above ``high``, C^1 in between."""
    if not high > low:
        raise BadParameter("cutoff needs low < high")
    s = np.clip((np.asarray(E, dtype=float) - low) / (high - low), 0.0, 1.0)
    return s * s * (3 - 2 * s)


@dataclass(frozen=True)
class Configuration:
    """A point of the constrained configuration space."""

    x: np.ndarray
    constraint: str
    residual: float


# ---------------------------------------------------------------- problems

def _quad(X, A, Y):
    """Row-wise ``x . A y``."""
    return np.sum((X @ A) * Y, axis=1)


class RayleighEnergy:
    """``E(u) = u.K u`` on ``{u : u.M u = 1}``, preconditioned by ``K + M``."""

    constraint = "mass-sphere"

    def __init__(self, stiffness, mass):
        K = np.asarray(stiffness, dtype=float)
        M = np.asarray(mass, dtype=float)
        if K.shape != M.shape or K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise BadParameter("stiffness and mass must be square of equal size")
        if np.max(np.abs(K - K.T)) > 1e-12 * np.max(np.abs(K)) or np.max(np.abs(M - M.T)) > 0:
            raise BadParameter("stiffness and mass must be symmetric")
        self.stiffness = K
        self.mass = M
        self._metric = K + M
        self._chol = sla.cho_factor(self._metric)

    @property
    def dim(self):
        return self.mass.shape[0]

    def value(self, X):
        X = np.atleast_2d(X)
        return _quad(X, self.stiffness, X)

    def decrease(self, X, Y):
        """``E(X) - E(Y)`` as a difference of Rayleigh quotients, expanded in ``Y - X``.

        Every term carries a factor of the difference, so rounding in the
        normalization does not swamp small decreases.
        """
        K, M = self.stiffness, self.mass
        X, Y = np.atleast_2d(X), np.atleast_2d(Y)
        d = Y - X
        xkx = _quad(X, K, X)
        xmx = _quad(X, M, X)
        num = (xkx * (2 * _quad(X, M, d) + _quad(d, M, d))
               - xmx * (2 * _quad(X, K, d) + _quad(d, K, d)))
        return num / (xmx * _quad(Y, M, Y))

    def gradient(self, X):
        return 2 * np.atleast_2d(X) @ self.stiffness

    def direction(self, X, exclude=None):
        """H^1 gradient on the sphere and its squared dual norm.

        With ``exclude`` the gradient is taken on the part of the sphere
        M-orthogonal to those columns.
        """
        X = np.atleast_2d(X)
        XM = X @ self.mass
        E = self.value(X) / np.sum(XM * X, axis=1)
        # the normal part 2 E M x of the gradient is removed before solving
        G = 2 * (X @ self.stiffness - E[:, None] * XM)
        D0 = sla.cho_solve(self._chol, G.T).T
        W = sla.cho_solve(self._chol, XM.T).T
        if exclude is None or exclude.shape[1] == 0:
            alpha = np.sum(XM * D0, axis=1) / np.sum(XM * W, axis=1)
            D = D0 - alpha[:, None] * W
            return D, np.sum(G * D, axis=1)
        ME = self.mass @ exclude
        WE = sla.cho_solve(self._chol, ME)
        D = np.empty_like(D0)
        for r in range(len(X)):
            C = np.column_stack([XM[r], ME])
            Wr = np.column_stack([W[r], WE])
            D[r] = D0[r] - Wr @ np.linalg.solve(C.T @ Wr, C.T @ D0[r])
        return D, np.sum(G * D, axis=1)

    def norm2(self, V):
        V = np.atleast_2d(V)
        return _quad(V, self._metric, V)

    def project(self, X, exclude=None):
        X = np.atleast_2d(np.array(X, dtype=float))
        if exclude is not None and exclude.shape[1]:
            X = X - (X @ self.mass @ exclude) @ exclude.T
        return X / np.sqrt(_quad(X, self.mass, X))[:, None]

    def residual(self, X):
        X = np.atleast_2d(X)
        return np.abs(_quad(X, self.mass, X) - 1)

    def width_of(self, E):
        return float(E)

    def noise(self, E):
        """Absolute rounding level of :meth:`decrease`; negligible here."""
        return np.zeros_like(np.asarray(E, dtype=float))

    def gradient_floor(self, E):
        return 0.0

    def hessian_spectrum(self, x):
        """Eigenvalues of the constrained Hessian ``2(K - E M)`` against ``M`` on the tangent space."""
        x = np.ravel(x)
        E = float(self.value(x)[0])
        A = 2 * (self.stiffness - E * self.mass)
        Z = sla.null_space((self.mass @ x)[None, :])
        return sla.eigh(Z.T @ A @ Z, Z.T @ self.mass @ Z, eigvals_only=True)


@dataclass(frozen=True)
class EllipsoidSpec:
    """Semi-axes of ``x1^2/a^2 + x2^2/b^2 + x3^2/c^2 = 1`` with ``0 < a <= b <= c``.

    Equal axes are accepted so that the round sphere can be used as a control;
    :attr:`strict` tells whether the ordering is strict.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not 0 < self.a <= self.b <= self.c:
            raise BadParameter("semi-axes must satisfy 0 < a <= b <= c")

    @property
    def axes(self):
        return np.array([self.a, self.b, self.c], dtype=float)

    @property
    def strict(self):
        return self.a < self.b < self.c

    def residual(self, X):
        return np.abs(np.sum(np.asarray(X) ** 2 / self.axes ** 2, axis=-1) - 1)

    def normals(self, X):
        g = np.asarray(X) / self.axes ** 2
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


def project_to_ellipsoid(Y, spec: EllipsoidSpec, iters: int = 60):
    """Closest point on the ellipsoid, by Newton's method on the Lagrange multiplier.

    Meant for points near the surface; the result satisfies the equation to
    rounding error.
    """
    Y = np.asarray(Y, dtype=float)
    a2 = spec.axes ** 2
    mu = np.zeros(Y.shape[:-1])
    floor = -a2.min()
    for _ in range(iters):
        den = a2 + mu[..., None]
        x = Y * a2 / den
        r = x * x / a2
        f = r.sum(axis=-1) - 1
        if np.max(np.abs(f), initial=0.0) < 1e-15:
            break
        fp = -2 * np.sum(r / den, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp < 0, f / fp, 0.0)
        mu = np.maximum(mu - step, 0.5 * (mu + floor))
    x = Y * a2 / (a2 + mu[..., None])
    return x / np.sqrt(np.sum(x * x / a2, axis=-1))[..., None]


class CurveEnergy:
    """``n * sum |u_{i+1} - u_i|^2`` for closed polygons of ``n`` vertices on an ellipsoid.

    The preconditioner is ``2 n (L + h^2)`` with ``L`` the periodic second
    difference and ``h = 2 pi / n``, applied by FFT.
    """

    constraint = "ellipsoid-curve"

    def __init__(self, spec: EllipsoidSpec, n: int):
        if n < 8:
            raise BadParameter("curves need at least 8 points")
        self.spec = spec
        self.n = int(n)
        k = np.arange(self.n)
        self._symbol = 2 * self.n * (2 - 2 * np.cos(2 * np.pi * k / self.n) + (2 * np.pi / self.n) ** 2)

    def value(self, X):
        X = np.asarray(X)
        X = X[None] if X.ndim == 2 else X
        d = np.roll(X, -1, axis=1) - X
        return self.n * np.sum(d * d, axis=(1, 2))

    def decrease(self, X, Y):
        dX = np.roll(X, -1, axis=1) - X
        dY = np.roll(Y, -1, axis=1) - Y
        return self.n * np.sum((dX - dY) * (dX + dY), axis=(1, 2))

    def gradient(self, X):
        X = np.asarray(X)
        X = X[None] if X.ndim == 2 else X
        return 2 * self.n * (2 * X - np.roll(X, 1, axis=1) - np.roll(X, -1, axis=1))

    def _tangent(self, X, V):
        nu = self.spec.normals(X)
        return V - np.sum(V * nu, axis=-1, keepdims=True) * nu

    def _solve(self, V):
        return np.real(np.fft.ifft(np.fft.fft(V, axis=1) / self._symbol[:, None], axis=1))

    def _apply(self, V):
        return np.real(np.fft.ifft(np.fft.fft(V, axis=1) * self._symbol[:, None], axis=1))

    def direction(self, X):
        X = np.asarray(X)
        X = X[None] if X.ndim == 2 else X
        G = self.gradient(X)
        D = self._tangent(X, self._solve(self._tangent(X, G)))
        return D, np.sum(G * D, axis=(1, 2))

    def norm2(self, V):
        return np.sum(V * self._apply(V), axis=(1, 2))

    def project(self, X, exclude=None):
        return project_to_ellipsoid(X, self.spec)

    def residual(self, X):
        X = np.asarray(X)
        X = X[None] if X.ndim == 2 else X
        return self.spec.residual(X).max(axis=1)

    def width_of(self, E):
        return float(np.sqrt(max(E, 0.0)))

    def noise(self, E):
        """Rounding of the projected vertices limits energy differences to about ``eps * E``."""
        return np.finfo(float).eps * np.abs(np.asarray(E, dtype=float))

    def gradient_floor(self, E):
        """Smallest gradient norm that decrease-tested steps can still resolve."""
        return float(np.sqrt(8 * np.finfo(float).eps * abs(E)))

    def hessian_spectrum(self, x):
        """Eigenvalues of the Hessian of the Lagrangian on the product of tangent planes."""
        x = np.asarray(x, dtype=float)
        n = self.n
        a2 = self.spec.axes ** 2
        g = self.gradient(x)[0]
        dc = 2 * x / a2
        mu = np.sum(g * dc, axis=1) / np.sum(dc * dc, axis=1)
        L = 2 * np.eye(n) - np.roll(np.eye(n), 1, axis=1) - np.roll(np.eye(n), -1, axis=1)
        H = 2 * n * np.kron(L, np.eye(3))
        H -= np.kron(np.diag(mu), np.diag(2 / a2))
        nu = self.spec.normals(x)
        Z = np.zeros((3 * n, 2 * n))
        for i in range(n):
            basis = sla.null_space(nu[i][None, :])
            Z[3 * i:3 * i + 3, 2 * i:2 * i + 2] = basis
        return np.linalg.eigvalsh(Z.T @ H @ Z)


# ---------------------------------------------------------------- sweepouts

@dataclass(frozen=True)
class Sweepout:
    """Configurations indexed by a parameter grid.

    ``fixed`` marks boundary slices, which are never deformed and must stay
    at or below ``cap``.  ``linking`` marks slices that are kept orthogonal to
    the columns of ``exclude`` (the span of the lower critical sets), which is
    how the discrete family keeps its topology while it is deformed.
    """

    params: np.ndarray
    configs: np.ndarray
    fixed: np.ndarray
    names: tuple = ()
    linking: np.ndarray | None = None
    exclude: np.ndarray | None = field(default=None, repr=False)
    cap: float | None = None

    def __post_init__(self):
        if len(self.params) != len(self.configs) or len(self.fixed) != len(self.configs):
            raise BadParameter("params, configs and fixed must have one entry per slice")
        if self.linking is not None and len(self.linking) != len(self.configs):
            raise BadParameter("linking mask has the wrong length")

    def __len__(self):
        return len(self.configs)

    def check_cap(self, energy):
        if self.cap is None or not np.any(self.fixed):
            return
        top = float(np.max(energy.value(self.configs[self.fixed])))
        if top > self.cap + 1e-12 * max(1.0, abs(self.cap)):
            raise BadParameter("boundary energy %.12g exceeds the cap %.12g" % (top, self.cap))


@dataclass
class DeformationLog:
    """Per-trajectory bookkeeping for the path-length estimate."""

    path: np.ndarray
    time: np.ndarray
    drop: np.ndarray
    tau: np.ndarray
    accepted: int = 0
    violations: int = 0
    worst_ratio: float = 0.0

    @classmethod
    def fresh(cls, size):
        z = np.zeros(size)
        return cls(z.copy(), z.copy(), z.copy(), np.full(size, TAU_START))


def _project_slices(sw, energy, X, idx):
    if sw.linking is None or sw.exclude is None:
        return energy.project(X)
    out = energy.project(X)
    link = sw.linking[idx]
    if np.any(link):
        out[link] = energy.project(X[link], exclude=sw.exclude)
    return out


def _directions(sw, energy, X, idx):
    """Descent directions; linking slices move inside the complement of the excluded span."""
    D, gd = energy.direction(X)
    if sw.linking is None or sw.exclude is None or sw.exclude.shape[1] == 0:
        return D, gd
    link = sw.linking[idx]
    if np.any(link):
        D[link], gd[link] = energy.direction(X[link], exclude=sw.exclude)
    return D, gd


def deform(sw: Sweepout, energy, cutoff, log: DeformationLog | None = None, tol: float = GRAD_TOL) -> Sweepout:
    """One pseudo-gradient step on every free slice whose energy exceeds ``cutoff[0]``.

    Each slice moves by ``-tau * w(E) * D`` with ``D`` the preconditioned
    projected gradient and ``w`` the smooth cutoff, and is then re-projected
    onto the constraint.  ``tau`` is halved until the energy drop is at least
    ``|dx|^2 / (4 tau)``; failure below ``TAU_MIN`` raises ``StepRejected``.
    """
    low, high = cutoff
    log = DeformationLog.fresh(len(sw)) if log is None else log
    E = energy.value(sw.configs)
    w = smooth_weight(E, low, high)
    active = np.flatnonzero((~sw.fixed) & (w > 0))
    if active.size == 0:
        return sw
    X = sw.configs[active]
    D, gd = _directions(sw, energy, X, active)
    moving = np.sqrt(np.maximum(gd, 0.0)) >= 0.1 * tol
    active, X, D = active[moving], X[moving], D[moving]
    if active.size == 0:
        return sw
    wa = w[active]
    new = sw.configs.copy()
    pending = np.arange(active.size)
    while pending.size:
        idx = active[pending]
        tau = log.tau[idx]
        shape = (-1,) + (1,) * (X.ndim - 1)
        cand = _project_slices(sw, energy, X[pending] - (tau * wa[pending]).reshape(shape) * D[pending], idx)
        dE = energy.decrease(X[pending], cand)
        dx2 = energy.norm2(cand - X[pending])
        ok = (dE >= dx2 / (4 * tau)) & (dE >= 0)
        # below rounding noise the test is undecidable: leave the slice where it is
        first_order = tau * wa[pending] * np.maximum(gd[moving][pending], 0.0)
        noise = np.maximum(64 * np.finfo(float).eps * first_order, energy.noise(E[idx]))
        stalled = ~ok & (np.abs(dE) <= noise)
        for j in np.flatnonzero(ok):
            s = idx[j]
            new[s] = cand[j]
            log.path[s] += np.sqrt(dx2[j])
            log.time[s] += tau[j]
            log.drop[s] += dE[j]
            bound = 2 * np.sqrt(log.time[s] * log.drop[s])
            ratio = log.path[s] / bound if bound > 0 else 0.0
            log.worst_ratio = max(log.worst_ratio, ratio)
            if log.path[s] > bound * (1 + 1e-12) + 1e-300:
                log.violations += 1
            log.accepted += 1
            log.tau[s] = min(1.5 * tau[j], TAU_MAX)
        bad = pending[~ok & ~stalled]
        log.tau[active[bad]] *= 0.5
        if np.any(log.tau[active[bad]] < TAU_MIN):
            raise StepRejected("no admissible step for %d slice(s)" % int(np.sum(log.tau[active[bad]] < TAU_MIN)))
        pending = bad
    return replace(sw, configs=new)


class MinmaxReport(NamedTuple):
    width: float
    energy: float
    argmax: np.ndarray
    candidate: Configuration
    grad_norm: float
    morse_index: int | None
    nullity: int | None
    iterations: int
    trace: tuple
    accepted_steps: int
    violations: int
    worst_ratio: float
    multiplicity: int = 1
    realizers: np.ndarray | None = None
    grad_tol: float = GRAD_TOL


class MorseIndex(NamedTuple):
    index: int
    nullity: int


def morse_index(energy, config) -> MorseIndex:
    """Negative and null directions of the constrained Hessian at a critical point."""
    x = config.x if isinstance(config, Configuration) else np.asarray(config)
    _, gd = energy.direction(x)
    gn = float(np.sqrt(max(gd[0], 0.0)))
    if gn >= CRITICAL_TOL:
        raise NotCritical("gradient norm %.3g is not below %.0e" % (gn, CRITICAL_TOL))
    ev = energy.hessian_spectrum(x)
    return MorseIndex(int(np.sum(ev <= -NULL_TOL)), int(np.sum(np.abs(ev) < NULL_TOL)))


def _report(sw, energy, E, i, gn, it, trace, log, with_index, tol):
    x = sw.configs[i]
    conf = Configuration(x.copy(), energy.constraint, float(energy.residual(x)[0]))
    idx = null = None
    if with_index and gn < CRITICAL_TOL:
        idx, null = morse_index(energy, conf)
    return MinmaxReport(energy.width_of(E[i]), float(E[i]), sw.params[i].copy(), conf, gn, idx, null, it,
                        tuple(trace), log.accepted, log.violations, log.worst_ratio,
                        grad_tol=max(tol, energy.gradient_floor(E[i])))


def width(sw: Sweepout, energy, tol: float = GRAD_TOL, max_iter: int = 500, with_index: bool = True,
          log: DeformationLog | None = None) -> MinmaxReport:
    """Deform the sweepout until the gradient at its highest slice is below ``tol``.

    The threshold is raised to ``energy.gradient_floor`` when rounding makes
    ``tol`` unreachable; the value used is reported as ``grad_tol``.  Only
    slices within 10% of the current maximum move.  Hitting ``max_iter``
    raises ``NoConvergence`` carrying the partial report.
    """
    sw.check_cap(energy)
    log = DeformationLog.fresh(len(sw)) if log is None else log
    trace = []
    for it in range(max_iter + 1):
        E = energy.value(sw.configs)
        i = int(np.argmax(E))
        _, gd = _directions(sw, energy, sw.configs[i:i + 1], np.array([i]))
        gn = float(np.sqrt(max(gd[0], 0.0)))
        trace.append(energy.width_of(E[i]))
        if gn < max(tol, energy.gradient_floor(E[i])):
            return _report(sw, energy, E, i, gn, it, trace, log, with_index, tol)
        if it == max_iter:
            break
        top = float(E[i])
        low = top - CUTOFF_FRACTION * max(abs(top), 1e-300)
        sw = deform(sw, energy, (low, 0.5 * (low + top)), log, tol)
    partial = _report(sw, energy, E, i, gn, max_iter, trace, log, False, tol)
    raise NoConvergence("gradient %.3g after %d iterations" % (gn, max_iter), partial=partial)


def hierarchy_gaps(reports, rtol: float = 1e-9):
    """Successive width gaps and whether any two consecutive widths tie within ``rtol``."""
    w = np.array([r.width for r in reports])
    gaps = np.diff(w)
    ties = bool(np.any(np.abs(gaps) <= rtol * np.maximum(1.0, np.abs(w[1:]))))
    return gaps, ties


# ---------------------------------------------------------------- eigen instance

@dataclass(frozen=True)
class DiscreteManifold:
    """Second-order periodic Laplacian on a circle or a square flat torus.

    A circle of length ``length`` is also an interval with periodic closure.
    The circle uses ``K = circ(-1, 2, -1)/h`` and ``M = h I``; the torus uses
    the Kronecker sum of unscaled stencils and ``M = h^2 I``.
    """

    kind: str
    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.kind not in ("circle", "torus"):
            raise BadParameter("manifold kind must be 'circle' or 'torus'")
        if self.n < 4 or not self.length > 0:
            raise BadParameter("need n >= 4 and positive length")

    @property
    def h(self):
        return self.length / self.n

    def _stencil(self):
        n = self.n
        return 2 * np.eye(n) - np.roll(np.eye(n), 1, axis=1) - np.roll(np.eye(n), -1, axis=1)

    @property
    def stiffness(self):
        L = self._stencil()
        if self.kind == "circle":
            return L / self.h
        I = np.eye(self.n)
        return np.kron(L, I) + np.kron(I, L)

    @property
    def mass(self):
        dim = self.n if self.kind == "circle" else self.n ** 2
        return np.eye(dim) * (self.h if self.kind == "circle" else self.h ** 2)

    def energy(self):
        return RayleighEnergy(self.stiffness, self.mass)

    def oracle(self):
        """Dense generalized eigendecomposition ``K v = lambda M v``."""
        return sla.eigh(self.stiffness, self.mass)


def circle(n: int, length: float = 2 * np.pi) -> DiscreteManifold:
    return DiscreteManifold("circle", n, length)


def flat_torus(n: int, length: float = 2 * np.pi) -> DiscreteManifold:
    return DiscreteManifold("torus", n, length)


def eigenspaces(values, vectors, rtol: float = 1e-8):
    """Group an ascending spectrum into (eigenvalue, basis) pairs of distinct eigenvalues."""
    groups = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[start] > rtol * max(1.0, abs(values[start])):
            groups.append((float(np.mean(values[start:i])), vectors[:, start:i]))
            start = i
    return groups


def _m_orthonormalize(vectors, mass, tol=1e-6):
    """Modified Gram-Schmidt in the mass inner product, dropping dependent columns."""
    out = []
    for v in np.atleast_2d(vectors.T):
        v = v.copy()
        for _ in range(2):
            for q in out:
                v -= (q @ mass @ v) * q
        nv = np.sqrt(v @ mass @ v)
        if nv > tol:
            out.append(v / nv)
    return np.array(out).T if out else np.zeros((mass.shape[0], 0))


def _sphere_samples(dim, rng, extra=4):
    """Points of the unit sphere of R^dim: the coordinate poles plus a few seeded random ones."""
    if dim == 0:
        return np.zeros((0, 0))
    pts = [np.eye(dim), -np.eye(dim)]
    if dim > 1:
        r = rng.standard_normal((extra * dim, dim))
        pts.append(r / np.linalg.norm(r, axis=1, keepdims=True))
    return np.vstack(pts)


def eigen_sweepout(energy: RayleighEnergy, lower, rng, t_res: int = 9, cap: float | None = None) -> Sweepout:
    """``cos(pi t/2) v + sin(pi t/2) y`` over ``t in [-1, 1]`` and ``y`` on the unit sphere of ``lower``.

    ``v`` is a seeded random configuration orthogonal to ``lower``; the
    ``t = +-1`` slices are the lower family and are fixed.
    """
    N = energy.dim
    lower = np.zeros((N, 0)) if lower is None else np.asarray(lower)
    v = energy.project(rng.standard_normal(N), exclude=lower)[0]
    if lower.shape[1] == 0:
        return Sweepout(np.zeros((1, 1)), v[None, :], np.zeros(1, bool), ("t",), np.ones(1, bool), lower, cap)
    if t_res < 3 or t_res % 2 == 0:
        raise BadParameter("t_res must be odd and >= 3")
    ts = np.linspace(-1, 1, t_res)
    coef = _sphere_samples(lower.shape[1], rng)
    ys = coef @ lower.T
    T = np.repeat(ts, len(ys))
    Y = np.tile(ys, (t_res, 1))
    X = np.cos(np.pi * T / 2)[:, None] * v + np.sin(np.pi * T / 2)[:, None] * Y
    X = energy.project(X)
    params = np.column_stack([T, np.tile(np.arange(len(ys)), t_res)])
    fixed = np.abs(T) == 1
    linking = T == 0
    return Sweepout(params, X, fixed, ("t", "y_index"), linking, lower, cap)


def eigen_hierarchy(manifold: DiscreteManifold, levels: int = 3, seed: int = 0, t_res: int = 9,
                    tol: float = GRAD_TOL, max_iter: int = 500, max_starts: int = 12):
    """Widths of the first ``levels`` levels of the eigenvalue hierarchy.

    Level ``k`` sweeps from the critical sets of all lower levels.  Its
    critical set is collected by restarting from fresh seeded linking samples
    until a realizer adds no new direction; ``multiplicity`` is the dimension
    of the span found and ``realizers`` an M-orthonormal basis of it.
    """
    if not 1 <= levels <= 4:
        raise BadParameter("levels must lie in 1..4")
    energy = manifold.energy()
    rng = np.random.default_rng(seed)
    lower = np.zeros((energy.dim, 0))
    cap = None
    reports = []
    for _ in range(levels):
        span = np.zeros((energy.dim, 0))
        first = None
        for start in range(max_starts):
            sw = eigen_sweepout(energy, lower, rng, t_res, cap)
            rep = width(sw, energy, tol, max_iter, with_index=first is None)
            first = rep if first is None else first
            grown = _m_orthonormalize(np.column_stack([span, rep.candidate.x]), energy.mass)
            if grown.shape[1] == span.shape[1]:
                break
            span = grown
        else:
            raise NoConvergence("critical set still growing after %d starts" % max_starts, partial=first)
        reports.append(first._replace(multiplicity=span.shape[1], realizers=span))
        lower = np.column_stack([lower, span])
        cap = first.energy
    return reports


def eigen_nested_family(manifold: DiscreteManifold, bases, t, rotations=()):
    """``cos(pi t_k/2) u_k + sin(pi t_k/2)(cos(pi t_{k-1}/2) R_{k-1} u_{k-1} + ... + sin(pi t_2/2) u_1)``.

    ``bases[l]`` is an M-orthonormal basis of the eigenspace of the
    ``(l+1)``-th distinct eigenvalue; ``u_l`` is its first column and
    ``R_l u_l`` is ``bases[l] @ R_l[..., :, 0]``.  ``rotations`` holds
    ``R_2 .. R_{k-1}`` (possibly batched), each special orthogonal.  ``t`` has
    shape ``(..., k)``; ``t_1`` does not enter the formula.
    """
    energy = manifold.energy()
    K, M = energy.stiffness, energy.mass
    k = len(bases)
    if k < 1:
        raise BadEigenbasis("need at least one eigenspace")
    allb = np.column_stack(bases)
    if np.max(np.abs(allb.T @ M @ allb - np.eye(allb.shape[1]))) > 1e-8:
        raise BadEigenbasis("bases are not M-orthonormal")
    lams = []
    for B in bases:
        lam = np.diag(B.T @ K @ B)
        if np.max(np.abs(K @ B - M @ B * lam)) > 1e-8 * max(1.0, float(np.max(np.abs(lam)))) or np.ptp(lam) > 1e-8 * max(1.0, lam.max()):
            raise BadEigenbasis("a basis is not an eigenspace")
        lams.append(lam[0])
    if np.any(np.diff(lams) <= 0):
        raise BadEigenbasis("eigenvalues must be distinct and increasing")
    if len(rotations) != max(k - 2, 0):
        raise BadEigenbasis("need k - 2 rotations")
    t = np.asarray(t, dtype=float)
    if t.shape[-1] != k:
        raise BadParameter("t must have k entries in its last axis")
    F = np.broadcast_to(bases[0][:, 0], t.shape[:-1] + (M.shape[0],))
    for l in range(1, k):
        if 1 <= l <= k - 2:
            R = np.asarray(rotations[l - 1], dtype=float)
            m = bases[l].shape[1]
            if R.shape[-2:] != (m, m):
                raise BadEigenbasis("rotation %d has the wrong size" % (l + 1))
            RtR = np.swapaxes(R, -1, -2) @ R
            if np.max(np.abs(RtR - np.eye(m))) > 1e-10 or np.any(np.linalg.det(R) < 0):
                raise BadEigenbasis("rotation %d is not special orthogonal" % (l + 1))
            u = R[..., :, 0] @ bases[l].T
        else:
            u = bases[l][:, 0]
        c = np.cos(np.pi * t[..., l] / 2)[..., None]
        s = np.sin(np.pi * t[..., l] / 2)[..., None]
        F = c * u + s * F
    return F


def random_rotations(dims, size, rng):
    """Seeded uniform draws from SO(m) for each m in ``dims``."""
    out = []
    for m in dims:
        if m == 1:
            out.append(np.ones((size, 1, 1)))
        else:
            out.append(special_ortho_group.rvs(m, size=size, random_state=rng).reshape(size, m, m))
    return out


# ---------------------------------------------------------------- ellipsoid instance

def ellipse_perimeter(p: float, q: float) -> float:
    """Perimeter of an ellipse with semi-axes ``p`` and ``q`` by adaptive quadrature."""
    val, _ = sint.quad(lambda s: np.sqrt(p * p * np.sin(s) ** 2 + q * q * np.cos(s) ** 2), 0.0, 2 * np.pi,
                       epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(val)


def _frame(m):
    """Orthonormal (e1, e2) with e1 x e2 = m, built from the axis least aligned with m."""
    ref = np.eye(3)[np.argmin(np.abs(m), axis=-1)]
    e1 = ref - np.sum(ref * m, axis=-1, keepdims=True) * m
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    return e1, np.cross(m, e1)


def slice_curves(spec: EllipsoidSpec, normals, offsets, n: int):
    """Constant-speed polygons of the sections ``{x . normal = t * support(normal)}``.

    The section is the image of a circle under ``diag(a, b, c)``, put in its
    principal frame and sampled at equal arc length by inverting the
    incomplete elliptic integral.  ``|t| = 1`` gives point curves.
    """
    D = spec.axes
    nrm = np.atleast_2d(np.asarray(normals, dtype=float))
    nrm = nrm / np.linalg.norm(nrm, axis=1, keepdims=True)
    t = np.broadcast_to(np.asarray(offsets, dtype=float), nrm.shape[:1])
    m = D * nrm
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    e1, e2 = _frame(m)
    r = np.sqrt(np.clip(1 - t * t, 0.0, None))
    P, Q = r[:, None] * D * e1, r[:, None] * D * e2
    center = t[:, None] * D * m
    # rotate (P, Q) to the principal axes
    phi0 = 0.5 * np.arctan2(2 * np.sum(P * Q, 1), np.sum(P * P, 1) - np.sum(Q * Q, 1))
    c0, s0 = np.cos(phi0)[:, None], np.sin(phi0)[:, None]
    U1, U2 = c0 * P + s0 * Q, -s0 * P + c0 * Q
    p, q = np.linalg.norm(U1, axis=1), np.linalg.norm(U2, axis=1)
    swap = p > q
    U1[swap], U2[swap] = U2[swap].copy(), -U1[swap].copy()
    p, q = np.minimum(p, q), np.maximum(p, q)
    live = q > 0
    psi = np.tile(2 * np.pi * np.arange(n) / n, (len(t), 1))
    if np.any(live):
        pl, ql = p[live, None], q[live, None]
        mpar = 1 - (pl / ql) ** 2
        total = 4 * ql * ellipeinc(np.pi / 2, mpar)
        target = total * np.arange(n) / n
        x = psi[live]
        for _ in range(12):
            s = ql * ellipeinc(x, mpar)
            speed = np.sqrt(pl ** 2 * np.sin(x) ** 2 + ql ** 2 * np.cos(x) ** 2)
            x = x - (s - target) / speed
        psi[live] = x
    u1 = np.where(live[:, None], U1 / np.where(p > 0, p, 1.0)[:, None], 0.0)
    u2 = np.where(live[:, None], U2 / np.where(q > 0, q, 1.0)[:, None], 0.0)
    X = (center[:, None, :] + p[:, None, None] * np.cos(psi)[..., None] * u1[:, None, :]
         + q[:, None, None] * np.sin(psi)[..., None] * u2[:, None, :])
    return project_to_ellipsoid(X, spec)


def _direction(angle, a, b):
    return np.cos(angle)[:, None] * a + np.sin(angle)[:, None] * b


def slicing_sweepout(spec: EllipsoidSpec, level: int, resolution: int = 17, n: int = 128,
                     cap: float | None = None) -> Sweepout:
    """Sweepouts of the ellipsoid by parallel planes.

    Level 1 slices by horizontal planes.  Level 2 turns the normal from k to
    -k through j, level 3 adds a second angle that moves the turning plane
    from the j side through i to the -j side.  The offset ``t`` runs over
    [-1, 1] in units of the support function, so ``t = +-1`` are point
    curves.  Slices on the boundary of the parameter cell are fixed.
    """
    if level not in (1, 2, 3):
        raise BadLevel("level must be 1, 2 or 3")
    if resolution < 16:
        raise BadParameter("need at least 16 parameter samples per axis")
    if n < 64 or n % 2:
        raise BadParameter("need an even number >= 64 of points per curve")
    g = np.linspace(-1, 1, resolution)
    i_, j_, k_ = np.eye(3)
    if level == 1:
        (T,) = np.meshgrid(g, indexing="ij")
        T = T.ravel()
        normals = np.tile(k_, (T.size, 1))
        params, names = T[:, None], ("t",)
        fixed = np.abs(T) == 1
    elif level == 2:
        S, T = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
        normals = _direction(np.pi / 2 + S * np.pi / 2, k_, j_)
        params, names = np.column_stack([S, T]), ("s", "t")
        fixed = (np.abs(T) == 1) | (np.abs(S) == 1)
    else:
        Sg, S, T = (a.ravel() for a in np.meshgrid(g, g, g, indexing="ij"))
        horiz = _direction(np.pi / 2 + Sg * np.pi / 2, j_, i_)
        normals = np.cos(np.pi / 2 + S * np.pi / 2)[:, None] * k_ + np.sin(np.pi / 2 + S * np.pi / 2)[:, None] * horiz
        params, names = np.column_stack([Sg, S, T]), ("sigma", "s", "t")
        fixed = (np.abs(T) == 1) | (np.abs(S) == 1) | (np.abs(Sg) == 1)
    X = slice_curves(spec, normals, params[:, -1], n)
    return Sweepout(params, X, fixed, names, cap=cap)


def principal_perimeters(spec: EllipsoidSpec):
    """Oracle perimeters of the sections {x3=0}, {x2=0}, {x1=0}."""
    a, b, c = spec.axes
    return ellipse_perimeter(a, b), ellipse_perimeter(a, c), ellipse_perimeter(b, c)


def ellipsoid_widths(spec: EllipsoidSpec, resolution: int = 17, n: int = 128, tol: float = GRAD_TOL,
                     max_iter: int = 400):
    """Widths of the three slicing levels after pull-tight deformation.

    The boundary cap of each level is the maximum of the previous level's
    undeformed family, which is what its boundary slices are.
    """
    energy = CurveEnergy(spec, n)
    reports = []
    cap = None
    for level in (1, 2, 3):
        sw = slicing_sweepout(spec, level, resolution, n, cap)
        # the next level's boundary is this level's family before deformation
        next_cap = float(np.max(energy.value(sw.configs)))
        reports.append(width(sw, energy, tol, max_iter))
        cap = next_cap
    return reports


def polygon_length(curve):
    curve = np.asarray(curve)
    return float(np.sum(np.linalg.norm(np.roll(curve, -1, axis=0) - curve, axis=1)))


def curve_width(curve):
    """``[2 pi * integral |u'|^2]^(1/2)`` of a uniformly parametrized polygon."""
    curve = np.asarray(curve)
    d = np.roll(curve, -1, axis=0) - curve
    return float(np.sqrt(len(curve) * np.sum(d * d)))


class ShortenResult(NamedTuple):
    curve: np.ndarray
    length: float
    energy: float
    sweeps: int
    stationarity: float
    lengths: tuple


def stationarity(curve, spec: EllipsoidSpec) -> float:
    """Largest tangential second difference, relative to the squared mean edge."""
    curve = np.asarray(curve)
    lap = np.roll(curve, -1, axis=0) - 2 * curve + np.roll(curve, 1, axis=0)
    nu = spec.normals(curve)
    tan = lap - np.sum(lap * nu, axis=1, keepdims=True) * nu
    edge = polygon_length(curve) / len(curve)
    return float(np.max(np.linalg.norm(tan, axis=1)) / edge ** 2)


def _reparametrize(curve, spec):
    """Resample at equal arc length along the polygon, keeping the first vertex."""
    n = len(curve)
    closed = np.vstack([curve, curve[:1]])
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(closed, axis=0), axis=1))])
    target = s[-1] * np.arange(n) / n
    out = np.column_stack([np.interp(target, s, closed[:, c]) for c in range(3)])
    return project_to_ellipsoid(out, spec)


def birkhoff_shorten(curve, spec: EllipsoidSpec, tol: float = 1e-8, max_sweeps: int = 20000,
                     collapse_length: float = 1e-3, reparam_every: int = 25) -> ShortenResult:
    """Alternating midpoint replacement on the ellipsoid.

    Even and odd vertices are replaced in turn by the closest point of the
    ellipsoid to the midpoint of their neighbours, which minimizes the local
    energy exactly, so the energy never increases.  Every ``reparam_every``
    sweeps the curve is resampled at constant speed when that lowers the
    energy (``reparam_every=0`` turns this off; the midpoint sweeps alone
    commute exactly with reflections of the curve).  Stops when :func:`stationarity` drops below ``tol``; raises
    ``CurveCollapse`` when the length falls below ``collapse_length``.
    """
    u = np.array(curve, dtype=float)
    n = len(u)
    if u.ndim != 2 or u.shape[1] != 3 or n < 64 or n % 2:
        raise BadParameter("need an even number >= 64 of points in R^3")
    if np.max(spec.residual(u)) > 1e-8:
        raise BadParameter("curve is not on the ellipsoid")
    energy = CurveEnergy(spec, n)
    lengths = [polygon_length(u)]
    idx = [np.arange(0, n, 2), np.arange(1, n, 2)]
    st = stationarity(u, spec)
    for sweep in range(1, max_sweeps + 1):
        if st < tol:
            break
        for sel in idx:
            u[sel] = project_to_ellipsoid(0.5 * (u[sel - 1] + u[(sel + 1) % n]), spec)
        if reparam_every and sweep % reparam_every == 0:
            cand = _reparametrize(u, spec)
            if energy.value(cand)[0] < energy.value(u)[0]:
                u = cand
        lengths.append(polygon_length(u))
        if lengths[-1] < collapse_length:
            raise CurveCollapse("curve shrank below %.3g after %d sweeps" % (collapse_length, sweep), curve=u)
        st = stationarity(u, spec)
    if st >= tol:
        raise NoConvergence("stationarity %.3g after %d sweeps" % (st, max_sweeps), partial=u)
    return ShortenResult(u, lengths[-1], float(energy.value(u)[0]), len(lengths) - 1, st, tuple(lengths))
