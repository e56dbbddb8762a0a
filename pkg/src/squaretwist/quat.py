"""Unit quaternions as a model of SU(2).

Two layers live here.  The array layer (``qmul``, ``qconj``, ...) works on
numpy arrays whose last axis has length 4, ordered ``(w, x, y, z)`` in the
basis ``{1, i, j, k}``; every sampler and orbit loop in the package runs on
it.  The value layer (:class:`UnitQuaternion`, :class:`ImaginaryVector`,
:class:`ProjectiveDirection`, :class:`Isometry4`) wraps single values for the
public API.

Traces follow the SU(2) identification, so ``trace(q) = 2 w`` and the scalar
product is ``<X, Y> = tr(X conj(Y)) = 2 (X . Y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AxisUndefined,
    DegenerateCenter,
    NotSpecialOrthogonal,
    TraceMismatch,
)

UNIT_TOL = 1e-12
AXIS_TOL = 1e-12
TRACE_MATCH_TOL = 1e-9
DIRECTION_MIN_NORM = 1e-9
RANK_TOL = 1e-9


# ---------------------------------------------------------------------------
# array layer
# ---------------------------------------------------------------------------

def qmul(a, b):
    """Hamilton product, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(a):
    a = np.asarray(a, dtype=float)
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def qnormalize(a):
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def qprod(*factors):
    """Product of a chain of quaternion arrays, left to right."""
    out = np.asarray(factors[0], dtype=float)
    for f in factors[1:]:
        out = qmul(out, f)
    return out


def qtrace(a):
    return 2.0 * np.asarray(a, dtype=float)[..., 0]


def qtheta(a):
    """Rotation angle in [0, pi]; equals arccos(trace / 2) for unit input."""
    a = np.asarray(a, dtype=float)
    return np.arctan2(np.linalg.norm(a[..., 1:], axis=-1), a[..., 0])


def qaxis(a):
    """Unit imaginary axis.  Entries are NaN where the axis is undefined."""
    a = np.asarray(a, dtype=float)
    v = a[..., 1:]
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > AXIS_TOL, v / n, np.nan)


def qexp_axis(axis, t):
    """cos t + sin t * axis for a unit imaginary ``axis`` (shape (..., 3))."""
    axis = np.asarray(axis, dtype=float)
    t = np.asarray(t, dtype=float)
    c = np.cos(t)[..., None]
    s = np.sin(t)[..., None]
    imag = s * axis
    return np.concatenate([np.broadcast_to(c, imag.shape[:-1] + (1,)), imag], axis=-1)


def qone_param(q, t):
    """Velocity-one subgroup through ``q``: cos t + sin t * axis(q)."""
    return qexp_axis(qaxis(q), t)


def qpow(q, n):
    """Integer power by repeated squaring; exact group arithmetic."""
    q = np.asarray(q, dtype=float)
    if n < 0:
        q = qconj(q)
        n = -n
    result = np.zeros_like(q)
    result[..., 0] = 1.0
    base = q
    while n:
        if n & 1:
            result = qmul(result, base)
        base = qmul(base, base)
        n >>= 1
    return result


def qdot(a, b):
    """Euclidean 4D dot product (half the trace pairing)."""
    return np.sum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float), axis=-1)


def haar_array(rng, size=()):
    """Uniform samples on SU(2): normalized 4D Gaussians."""
    if isinstance(size, int):
        size = (size,)
    g = rng.standard_normal(tuple(size) + (4,))
    return qnormalize(g)


def left_matrix(p):
    """4x4 matrix of X -> p X."""
    w, x, y, z = np.asarray(p, dtype=float)
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    )


def right_matrix(q):
    """4x4 matrix of X -> X q."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, z, -y],
            [y, -z, w, x],
            [z, y, -x, w],
        ]
    )


def _shortest_arc(u, v):
    """Unit quaternion rotating unit imaginary ``u`` onto ``v`` (needs u.v >= 0)."""
    cross = np.cross(u, v)
    q = np.concatenate([[1.0 + np.dot(u, v)], cross])
    return q / np.linalg.norm(q)


def _orthogonal_unit(u):
    trial = np.eye(3)[np.argmin(np.abs(u))]
    w = np.cross(u, trial)
    return w / np.linalg.norm(w)


def rotation_taking(u, v):
    """A unit quaternion X with X u X^-1 = v for unit imaginary 3-vectors.

    The shortest arc is used when u and v are within a right angle; otherwise
    u is first flipped by a half-turn about an axis orthogonal to it, which
    keeps the construction well conditioned near antipodal pairs.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.dot(u, v) >= 0.0:
        return _shortest_arc(u, v)
    w = _orthogonal_unit(u)
    flip = np.concatenate([[0.0], w])
    return qmul(_shortest_arc(-u, v), flip)


# ---------------------------------------------------------------------------
# value layer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImaginaryVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape == (4,):
            arr = arr[1:]
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def norm(self):
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


def projective_distance(u, v):
    """Sign-free angle between the lines spanned by 3-vectors ``u`` and ``v``.

    Mathematically arccos(|<u,v>| / (|u||v|)); computed through atan2 so the
    result stays accurate when the lines nearly coincide.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.abs(np.sum(u * v, axis=-1))
    return np.arctan2(cross, dot)


@dataclass(frozen=True)
class ProjectiveDirection:
    """A line in the imaginary quaternions."""

    representative: ImaginaryVector

    def __post_init__(self):
        if self.representative.norm() < DIRECTION_MIN_NORM:
            raise ValueError(
                f"direction representative norm {self.representative.norm():.3e} "
                f"below {DIRECTION_MIN_NORM}"
            )

    @classmethod
    def from_array(cls, arr):
        return cls(ImaginaryVector.from_array(arr))

    def unit(self):
        v = self.representative.as_array()
        return v / np.linalg.norm(v)

    def distance(self, other):
        return float(
            projective_distance(self.representative.as_array(), other.representative.as_array())
        )


@dataclass(frozen=True)
class UnitQuaternion:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"not a unit quaternion (norm {n!r})")

    @classmethod
    def from_array(cls, arr, normalize=True):
        arr = np.asarray(arr, dtype=float)
        if normalize:
            arr = arr / np.linalg.norm(arr)
        return cls(*(float(c) for c in arr))

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_array(self):
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z)

    def inverse(self):
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def trace(self):
        return 2.0 * self.w

    def angle(self):
        return theta(self)

    def axis(self):
        return axis(self)

    def imag(self):
        return ImaginaryVector(self.x, self.y, self.z)

    def distance(self, other):
        return float(np.linalg.norm(self.as_array() - other.as_array()))


ONE = UnitQuaternion(1.0, 0.0, 0.0, 0.0)
I = UnitQuaternion(0.0, 1.0, 0.0, 0.0)
J = UnitQuaternion(0.0, 0.0, 1.0, 0.0)
K = UnitQuaternion(0.0, 0.0, 0.0, 1.0)


def _arr(q):
    return q.as_array() if isinstance(q, UnitQuaternion) else np.asarray(q, dtype=float)


def mul(a, b):
    return UnitQuaternion.from_array(qmul(_arr(a), _arr(b)))


def inverse(q):
    return UnitQuaternion.from_array(qconj(_arr(q)), normalize=False)


def trace(q):
    return float(qtrace(_arr(q)))


def theta(q):
    return float(qtheta(_arr(q)))


def is_central(q, tol=AXIS_TOL):
    return bool(np.linalg.norm(_arr(q)[1:]) <= tol)


def axis(q):
    """Unit imaginary part of ``q``; raises AxisUndefined at +-1."""
    a = _arr(q)
    n = np.linalg.norm(a[1:])
    if n <= AXIS_TOL:
        raise AxisUndefined(f"axis undefined for central quaternion {tuple(a)}")
    return ImaginaryVector.from_array(a[1:] / n)


def one_param(q, t):
    """The point at time ``t`` of the velocity-one subgroup through ``q``.

    At ``t = theta(q)`` this returns ``q``.
    """
    ax = axis(q).as_array()
    return UnitQuaternion.from_array(qexp_axis(ax, t))


def conj_solve(p, q, angle):
    """Point at parameter ``angle`` on the circle {X : X p X^-1 = q}.

    The circle is ``X0 * one_param(p, angle)`` for a fixed solution ``X0``;
    when ``p == q`` the base solution is 1, so the circle is the centralizer.
    """
    pa, qa = _arr(p), _arr(q)
    if abs(qtrace(pa) - qtrace(qa)) >= TRACE_MATCH_TOL:
        raise TraceMismatch(
            f"traces differ: {qtrace(pa):.12g} vs {qtrace(qa):.12g}"
        )
    if np.linalg.norm(pa[1:]) <= AXIS_TOL or np.linalg.norm(qa[1:]) <= AXIS_TOL:
        raise DegenerateCenter("p is central; every X conjugates p to q")
    u = pa[1:] / np.linalg.norm(pa[1:])
    v = qa[1:] / np.linalg.norm(qa[1:])
    x0 = rotation_taking(u, v)
    return UnitQuaternion.from_array(qmul(x0, qexp_axis(u, angle)))


@dataclass(frozen=True)
class PhiMap:
    """The linear map X -> aI X aJ^-1 - X with its numerical structure."""

    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    kernel: np.ndarray  # columns span the kernel
    image: np.ndarray  # columns span the image


def phi_map(a_i, a_j, tol=RANK_TOL):
    m = left_matrix(_arr(a_i)) @ right_matrix(qconj(_arr(a_j))) - np.eye(4)
    u, s, vt = np.linalg.svd(m)
    rank = int(np.sum(s > tol))
    return PhiMap(
        matrix=m,
        singular_values=s,
        rank=rank,
        kernel=vt[rank:].T,
        image=u[:, :rank],
    )


@dataclass(frozen=True)
class Isometry4:
    """Orthogonal map of H in the basis {1, i, j, k}."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError("isometry must be 4x4")
        if np.max(np.abs(m.T @ m - np.eye(4))) > 1e-10:
            raise ValueError("matrix is not orthogonal within 1e-10")
        object.__setattr__(self, "matrix", m)

    @property
    def det(self):
        return 1 if np.linalg.det(self.matrix) > 0 else -1

    @classmethod
    def two_sided(cls, p, q):
        """The isometry X -> p X q."""
        return cls(left_matrix(_arr(p)) @ right_matrix(_arr(q)))

    def __call__(self, x):
        return UnitQuaternion.from_array(self.matrix @ _arr(x))


def _basis_maps():
    basis = np.eye(4)
    return np.array(
        [[left_matrix(basis[a]) @ right_matrix(basis[b]) for b in range(4)] for a in range(4)]
    )


_BASIS_MAPS = _basis_maps()


def so4_factor(phi):
    """Return (p, q) with phi(X) = p X q, unique up to a common sign.

    The maps X -> e_a X e_b are orthogonal for the Frobenius pairing, each of
    squared norm 4, so the coefficient array K[a, b] = <e_a . e_b, phi> / 4 of
    an orientation-preserving isometry is the rank-one tensor p q^T.  The
    leading singular pair of K recovers it.
    """
    m = phi.matrix if isinstance(phi, Isometry4) else np.asarray(phi, dtype=float)
    if np.linalg.det(m) <= 0:
        raise NotSpecialOrthogonal("determinant is not +1")
    k = np.einsum("abij,ij->ab", _BASIS_MAPS, m) / 4.0
    u, s, vt = np.linalg.svd(k)
    if s[1] > 1e-6 * s[0]:
        raise NotSpecialOrthogonal(f"coefficient array is not rank one (s={s})")
    p = u[:, 0]
    q = vt[0]
    # pin the sign: largest |coordinate| of p is positive
    if p[np.argmax(np.abs(p))] < 0:
        p, q = -p, -q
    # rescale so that the two-sided map matches, absorbing the singular value
    p = p / np.linalg.norm(p)
    q = q / np.linalg.norm(q)
    if np.sum(k * np.outer(p, q)) < 0:
        q = -q
    return UnitQuaternion.from_array(p), UnitQuaternion.from_array(q)


def haar(rng):
    """One Haar-random unit quaternion drawn from ``rng``."""
    return UnitQuaternion.from_array(haar_array(rng))
