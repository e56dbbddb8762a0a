"""Leaf foliations of the zero locus of a bilinear map on R^n x R^n.

A :class:`BilinearSystem` is given by matrices ``M_k`` with
``f_k(a, b) = a^T M_k b`` and a level vector.  Freezing ``a`` gives the
A-leaf through a point, on which only ``b`` moves; freezing ``b`` gives the
B-leaf.  Each leaf carries a vector field:

* on an A-leaf, ``b' = P(a) S a`` where ``S`` rotates consecutive coordinate
  pairs by a quarter turn and ``P(a)`` projects onto
  ``{v : a^T M_k v = 0 for all k}``;
* on a B-leaf, ``a' = P'(b) S b`` with the transposed projection.

For ``n = 2`` and ``f = a1 b1 + a2 b2`` these are ``b' = (a2, -a1)`` and
``a' = (b2, -b1)``.  Explicit fields (sympy expressions in ``a1..an,
b1..bn``) and extra constraints can be supplied instead, which is how the
three-dimensional example on the product of unit spheres is built: there
``b' = a x b`` and ``a' = b x a`` and every leaf is a great circle.

Fields and their brackets are derived symbolically with sympy and
lambdified once per system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from .errors import Degenerate, HypothesisViolation, StepFailure

A_LEAF = "A"  # a frozen, b moves
B_LEAF = "B"  # b frozen, a moves
LEVEL_TOL = 1e-9
RANK_TOL = 1e-9


def _quarter_turn(n):
    s = sp.zeros(n, n)
    for i in range(0, n - 1, 2):
        s[i, i + 1] = 1
        s[i + 1, i] = -1
    return s


def _projector(normals):
    """Orthogonal projector onto the complement of the columns of ``normals``."""
    n = normals.shape[0]
    gram = normals.T * normals
    return sp.eye(n) - normals * gram.inv() * normals.T


@dataclass(eq=False)
class BilinearSystem:
    n: int
    matrices: list
    level: tuple = None
    a_field: object = None  # velocity of b on A-leaves (sympy, length n)
    b_field: object = None  # velocity of a on B-leaves
    extra_constraints: tuple = ()  # sympy expressions vanishing on the level set
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        mats = [np.asarray(m, dtype=float) for m in self.matrices]
        for m in mats:
            if m.shape != (self.n, self.n):
                raise ValueError(f"expected {self.n}x{self.n} matrices, got {m.shape}")
        self.matrices = mats
        if self.level is None:
            self.level = tuple(0.0 for _ in mats)
        self.level = tuple(float(v) for v in np.atleast_1d(self.level))
        if len(self.level) != len(mats):
            raise ValueError("one level per bilinear form")

    # symbolic layer ---------------------------------------------------------

    @cached_property
    def symbols(self):
        a = sp.Matrix(sp.symbols(f"a1:{self.n + 1}"))
        b = sp.Matrix(sp.symbols(f"b1:{self.n + 1}"))
        return a, b

    def _sym_matrices(self):
        return [sp.Matrix(m.tolist()).applyfunc(sp.nsimplify) for m in self.matrices]

    @cached_property
    def constraints(self):
        a, b = self.symbols
        forms = [(a.T * m * b)[0] - sp.nsimplify(lv) for m, lv in zip(self._sym_matrices(), self.level)]
        return sp.Matrix(forms + list(self.extra_constraints))

    @cached_property
    def fields(self):
        """Full vector fields (X, Y) on R^{2n}: X moves b, Y moves a."""
        a, b = self.symbols
        mats = self._sym_matrices()
        s = _quarter_turn(self.n)
        if self.a_field is not None:
            vb = sp.Matrix(self.a_field)
        else:
            normals = sp.Matrix.hstack(*[m.T * a for m in mats])
            vb = (_projector(normals) * s * a).applyfunc(sp.cancel)
        if self.b_field is not None:
            va = sp.Matrix(self.b_field)
        else:
            normals = sp.Matrix.hstack(*[m * b for m in mats])
            va = (_projector(normals) * s * b).applyfunc(sp.cancel)
        zero = sp.zeros(self.n, 1)
        return sp.Matrix.vstack(zero, vb), sp.Matrix.vstack(va, zero)

    def _lambda(self, key, expr):
        if key not in self._cache:
            a, b = self.symbols
            self._cache[key] = sp.lambdify([list(a) + list(b)], expr, "numpy")
        return self._cache[key]

    # numeric layer ------------------------------------------------------------

    def constraint_values(self, a, b):
        f = self._lambda("g", self.constraints)
        return np.asarray(f(np.concatenate([a, b])), dtype=float).ravel()

    def constraint_jacobian(self, a, b):
        a_s, b_s = self.symbols
        jac = self.constraints.jacobian(list(a_s) + list(b_s))
        f = self._lambda("dg", jac)
        return np.asarray(f(np.concatenate([a, b])), dtype=float).reshape(len(self.constraints), 2 * self.n)

    def velocity(self, a, b, side):
        x, y = self.fields
        expr = x if side == A_LEAF else y
        f = self._lambda("X" if side == A_LEAF else "Y", expr)
        v = np.asarray(f(np.concatenate([a, b])), dtype=float).ravel()
        return v[self.n :] if side == A_LEAF else v[: self.n]

    def deviation(self, a, b):
        vals = self.constraint_values(a, b)
        return float(np.max(np.abs(vals), initial=0.0))

    def tangent_dimension(self, a, b, tol=RANK_TOL):
        """Dimension of the level set at (a, b): 2n minus the constraint rank."""
        s = np.linalg.svd(self.constraint_jacobian(a, b), compute_uv=False)
        return 2 * self.n - int(np.sum(s > tol))


def example1():
    """a1 b1 + a2 b2 = 0; the ratio a1 / a2 = -b2 / b1 is constant on classes."""
    return BilinearSystem(2, [np.eye(2)], (0.0,), name="example1")


def example2_reduced():
    """Affine chart a3 = b3 = 1 of the projectivized three-dimensional quadric.

    The quadric a.b = 0 becomes a1 b1 + a2 b2 = -1 with the same leaf fields
    as :func:`example1`.
    """
    return BilinearSystem(2, [np.eye(2)], (-1.0,), name="example2_reduced")


def example2():
    """a.b = 0 on the product of unit spheres in R^3, with rotation fields."""
    n = 3
    a = sp.Matrix(sp.symbols("a1:4"))
    b = sp.Matrix(sp.symbols("b1:4"))
    return BilinearSystem(
        n,
        [np.eye(n)],
        (0.0,),
        a_field=a.cross(b),
        b_field=b.cross(a),
        extra_constraints=((a.T * a)[0] - 1, (b.T * b)[0] - 1),
        name="example2",
    )


SYSTEMS = {"example1": example1, "example2": example2, "example2_reduced": example2_reduced}


# ---------------------------------------------------------------------------
# leaf flows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafState:
    a: np.ndarray
    b: np.ndarray
    side: str | None = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def _project(sys, a, b, side, iters=8):
    """Gauss-Newton projection of the moving side back onto the level set."""
    n = sys.n
    for _ in range(iters):
        g = sys.constraint_values(a, b)
        if np.max(np.abs(g), initial=0.0) < 1e-15:
            break
        jac = sys.constraint_jacobian(a, b)
        cols = slice(n, 2 * n) if side == A_LEAF else slice(0, n)
        delta = -np.linalg.pinv(jac[:, cols]) @ g
        if side == A_LEAF:
            b = b + delta
        else:
            a = a + delta
    return a, b


def _rk4(sys, a, b, side, h):
    moving = b if side == A_LEAF else a

    def f(m):
        return sys.velocity(a, m, side) if side == A_LEAF else sys.velocity(m, b, side)

    k1 = f(moving)
    k2 = f(moving + 0.5 * h * k1)
    k3 = f(moving + 0.5 * h * k2)
    k4 = f(moving + h * k3)
    return moving + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def leaf_flow(sys, state, side, t, tol=1e-10, h0=0.1, h_min=1e-12):
    """Flow ``state`` for time ``t`` along the ``side`` leaf ("A" or "B").

    Adaptive RK4 with step doubling: a step of size h is accepted when it
    agrees with two half steps within ``tol * |h|``.  After every accepted
    step the moving side is projected back to the level set.  The frozen side
    is copied unchanged.
    """
    if side not in (A_LEAF, B_LEAF):
        raise ValueError("side must be 'A' or 'B'")
    a = np.array(state.a, dtype=float)
    b = np.array(state.b, dtype=float)
    if t == 0:
        return LeafState(a, b, side)
    sign = 1.0 if t > 0 else -1.0
    remaining = abs(t)
    h = min(h0, remaining)
    while remaining > 0:
        h = min(h, remaining)
        if remaining - h <= 1e-12 * abs(t):
            h = remaining  # absorb rounding leftovers
        full = _rk4(sys, a, b, side, sign * h)
        if side == A_LEAF:
            half = _rk4(sys, a, b, side, sign * h / 2)
            two = _rk4(sys, a, half, side, sign * h / 2)
        else:
            half = _rk4(sys, a, b, side, sign * h / 2)
            two = _rk4(sys, half, b, side, sign * h / 2)
        err = np.max(np.abs(two - full)) / 15.0
        if not np.all(np.isfinite(two)):
            err = np.inf
        if err <= tol * h:
            new = two + (two - full) / 15.0
            if side == A_LEAF:
                a, b = _project(sys, a, new, side)
            else:
                a, b = _project(sys, new, b, side)
            remaining -= h
            if err < tol * h / 32:
                h *= 2.0
        else:
            h /= 2.0
            if h < h_min:
                raise StepFailure(f"step size fell below {h_min:g} with {remaining:.3g} left")
    if side == A_LEAF:
        a = np.array(state.a, dtype=float)
    else:
        b = np.array(state.b, dtype=float)
    return LeafState(a, b, side)


def alternate(sys, state, times):
    """Alternate A- and B-leaf flows for the given times, starting on the A side."""
    for k, t in enumerate(times):
        state = leaf_flow(sys, state, A_LEAF if k % 2 == 0 else B_LEAF, t)
    return state


# ---------------------------------------------------------------------------
# invariants and bracket rank
# ---------------------------------------------------------------------------

def _line_angle(x, y):
    """Angle in [0, pi) of the projective point [x : y]."""
    return float(np.mod(np.arctan2(y, x), np.pi))


def example1_forms(state, tol=1e-12):
    """Angles of [a1 : a2] and [-b2 : b1] for a point of the first example."""
    a, b = state.a, state.b
    if np.linalg.norm(a) < tol or np.linalg.norm(b) < tol:
        raise Degenerate("a = 0 or b = 0: the ratio is undefined")
    f = a[0] * b[0] + a[1] * b[1]
    if abs(f) >= LEVEL_TOL * max(1.0, np.linalg.norm(a) * np.linalg.norm(b)):
        raise HypothesisViolation("level", f"a1 b1 + a2 b2 = {f:.3e}")
    return _line_angle(a[0], a[1]), _line_angle(-b[1], b[0])


def example1_invariant(state):
    """The ratio a1 / a2 = -b2 / b1, stored as the angle of [a1 : a2] in [0, pi)."""
    return example1_forms(state)[0]


def line_distance(s, t):
    """Distance between two angles of projective lines."""
    d = abs(s - t) % np.pi
    return min(d, np.pi - d)


def _bracket(x, y, coords):
    return y.jacobian(coords) * x - x.jacobian(coords) * y


def bracket_fields(sys, depth=3):
    """X, Y and their iterated brackets up to ``depth`` (symbolic)."""
    a, b = sys.symbols
    coords = list(a) + list(b)
    x, y = sys.fields
    levels = [[x, y]]
    out = [x, y]
    for _ in range(depth - 1):
        nxt = []
        for u in levels[-1]:
            for v in (x, y):
                w = _bracket(u, v, coords).applyfunc(sp.cancel)
                nxt.append(w)
        levels.append(nxt)
        out.extend(nxt)
    return out


def bracket_rank(sys, a, b, depth=3, tol=RANK_TOL):
    """Rank of the span of the leaf fields and their brackets at (a, b)."""
    key = f"brackets{depth}"
    if key not in sys._cache:
        fields = bracket_fields(sys, depth)
        sys._cache[key] = sys._lambda(key + "_f", sp.Matrix.hstack(*fields))
    mat = np.asarray(sys._cache[key](np.concatenate([a, b])), dtype=float)
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > tol))


def random_point(sys, rng):
    """A generic point of the level set: Gaussian a, b projected onto it."""
    a = rng.standard_normal(sys.n)
    b = rng.standard_normal(sys.n)
    if sys.extra_constraints:
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
    for _ in range(20):
        g = sys.constraint_values(a, b)
        if np.max(np.abs(g), initial=0.0) < 1e-14:
            break
        jac = sys.constraint_jacobian(a, b)
        delta = -np.linalg.pinv(jac) @ g
        a = a + delta[: sys.n]
        b = b + delta[sys.n :]
    return LeafState(a, b)
