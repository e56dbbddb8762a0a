"""Invariant functions on representation varieties and their numerical checks.

The direction invariants rest on a rectangle of squares with left side
``A_I``, right side ``A_J``, bottom ``B_I`` and top ``B_J``, so that
``A_I B_J = B_I A_J``.  When ``A_I`` is conjugate to ``A_J`` and ``B_I`` to
``B_J`` the imaginary vectors ``A_I - A_J`` and ``B_I - B_J`` span the same
line.  Twists along one direction fix one side of that equation, so the line
is invariant under both families of twists.

:func:`locate_rectangles` finds such rectangles from the combinatorics alone.
Two sides are certified conjugate when they are cyclic rotations of the same
word, or single letters linked by a chain of squares whose relator is a
conjugation (``sigma'(j) = j`` gives ``a_j ~ a_sigma(j)``; ``sigma(j) = j``
gives ``b_j ~ b_sigma'(j)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import Degenerate, HypothesisViolation, UndefinedRatio
from .origami import GeneratorWord, Letter, Origami
from .quat import (
    ProjectiveDirection,
    _arr,
    haar_array,
    projective_distance,
    qconj,
    qmul,
    qnormalize,
    qtrace,
)
from . import _holonomy as H
from .repvar import evaluate_word, relator_deviation, residual, rng_for
from .twist import orbit_arrays, random_word, twist_arrays

RECTANGLE_TOL = 1e-9
TRACE_TOL = 1e-9
MIN_DIFFERENCE = 1e-6
RESIDUAL_TOL = 1e-9
RATIO_GUARD = 1e-6


@dataclass(frozen=True)
class InvariantReport:
    value: Any
    defined: bool
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DirectionPair:
    """The two sides of a direction identity and their angular distance."""

    a_side: ProjectiveDirection
    b_side: ProjectiveDirection
    distance: float
    orthogonality: float | None = None


# ---------------------------------------------------------------------------
# the one-square lemma
# ---------------------------------------------------------------------------

def _imag_difference(p, q):
    return (p - q)[1:]


def lemma_one_square_check(a_i, a_j, b_i, b_j):
    """Angle between [A_I - A_J] and [B_I - B_J] for a rectangle A_I B_J = B_I A_J.

    Raises :class:`HypothesisViolation` naming the guard (``rectangle``,
    ``trace_a`` or ``trace_b``) when the hypotheses fail, and
    :class:`Degenerate` when either difference is too small to define a
    direction.
    """
    a_i, a_j, b_i, b_j = (_arr(q) for q in (a_i, a_j, b_i, b_j))
    rect = np.linalg.norm(qmul(a_i, b_j) - qmul(b_i, a_j))
    if rect >= RECTANGLE_TOL:
        raise HypothesisViolation("rectangle", f"|A_I B_J - B_I A_J| = {rect:.3e}")
    if abs(qtrace(a_i) - qtrace(a_j)) >= TRACE_TOL:
        raise HypothesisViolation("trace_a", "A_I and A_J have different traces")
    if abs(qtrace(b_i) - qtrace(b_j)) >= TRACE_TOL:
        raise HypothesisViolation("trace_b", "B_I and B_J have different traces")
    if np.linalg.norm(a_i - a_j) < MIN_DIFFERENCE:
        raise Degenerate("A_I = A_J: the direction [A_I - A_J] is undefined")
    if np.linalg.norm(b_i - b_j) < MIN_DIFFERENCE:
        raise Degenerate("B_I = B_J: the direction [B_I - B_J] is undefined")
    return projective_distance(_imag_difference(a_i, a_j), _imag_difference(b_i, b_j))


def rectangle_tuples(rng, n):
    """``n`` random tuples (A_I, A_J, B_I, B_J) satisfying the lemma's hypotheses.

    A_J is a Haar conjugate of A_I, B_J is uniform on the great sphere
    tr(A_I X A_J^-1) = tr(X), and B_I = A_I B_J A_J^-1.  Returns an array of
    shape (n, 4, 4).
    """
    rng = rng_for(rng)
    a_i = haar_array(rng, n)
    g = haar_array(rng, n)
    a_j = qmul(qmul(g, a_i), qconj(g))
    basis = np.eye(4)
    # normal of the linear condition on X, one row per sample
    normal = np.stack(
        [qtrace(qmul(qmul(a_i, e), qconj(a_j))) - qtrace(e) for e in basis], axis=-1
    )
    x = rng.standard_normal((n, 4))
    nn = np.sum(normal * normal, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.where(nn > 1e-24, x - np.sum(x * normal, axis=-1, keepdims=True) / nn * normal, x)
    b_j = qnormalize(x)
    b_i = qnormalize(qmul(qmul(a_i, b_j), qconj(a_j)))
    return np.stack([a_i, a_j, b_i, b_j], axis=1)


# ---------------------------------------------------------------------------
# locating rectangles on an origami
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rectangle:
    """Words for the four sides of a rectangle of squares."""

    left: GeneratorWord
    right: GeneratorWord
    bottom: GeneratorWord
    top: GeneratorWord
    squares: tuple

    def __str__(self):
        return f"[{self.left} - {self.right}] = [{self.bottom} - {self.top}] (squares {self.squares})"


def _word(kind, indices):
    return GeneratorWord(tuple(Letter(kind, i, 1) for i in indices))


def _conjugacy_classes(o):
    """Union-find over generator names from conjugation relators."""
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for j in range(1, o.d + 1):
        if o.top(j) == j:
            union(f"a{j}", f"a{o.right(j)}")
        if o.right(j) == j:
            union(f"b{j}", f"b{o.top(j)}")
    return find


def _rotation_of(u, v):
    lu = list(u)
    lv = list(v)
    if len(lu) != len(lv):
        return False
    return any(lu[k:] + lu[:k] == lv for k in range(len(lu)))


def _certified_conjugate(u, v, find):
    if _rotation_of(u, v):
        return True
    if len(u) == 1 and len(v) == 1:
        (x,), (y,) = tuple(u), tuple(v)
        return x.exp == y.exp == 1 and find(x.generator) == find(y.generator)
    return False


def locate_rectangles(o: Origami):
    """Rectangles of squares on which the lemma applies, in a fixed order.

    Vertical stacks ``i, sigma'(i), ...`` of height k come first (by k, then
    i), then horizontal runs.  Rectangles whose sides coincide as words are
    skipped since their directions vanish identically.
    """
    find = _conjugacy_classes(o)
    found = []
    for k in range(1, o.d + 1):
        for i in range(1, o.d + 1):
            col = [i]
            for _ in range(k - 1):
                col.append(o.top(col[-1]))
            top = o.top(col[-1])
            rect = Rectangle(
                left=_word("a", col),
                right=_word("a", [o.right(j) for j in col]),
                bottom=_word("b", [i]),
                top=_word("b", [top]),
                squares=tuple(col),
            )
            if _admissible(rect, find):
                found.append(rect)
    for m in range(2, o.d + 1):
        for i in range(1, o.d + 1):
            row = [i]
            for _ in range(m - 1):
                row.append(o.right(row[-1]))
            rect = Rectangle(
                left=_word("a", [i]),
                right=_word("a", [o.right(row[-1])]),
                bottom=_word("b", row),
                top=_word("b", [o.top(j) for j in row]),
                squares=tuple(row),
            )
            if _admissible(rect, find):
                found.append(rect)
    return found


def _admissible(rect, find):
    if rect.left == rect.right or rect.bottom == rect.top:
        return False
    return _certified_conjugate(rect.left, rect.right, find) and _certified_conjugate(
        rect.bottom, rect.top, find
    )


def rectangle_directions(rep, rect):
    """Evaluate a located rectangle and return the :class:`DirectionPair`."""
    a_i, a_j, b_i, b_j = (
        evaluate_word(rep, w).as_array() for w in (rect.left, rect.right, rect.bottom, rect.top)
    )
    dist = lemma_one_square_check(a_i, a_j, b_i, b_j)
    return DirectionPair(
        a_side=ProjectiveDirection.from_array(_imag_difference(a_i, a_j)),
        b_side=ProjectiveDirection.from_array(_imag_difference(b_i, b_j)),
        distance=float(dist),
    )


def _require_solution(rep, tol=RESIDUAL_TOL):
    res = residual(rep).max
    if res >= tol:
        raise HypothesisViolation("residual", f"relator residual {res:.3e} >= {tol:g}")


def direction_invariant(rep, o, rect=None):
    """Direction pair of the first located rectangle (or of ``rect``)."""
    _require_solution(rep)
    if rect is None:
        rects = locate_rectangles(o)
        if not rects:
            raise Degenerate("no rectangle with certified conjugate sides")
        rect = rects[0]
    return rectangle_directions(rep, rect)


def sprime_invariant(rep):
    """[A2 A3 - A3 A2] against [B1 - B2] on the three-square surface.

    Also checks that A2 A3 - A3 A2 is orthogonal to 1, A2 and A3; the largest
    inner product is stored on the result as ``orthogonality``.
    """
    _require_solution(rep)
    a2, a3, b1, b2 = (rep.array(n) for n in ("a2", "a3", "b1", "b2"))
    lhs = qmul(a2, a3)
    rhs = qmul(a3, a2)
    if np.linalg.norm(lhs - rhs) < MIN_DIFFERENCE:
        raise Degenerate("A2 and A3 commute")
    # rectangle of squares 2, 3: (A2 A3) B1 = B2 (A3 A2)
    dist = lemma_one_square_check(lhs, rhs, b2, b1)
    diff = lhs - rhs
    ortho = max(abs(float(diff @ v)) for v in (np.array([1.0, 0, 0, 0]), a2, a3))
    return DirectionPair(
        a_side=ProjectiveDirection.from_array(diff[1:]),
        b_side=ProjectiveDirection.from_array((b1 - b2)[1:]),
        distance=float(dist),
        orthogonality=ortho,
    )


def l22_invariant(rep, o=None):
    """Direction invariant of the two-by-two L-shaped surface via the locator.

    With the registry labels the located square is square 1, with
    ``a1 ~ a2`` certified by square 2 and ``b1 ~ b3`` by square 3.
    """
    if o is None:
        from .origami import registry

        o = registry("l22")
    return direction_invariant(rep, o)


# ---------------------------------------------------------------------------
# N4
# ---------------------------------------------------------------------------

def n4_invariant(rep, strict=True):
    """Trace invariant tr(A1)/tr(A2) = tr(B2)/tr(B1) on the N4 surface.

    The diagnostics hold the product residual tr(A1)tr(B1) - tr(A2)tr(B2)
    and the two intermediate identities.  Near trace zeros the ratio is
    undefined: with ``strict`` an :class:`UndefinedRatio` carrying the product
    residual is raised, otherwise the report has ``defined=False``.
    """
    _require_solution(rep)
    a1, a2, b1, b2 = (rep.array(n) for n in ("a1", "a2", "b1", "b2"))
    ta1, ta2, tb1, tb2 = (float(qtrace(q)) for q in (a1, a2, b1, b2))
    product = ta1 * tb1 - ta2 * tb2
    diag = {
        "product_residual": product,
        "trace_ab": float(qtrace(qmul(a1, b1)) - qtrace(qmul(a2, b2))),
        "trace_ab_inv": float(qtrace(qmul(a1, qconj(b1))) - qtrace(qmul(a2, qconj(b2)))),
        "tr_a2": ta2,
        "tr_b1": tb1,
    }
    if abs(ta2) < RATIO_GUARD or abs(tb1) < RATIO_GUARD:
        if strict:
            raise UndefinedRatio("tr(A2) or tr(B1) vanishes", product_residual=product)
        return InvariantReport(None, False, diag)
    ratio = ta1 / ta2
    diag["ratio_gap"] = ratio - tb2 / tb1
    return InvariantReport(ratio, True, diag)


# ---------------------------------------------------------------------------
# orbit drift
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitDrift:
    values: list
    drift: np.ndarray  # per step, distance from the initial value
    max_drift: float
    variance: float


def _as_scalar_or_direction(v):
    if isinstance(v, DirectionPair):
        return v.a_side
    if isinstance(v, InvariantReport):
        return v.value
    return v


def _distance(u, v):
    if isinstance(u, ProjectiveDirection):
        return u.distance(v)
    return float(np.max(np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))))


def orbit_invariance_test(rep, o, candidate, steps, seed=0, max_exponent=1):
    """Track ``candidate(rep)`` along a random twist orbit of ``steps`` letters.

    Every step twists one uniformly chosen cylinder by a uniform nonzero
    exponent of size at most ``max_exponent``.  Values that are direction
    pairs are tracked by their A-side direction.
    """
    rng = rng_for(seed)
    word = random_word(rng, o, steps, max_exponent)
    x = rep.values.copy()
    values = [_as_scalar_or_direction(candidate(rep))]
    drift = [0.0]
    for g in word:
        x = twist_arrays(x, o, g)
        v = _as_scalar_or_direction(candidate(rep.with_values(x)))
        values.append(v)
        drift.append(_distance(values[0], v))
    drift = np.array(drift)
    if isinstance(values[0], ProjectiveDirection):
        variance = float(np.var(drift))
    else:
        variance = float(np.var(np.asarray(values, dtype=float), axis=0).max(initial=0.0))
    return OrbitDrift(values, drift, float(drift.max()), variance)


def spread(values):
    """Largest pairwise distance among directions, or max - min for reals."""
    if values and isinstance(values[0], ProjectiveDirection):
        u = np.array([v.unit() for v in values])
        cos = np.clip(np.abs(u @ u.T), 0.0, 1.0)
        return float(np.arccos(cos.min()))
    arr = np.asarray(values, dtype=float)
    return float(arr.max() - arr.min()) if arr.size else 0.0


def _line_distance(u, v):
    """Projective angular distance between rows of imaginary vectors."""
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.abs(np.sum(u * v, axis=-1))
    return np.arctan2(cross, dot)


def _rectangle_sides(x, pres, rect):
    a_i, a_j, b_i, b_j = (
        H.evaluate_compiled(x, H.compile_word(pres, w)) for w in (rect.left, rect.right, rect.bottom, rect.top)
    )
    return (a_i - a_j)[..., 1:], (b_i - b_j)[..., 1:]


@dataclass(frozen=True)
class BatchDrift:
    max_drift: np.ndarray  # A-side direction against its initial value
    max_pair_distance: np.ndarray  # A-side against B-side at every step
    max_residual: np.ndarray
    min_difference: np.ndarray  # smallest |A_I - A_J| met, for degeneracy checks


def direction_drift_batch(o, x, seeds, steps, rect=None, max_exponent=1):
    """Drift of the direction invariant along random twist orbits of a batch.

    Row ``k`` of ``x`` follows the word drawn from ``seeds[k]`` (see
    :func:`squaretwist.twist.orbit_arrays`).
    """
    from .origami import square_relators

    pres = square_relators(o)
    if rect is None:
        rects = locate_rectangles(o)
        if not rects:
            raise Degenerate("no rectangle with certified conjugate sides")
        rect = rects[0]
    u0, w0 = _rectangle_sides(x, pres, rect)
    drift = np.zeros(len(x))
    pair = _line_distance(u0, w0)
    res = relator_deviation(pres, x).max(axis=-1, initial=0.0)
    smallest = np.linalg.norm(u0, axis=-1)
    for _, _, y in orbit_arrays(x, o, seeds, steps, max_exponent):
        u, w = _rectangle_sides(y, pres, rect)
        drift = np.maximum(drift, _line_distance(u0, u))
        pair = np.maximum(pair, _line_distance(u, w))
        res = np.maximum(res, relator_deviation(pres, y).max(axis=-1, initial=0.0))
        smallest = np.minimum(smallest, np.linalg.norm(u, axis=-1))
    return BatchDrift(drift, pair, res, smallest)
