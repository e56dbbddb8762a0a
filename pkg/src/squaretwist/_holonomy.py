"""Array kernels shared by the samplers and the twist actions.

Origami representations are stored as arrays of shape ``(..., 2d, 4)`` with
rows ``a1..ad`` followed by ``b1..bd``.  Cylinder cycles are one-based, as
returned by :func:`squaretwist.origami.cylinders`.
"""

import numpy as np

from .origami import HORIZONTAL
from .quat import qconj, qexp_axis, qmul, qnormalize, qpow

ONE = np.array([1.0, 0.0, 0.0, 0.0])


def compile_word(presentation, word):
    return [(presentation.index(l.generator), l.exp) for l in word]


def evaluate_compiled(x, compiled):
    """Evaluate a compiled word on arrays ``x`` of shape (..., n_gen, 4)."""
    out = np.broadcast_to(ONE, x.shape[:-2] + (4,)).copy()
    for g, e in compiled:
        q = x[..., g, :]
        out = qmul(out, q if e == 1 else qconj(q))
    return out


def moving_rows(d, direction, cycle):
    """Rows modified by a twist: b's for vertical cylinders, a's for horizontal."""
    offset = 0 if direction == HORIZONTAL else d
    return [offset + i - 1 for i in cycle]


def holonomy_rows(d, direction, cycle):
    """Rows multiplied to form the core holonomy (a's vertical, b's horizontal)."""
    offset = d if direction == HORIZONTAL else 0
    return [offset + i - 1 for i in cycle]


def core_holonomies(x, d, direction, cycle):
    """Core holonomy based at every square of ``cycle``, shape (..., k, 4).

    Entry ``m`` is the product of the holonomy rows read cyclically from
    position ``m``.
    """
    rows = holonomy_rows(d, direction, cycle)
    k = len(rows)
    out = []
    for m in range(k):
        acc = x[..., rows[m], :]
        for step in range(1, k):
            acc = qmul(acc, x[..., rows[(m + step) % k], :])
        out.append(acc)
    return np.stack(out, axis=-2)


def apply_left(x, rows, factors):
    """Left-multiply rows of ``x`` by ``factors`` (..., k, 4); renormalized copy."""
    y = x.copy()
    y[..., rows, :] = qnormalize(qmul(factors, x[..., rows, :]))
    return y


def twist_arrays(x, d, direction, cycle, n):
    if n == 0:
        return x.copy()
    hol = core_holonomies(x, d, direction, cycle)
    return apply_left(x, moving_rows(d, direction, cycle), qpow(hol, n))


def flow_factors(hol, t):
    """One-parameter subgroup elements through each holonomy at time ``t``.

    ``t`` broadcasts against the leading (batch) axes of ``hol``.  Central
    holonomies give NaN rows; callers check :func:`central_mask` first.
    """
    v = hol[..., 1:]
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        axis = v / n
    t = np.asarray(t, dtype=float)[..., None]
    return qexp_axis(axis, t)


def central_mask(hol, tol=1e-12):
    return np.linalg.norm(hol[..., 1:], axis=-1) <= tol


def flow_arrays(x, d, direction, cycle, t):
    hol = core_holonomies(x, d, direction, cycle)
    return apply_left(x, moving_rows(d, direction, cycle), flow_factors(hol, t))
